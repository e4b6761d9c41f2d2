#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ambig/error.hpp"
#include "ambig/pde/grid.hpp"

namespace ambig::pde {

enum class Side { Bid, Ask };

inline const char* to_string(Side s) { return s == Side::Bid ? "bid" : "ask"; }
/// +1 for bid, -1 for ask: the argument of d_O is sign * sigma * S dP/dS.
inline double side_sign(Side s) { return s == Side::Bid ? 1.0 : -1.0; }

/// Grid-sampled prices, time-major: values[k * (nx+1) + j] at (t_k, x_j).
struct PriceSurface {
    Grid grid;
    Side side = Side::Bid;
    std::vector<double> values;
    std::vector<double> grad;     // S dP/dS
    std::vector<double> pi_star;  // optimal dollar position in the asset
    std::vector<std::uint8_t> exercise;  // American only; empty otherwise
    std::uint64_t meta_hash = 0;

    std::size_t width() const { return grid.nodes_x(); }
    std::size_t index(std::size_t k, std::size_t j) const { return k * width() + j; }
    double value(std::size_t k, std::size_t j) const { return values[index(k, j)]; }
    std::span<const double> row(std::size_t k) const {
        return {values.data() + k * width(), width()};
    }
    std::span<double> row(std::size_t k) { return {values.data() + k * width(), width()}; }

    /// dP/dS at a node.
    double delta(std::size_t k, std::size_t j) const { return grad[index(k, j)] / grid.spot(j); }
};

/// S dP/dS of one time row: centred inside, one-sided at both ends. The
/// differences are taken in S, so they are exact for P = a + b S.
inline void log_gradient(std::span<const double> p, double h, std::span<double> out) {
    const std::size_t n = p.size();
    out[0] = (p[1] - p[0]) / std::expm1(h);
    out[n - 1] = (p[n - 1] - p[n - 2]) / -std::expm1(-h);
    const double central = 2.0 * std::sinh(h);
    for (std::size_t j = 1; j + 1 < n; ++j) out[j] = (p[j + 1] - p[j - 1]) / central;
}

inline void fill_gradient(PriceSurface& s) {
    s.grad.assign(s.values.size(), 0.0);
    const double h = s.grid.h();
    for (std::size_t k = 0; k < s.grid.t.size(); ++k) {
        log_gradient(s.row(k), h, {s.grad.data() + s.index(k, 0), s.width()});
    }
}

/// Bilinear interpolation in (t, ln S).
inline double query_price(const PriceSurface& s, double t, double S) {
    const auto& g = s.grid;
    if (!(S > 0.0)) fail(ErrorCode::OutOfHull, "query needs S > 0");
    const double x = std::log(S);
    const double eps = 1e-12;
    if (t < g.t.front() - eps || t > g.t.back() + eps || x < g.x.front() - eps || x > g.x.back() + eps) {
        fail(ErrorCode::OutOfHull, "query point outside grid hull");
    }
    auto locate = [](const std::vector<double>& nodes, double v) {
        auto it = std::upper_bound(nodes.begin(), nodes.end(), v);
        std::size_t i = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
        i = std::min(i, nodes.size() - 2);
        double w = (v - nodes[i]) / (nodes[i + 1] - nodes[i]);
        return std::pair{i, std::clamp(w, 0.0, 1.0)};
    };
    auto [k, wt] = locate(g.t, t);
    auto [j, wx] = locate(g.x, x);
    auto lerp = [&](std::size_t kk) {
        double a = s.value(kk, j), b = s.value(kk, j + 1);
        return wx == 0.0 ? a : (wx == 1.0 ? b : a + wx * (b - a));
    };
    double lo = lerp(k), hi = lerp(k + 1);
    return wt == 0.0 ? lo : (wt == 1.0 ? hi : lo + wt * (hi - lo));
}

}  // namespace ambig::pde
