#pragma once

#include <cmath>
#include <vector>

#include "ambig/model.hpp"

namespace ambig::pde {

/// Uniform grid in log-price x = ln S and calendar time t.
///
/// `nx` and `nt` count intervals, so the anchor spot is a node when nx is even.
struct Grid {
    std::vector<double> x;
    std::vector<double> t;
    double s_anchor = 100.0;
    double width_mult = 6.0;

    static Grid make(const MarketModel& model, double s_anchor, int nx, int nt, double width_mult = 6.0) {
        if (nx < 50 || nt < 50) fail(ErrorCode::InvalidArgument, "grid needs at least 50 x 50 intervals");
        if (!(s_anchor > 0.0) || !(width_mult > 0.0)) {
            fail(ErrorCode::InvalidArgument, "grid anchor and width multiplier must be positive");
        }
        const double T = model.horizon;
        const double half = width_mult * model.sigma_rms(0.0, T) * std::sqrt(T);
        const double xc = std::log(s_anchor);
        Grid g;
        g.s_anchor = s_anchor;
        g.width_mult = width_mult;
        g.x.resize(static_cast<std::size_t>(nx) + 1);
        g.t.resize(static_cast<std::size_t>(nt) + 1);
        for (int j = 0; j <= nx; ++j) g.x[static_cast<std::size_t>(j)] = xc - half + 2.0 * half * j / nx;
        for (int k = 0; k <= nt; ++k) g.t[static_cast<std::size_t>(k)] = T * k / nt;
        g.x[static_cast<std::size_t>(nx / 2)] = nx % 2 == 0 ? xc : g.x[static_cast<std::size_t>(nx / 2)];
        g.t.back() = T;
        return g;
    }

    std::size_t nx() const { return x.size() - 1; }
    std::size_t nt() const { return t.size() - 1; }
    std::size_t nodes_x() const { return x.size(); }
    double h() const { return (x.back() - x.front()) / static_cast<double>(nx()); }
    double spot(std::size_t j) const { return std::exp(x[j]); }

    std::vector<double> spots() const {
        std::vector<double> s(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) s[j] = std::exp(x[j]);
        return s;
    }

    /// Node range [lo, hi] left after trimming `frac` of the nodes at each end.
    std::pair<std::size_t, std::size_t> trimmed(double frac) const {
        auto cut = static_cast<std::size_t>(std::ceil(frac * static_cast<double>(nx())));
        return {cut, nx() - cut};
    }
};

}  // namespace ambig::pde
