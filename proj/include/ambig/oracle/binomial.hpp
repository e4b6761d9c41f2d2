#pragma once

#include <cmath>
#include <vector>

#include "ambig/error.hpp"
#include "ambig/payoff.hpp"

namespace ambig::oracle {

struct TreeParams {
    double s0 = 100.0;
    double rate = 0.05;
    double dividend = 0.0;
    double sigma = 0.2;
    double maturity = 1.0;
    int steps = 2000;
};

struct TreeResult {
    double price = 0.0;
    /// Per tree level k (t = k dt): spots where exercise switches on/off,
    /// at geometric midpoints between neighbouring nodes. American only.
    std::vector<std::vector<double>> boundary;
    std::vector<double> times;
};

namespace detail {

struct Lattice {
    double u, d, p, disc;
};

// CRR when its probability is proper, otherwise a drift-centred tree.
inline Lattice lattice(const TreeParams& tp) {
    const double dt = tp.maturity / tp.steps;
    const double growth = std::exp((tp.rate - tp.dividend) * dt);
    Lattice l{std::exp(tp.sigma * std::sqrt(dt)), 0.0, 0.0, std::exp(-tp.rate * dt)};
    l.d = 1.0 / l.u;
    l.p = (growth - l.d) / (l.u - l.d);
    if (!(l.p > 0.0 && l.p < 1.0)) {
        const double mu = (tp.rate - tp.dividend - 0.5 * tp.sigma * tp.sigma) * dt;
        l.u = std::exp(mu + tp.sigma * std::sqrt(dt));
        l.d = std::exp(mu - tp.sigma * std::sqrt(dt));
        l.p = (growth - l.d) / (l.u - l.d);
    }
    return l;
}

}  // namespace detail

/// Recombining tree for payoff psi (and early payoff gamma when American).
inline TreeResult binomial_tree(const TreeParams& tp, const PayoffDescriptor& psi,
                                const PayoffDescriptor* gamma, ExerciseStyle style, bool record_boundary = false) {
    if (tp.steps < 1) fail(ErrorCode::InvalidArgument, "binomial tree needs at least one step");
    if (!(tp.s0 > 0.0) || !(tp.sigma > 0.0) || !(tp.maturity > 0.0)) {
        fail(ErrorCode::InvalidArgument, "binomial tree needs positive spot, volatility and maturity");
    }
    const bool american = style == ExerciseStyle::American;
    if (american && !gamma) gamma = &psi;
    const detail::Lattice l = detail::lattice(tp);
    const int n = tp.steps;
    const double dt = tp.maturity / n;
    const double lu = std::log(l.u), ld = std::log(l.d), l0 = std::log(tp.s0);
    auto spot = [&](int k, int i) { return std::exp(l0 + i * lu + (k - i) * ld); };

    std::vector<double> v(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) v[static_cast<std::size_t>(i)] = psi.eval_scalar(spot(n, i));

    TreeResult out;
    if (record_boundary && american) {
        out.boundary.resize(static_cast<std::size_t>(n) + 1);
        out.times.resize(static_cast<std::size_t>(n) + 1);
        for (int k = 0; k <= n; ++k) out.times[static_cast<std::size_t>(k)] = k * dt;
    }
    std::vector<std::uint8_t> ex(static_cast<std::size_t>(n) + 1);
    for (int k = n - 1; k >= 0; --k) {
        for (int i = 0; i <= k; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            double cont = l.disc * (l.p * v[ii + 1] + (1.0 - l.p) * v[ii]);
            ex[ii] = 0;
            if (american) {
                const double g = gamma->eval_scalar(spot(k, i));
                if (g > cont) {
                    cont = g;
                    ex[ii] = 1;
                }
            }
            v[ii] = cont;
        }
        if (!out.boundary.empty()) {
            for (int i = 0; i < k; ++i) {
                if (ex[static_cast<std::size_t>(i)] != ex[static_cast<std::size_t>(i) + 1]) {
                    out.boundary[static_cast<std::size_t>(k)].push_back(
                        std::sqrt(spot(k, i) * spot(k, i + 1)));
                }
            }
        }
    }
    out.price = v[0];
    return out;
}

/// Price only.
inline double binomial_price(const TreeParams& tp, const PayoffDescriptor& psi, ExerciseStyle style) {
    return binomial_tree(tp, psi, nullptr, style).price;
}

}  // namespace ambig::oracle
