#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ambig/analytic.hpp"
#include "ambig/oracle/paths.hpp"
#include "ambig/pde/surface.hpp"

namespace ambig::oracle {

/// Discounted earnings plus discounted terminal payoff, averaged over paths.
inline McEstimate mc_risk_neutral(const MarketModel& model, const ClaimSpec& claim, const Vector& s0,
                                  std::size_t paths, int steps, std::uint64_t seed) {
    if (claim.is_american()) fail(ErrorCode::Unsupported, "mc_risk_neutral prices European claims only");
    PathSet ps = simulate_paths(model, s0, steps, paths, seed);
    const double df = discount(model, 0.0, model.horizon);
    const double earn = discounted_earnings(model, claim.earnings, 0.0, model.horizon);
    std::vector<double> x(paths);
    for (std::size_t p = 0; p < paths; ++p) {
        x[p] = earn + df * payoff_eval(claim.terminal, ps.spot(steps, p));
    }
    return summarize(x, seed);
}

namespace detail {

/// Bilinear read of a per-node field of the surface, spot clamped to the grid.
inline double surface_field(const pde::PriceSurface& s, const std::vector<double>& field, double t, double S) {
    const auto& g = s.grid;
    const double x = std::clamp(std::log(S), g.x.front(), g.x.back());
    t = std::clamp(t, g.t.front(), g.t.back());
    auto locate = [](const std::vector<double>& nodes, double v) {
        auto it = std::upper_bound(nodes.begin(), nodes.end(), v);
        std::size_t i = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
        i = std::min(i, nodes.size() - 2);
        return std::pair{i, std::clamp((v - nodes[i]) / (nodes[i + 1] - nodes[i]), 0.0, 1.0)};
    };
    auto [k, wt] = locate(g.t, t);
    auto [j, wx] = locate(g.x, x);
    auto at = [&](std::size_t kk) {
        return (1.0 - wx) * field[s.index(kk, j)] + wx * field[s.index(kk, j + 1)];
    };
    return (1.0 - wt) * at(k) + wt * at(k + 1);
}

}  // namespace detail

/// Replication error X_T - Psi(S_T) of the self-financing strategy read from
/// the surface's hedge, started from X_0 = P(0, S_0) with S_0 the grid anchor.
/// The seller holds S dP/dS: that is -pi_star for a bid surface and +pi_star
/// for an ask surface. Running earnings are paid out of the portfolio.
inline McEstimate simulate_hedge_pnl(const MarketModel& model, const pde::PriceSurface& surface,
                                     const ClaimSpec& claim, const AmbiguityRectangle& amb,
                                     const ConstraintSpec& cons, std::size_t paths, int steps,
                                     std::uint64_t seed) {
    if (cons.kind() != ConstraintKind::Unconstrained || !amb.is_trivial()) {
        fail(ErrorCode::Refused,
             "hedge replication holds only without constraints and ambiguity (kappa = 0, unconstrained)");
    }
    if (model.n != 1) fail(ErrorCode::Unsupported, "hedge simulation is one-dimensional");
    if (claim.is_american()) fail(ErrorCode::Unsupported, "hedge simulation covers European claims");
    if (surface.pi_star.size() != surface.values.size()) {
        fail(ErrorCode::InvalidArgument, "surface carries no hedge");
    }
    const double s0 = surface.grid.s_anchor;
    const double x0 = pde::query_price(surface, 0.0, s0);
    const double sign = surface.side == pde::Side::Bid ? -1.0 : 1.0;
    // interpolate shares rather than dollar positions: exact for constant deltas,
    // and beyond the grid the edge delta is held as the closure assumes
    std::vector<double> shares(surface.pi_star.size());
    for (std::size_t k = 0; k < surface.grid.t.size(); ++k) {
        for (std::size_t j = 0; j < surface.grid.nodes_x(); ++j) {
            shares[surface.index(k, j)] = surface.pi_star[surface.index(k, j)] / surface.grid.spot(j);
        }
    }
    PathSet ps = simulate_paths(model, Vector::Constant(1, s0), steps, paths, seed);

    std::vector<double> growth(static_cast<std::size_t>(steps)), payout(static_cast<std::size_t>(steps));
    for (int k = 0; k < steps; ++k) {
        const double a = ps.times[static_cast<std::size_t>(k)], b = ps.times[static_cast<std::size_t>(k) + 1];
        growth[static_cast<std::size_t>(k)] = 1.0 / discount(model, a, b);
        payout[static_cast<std::size_t>(k)] =
            discounted_earnings(model, claim.earnings, a, b) * growth[static_cast<std::size_t>(k)];
    }
    std::vector<double> pnl(paths);
    for (std::size_t p = 0; p < paths; ++p) {
        double X = x0;
        for (int k = 0; k < steps; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            const double S = std::exp(ps.log_spot(k, p));
            const double S1 = std::exp(ps.log_spot(k + 1, p));
            const double pos = sign * detail::surface_field(surface, shares, ps.times[kk], S) * S;
            X = (X - pos) * growth[kk] + pos * S1 / S - payout[kk];
        }
        pnl[p] = X - claim.terminal.eval_scalar(std::exp(ps.log_spot(steps, p)));
    }
    return summarize(pnl, seed);
}

}  // namespace ambig::oracle
