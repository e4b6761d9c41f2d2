#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <limits>
#include <optional>
#include <vector>

#include "ambig/pde/european.hpp"

namespace ambig::vi {

using pde::Grid;
using pde::PriceSurface;
using pde::Side;
using pde::SolverOptions;

struct PenaltyOptions {
    std::vector<double> schedule{1e2, 1e3, 1e4, 1e5, 1e6, 1e7};
    double change_tol = 1e-6;          // stop once successive surfaces agree this well
    double complementarity_tol = 1e-4; // target for the final residual
};

struct PenaltyStep {
    double penalty;
    double change;                 // sup-norm vs previous penalty level (inf for the first)
    double complementarity;        // sup over nodes of |min(R, P - Gamma)|
};

/// Bid surface of the obstacle problem with its diagnostics.
struct AmericanBid {
    PriceSurface surface;
    std::vector<double> obstacle;        // Gamma(S_j)
    std::vector<double> pde_residual;    // R at rows k < nt (row nt left at 0)
    std::vector<double> complementarity; // min(R, P - Gamma) per node
    std::vector<PenaltyStep> penalty_report;
    double complementarity_residual = 0.0;
    double psor_gap = 0.0;  // sup |penalty - PSOR| on the t_0 row
};

struct ExerciseRegion {
    std::vector<std::uint8_t> mask;  // time-major like the surface
    /// Per time row, the spots where the mask switches (geometric midpoints).
    std::vector<std::vector<double>> boundary;
    double eps_reg = 0.0;
};

struct AmericanSolution {
    PriceSurface bid;
    PriceSurface ask;
    ExerciseRegion region;
    std::vector<PenaltyStep> penalty_report;
    double complementarity_residual = 0.0;
    double psor_gap = 0.0;
};

namespace detail {

inline std::vector<double> obstacle_on(const Grid& grid, const ClaimSpec& claim) {
    std::vector<double> g(grid.nodes_x());
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = claim.early_payoff(grid.spot(j));
    return g;
}

inline void check_american(const MarketModel& model, const ClaimSpec& claim, const AmbiguityRectangle& amb,
                           const ConstraintSpec& cons, const Grid& grid) {
    pde::detail::check_one_dimensional(model, amb, cons);
    if (!claim.is_american() || !claim.early) {
        fail(ErrorCode::InvalidClaim, "American pricing needs an American claim with (Gamma1, Gamma2)");
    }
    claim.check_obstacle(grid.spots());
}

/// One full backward sweep at penalty m, warm-started from `warm` when given.
inline PriceSurface penalized_sweep(const MarketModel& model, const ClaimSpec& claim,
                                    const AmbiguityRectangle& amb, const ConstraintSpec& cons,
                                    const Grid& grid, const SolverOptions& opts,
                                    const std::vector<double>& gamma, double penalty,
                                    const PriceSurface* warm) {
    PriceSurface s = pde::detail::terminal_surface(grid, claim, Side::Bid);
    pde::SemilinearStepper stepper(grid, amb, cons, Side::Bid, opts);
    pde::StepObstacle ob{gamma, penalty, {}};
    for (std::size_t k = grid.nt(); k-- > 0;) {
        auto c = pde::step_coefficients(model, claim, grid, k, opts.rannacher_steps);
        auto guess = warm ? warm->row(k) : s.row(k + 1);
        try {
            stepper.step(c, s.row(k + 1), s.row(k), guess, &ob);
        } catch (const Error& e) {
            fail(e.code(), e.detail() + " at time step " + std::to_string(k) +
                               " (penalty " + std::to_string(penalty) + ")");
        }
    }
    return s;
}

}  // namespace detail

/// Discrete residual R of the unpenalized bid equation and the pointwise
/// complementarity min(R, P - Gamma) for a solved surface.
inline void complementarity(const MarketModel& model, const ClaimSpec& claim, const AmbiguityRectangle& amb,
                            const ConstraintSpec& cons, const SolverOptions& opts, AmericanBid& out) {
    const auto& grid = out.surface.grid;
    pde::SemilinearStepper stepper(grid, amb, cons, Side::Bid, opts);
    out.pde_residual.assign(out.surface.values.size(), 0.0);
    out.complementarity.assign(out.surface.values.size(), 0.0);
    double worst = 0.0;
    const std::size_t w = grid.nodes_x();
    for (std::size_t k = 0; k < grid.nt(); ++k) {
        auto c = pde::step_coefficients(model, claim, grid, k, opts.rannacher_steps);
        std::span<double> res(out.pde_residual.data() + k * w, w);
        stepper.residual(c, out.surface.row(k + 1), out.surface.row(k), res);
        for (std::size_t j = 0; j < w; ++j) {
            double m = std::min(res[j], out.surface.value(k, j) - out.obstacle[j]);
            out.complementarity[k * w + j] = m;
            worst = std::max(worst, std::abs(m));
        }
    }
    out.complementarity_residual = worst;
}

/// Projected SOR for A p = rhs subject to p >= gamma, A tridiagonal.
inline int psor(const std::vector<double>& lower, const std::vector<double>& diag,
                const std::vector<double>& upper, const std::vector<double>& rhs,
                std::span<const double> gamma, std::vector<double>& p, double omega = 1.2,
                double tol = 1e-13, int max_iter = 100000) {
    const std::size_t n = diag.size();
    for (int it = 1; it <= max_iter; ++it) {
        double change = 0.0, scale = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            double r = rhs[j];
            if (j > 0) r -= lower[j] * p[j - 1];
            if (j + 1 < n) r -= upper[j] * p[j + 1];
            const double gs = r / diag[j];
            const double v = std::max(gamma[j], p[j] + omega * (gs - p[j]));
            change = std::max(change, std::abs(v - p[j]));
            scale = std::max(scale, std::abs(v));
            p[j] = v;
        }
        if (change <= tol * scale) return it;
    }
    fail(ErrorCode::PenaltyStagnation, "PSOR cross-check did not converge");
}

/// Re-solves the first step as a complementarity problem with the policy frozen
/// at the penalty solution and returns the sup-norm gap to it.
inline double psor_cross_check(const MarketModel& model, const ClaimSpec& claim, const AmbiguityRectangle& amb,
                               const ConstraintSpec& cons, const SolverOptions& opts, const AmericanBid& bid) {
    const auto& grid = bid.surface.grid;
    pde::SemilinearStepper stepper(grid, amb, cons, Side::Bid, opts);
    auto c = pde::step_coefficients(model, claim, grid, 0, opts.rannacher_steps);
    std::vector<double> lower, diag, upper, rhs;
    stepper.assemble(c, bid.surface.row(1), bid.surface.row(0), lower, diag, upper, rhs);
    auto row = bid.surface.row(0);
    std::vector<double> p(row.begin(), row.end());
    for (std::size_t j = 0; j < p.size(); ++j) p[j] = std::max(p[j], bid.obstacle[j]);
    psor(lower, diag, upper, rhs, bid.obstacle, p);
    double gap = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) gap = std::max(gap, std::abs(p[j] - row[j]));
    return gap;
}

/// American bid price: penalized semilinear equation over an increasing penalty
/// schedule, each level warm-started from the previous one.
inline AmericanBid solve_american_bid(const MarketModel& model, const ClaimSpec& claim,
                                      const AmbiguityRectangle& amb, const ConstraintSpec& cons,
                                      const Grid& grid, const PenaltyOptions& pen = {},
                                      const SolverOptions& opts = {}) {
    detail::check_american(model, claim, amb, cons, grid);
    if (pen.schedule.empty()) fail(ErrorCode::InvalidArgument, "penalty schedule is empty");

    AmericanBid out;
    out.obstacle = detail::obstacle_on(grid, claim);
    std::optional<PriceSurface> prev;
    for (double m : pen.schedule) {
        PriceSurface cur = detail::penalized_sweep(model, claim, amb, cons, grid, opts, out.obstacle, m,
                                                   prev ? &*prev : nullptr);
        double change = std::numeric_limits<double>::infinity();
        if (prev) {
            change = 0.0;
            for (std::size_t i = 0; i < cur.values.size(); ++i) {
                change = std::max(change, std::abs(cur.values[i] - prev->values[i]));
            }
        }
        out.surface = cur;
        complementarity(model, claim, amb, cons, opts, out);
        out.penalty_report.push_back({m, change, out.complementarity_residual});
        prev = std::move(cur);
        if (change < pen.change_tol) break;
    }
    const auto& rep = out.penalty_report;
    if (out.complementarity_residual > pen.complementarity_tol && rep.size() > 1 &&
        rep.back().complementarity >= rep.front().complementarity) {
        fail(ErrorCode::PenaltyStagnation, "complementarity residual did not decrease across the schedule");
    }
    out.psor_gap = psor_cross_check(model, claim, amb, cons, opts, out);
    out.surface.meta_hash = problem_hash(model, claim, amb, cons);
    pde::fill_gradient(out.surface);
    out.surface = pde::extract_hedge(std::move(out.surface), model, amb, cons);
    return out;
}

/// Nodes where the bid sits on the obstacle and the obstacle is doing work
/// (positive residual of the unpenalized equation). The terminal row uses
/// Psi == Gamma.
inline ExerciseRegion exercise_region(const AmericanBid& bid, const ClaimSpec& claim,
                                      std::optional<double> eps_reg = std::nullopt) {
    const auto& s = bid.surface;
    const auto& grid = s.grid;
    ExerciseRegion out;
    out.eps_reg = eps_reg.value_or(std::max(bid.complementarity_residual, 1e-5));
    const std::size_t w = grid.nodes_x();
    out.mask.assign(s.values.size(), 0);
    out.boundary.assign(grid.t.size(), {});
    constexpr double active_floor = 1e-6;
    for (std::size_t k = 0; k <= grid.nt(); ++k) {
        for (std::size_t j = 0; j < w; ++j) {
            const double gap = s.value(k, j) - bid.obstacle[j];
            bool on = false;
            if (k == grid.nt()) {
                const double psi = claim.terminal.eval_scalar(grid.spot(j));
                on = std::abs(psi - bid.obstacle[j]) <= out.eps_reg;
            } else {
                on = gap <= out.eps_reg && bid.pde_residual[k * w + j] > active_floor;
            }
            out.mask[k * w + j] = on ? 1 : 0;
        }
        for (std::size_t j = 0; j + 1 < w; ++j) {
            if (out.mask[k * w + j] != out.mask[k * w + j + 1]) {
                out.boundary[k].push_back(std::exp(0.5 * (grid.x[j] + grid.x[j + 1])));
            }
        }
    }
    return out;
}

/// Ask price: the seller's semilinear equation, stopped on the buyer's exercise set.
inline PriceSurface solve_american_ask(const MarketModel& model, const ClaimSpec& claim,
                                       const AmbiguityRectangle& amb, const ConstraintSpec& cons,
                                       const Grid& grid, const AmericanBid& bid, const ExerciseRegion& region,
                                       const SolverOptions& opts = {}) {
    detail::check_american(model, claim, amb, cons, grid);
    PriceSurface s = pde::detail::terminal_surface(grid, claim, Side::Ask);
    pde::SemilinearStepper stepper(grid, amb, cons, Side::Ask, opts);
    const std::size_t w = grid.nodes_x();
    for (std::size_t k = grid.nt(); k-- > 0;) {
        auto c = pde::step_coefficients(model, claim, grid, k, opts.rannacher_steps);
        pde::StepObstacle ob{bid.obstacle, 0.0, {region.mask.data() + k * w, w}};
        try {
            stepper.step(c, s.row(k + 1), s.row(k), s.row(k + 1), &ob);
        } catch (const Error& e) {
            fail(e.code(), e.detail() + " at time step " + std::to_string(k));
        }
    }
    s.exercise = region.mask;
    s.meta_hash = problem_hash(model, claim, amb, cons);
    pde::fill_gradient(s);
    return pde::extract_hedge(std::move(s), model, amb, cons);
}

/// Bid, exercise region and ask in one call.
inline AmericanSolution solve_american(const MarketModel& model, const ClaimSpec& claim,
                                       const AmbiguityRectangle& amb, const ConstraintSpec& cons,
                                       const Grid& grid, const PenaltyOptions& pen = {},
                                       const SolverOptions& opts = {}) {
    AmericanBid bid = solve_american_bid(model, claim, amb, cons, grid, pen, opts);
    ExerciseRegion region = exercise_region(bid, claim);
    AmericanSolution out;
    out.ask = solve_american_ask(model, claim, amb, cons, grid, bid, region, opts);
    bid.surface.exercise = region.mask;
    out.bid = std::move(bid.surface);
    out.region = std::move(region);
    out.penalty_report = std::move(bid.penalty_report);
    out.complementarity_residual = bid.complementarity_residual;
    out.psor_gap = bid.psor_gap;
    return out;
}

}  // namespace ambig::vi
