#pragma once

#include <vector>

#include "ambig/ambiguity.hpp"
#include "ambig/hash.hpp"
#include "ambig/payoff.hpp"
#include "ambig/pde/stepper.hpp"

namespace ambig::pde {

namespace detail {

inline void check_one_dimensional(const MarketModel& model, const AmbiguityRectangle& amb,
                                  const ConstraintSpec& cons) {
    require_valid(model);
    amb.validate();
    if (model.n != 1) {
        fail(ErrorCode::Unsupported, "PDE solvers are one-dimensional; use lsmc_bsde for n > 1");
    }
    if (amb.dim() != 1 || cons.dim() != 1) {
        fail(ErrorCode::DimensionMismatch, "ambiguity/constraint dimension must match n = 1");
    }
}

inline PriceSurface terminal_surface(const Grid& grid, const ClaimSpec& claim, Side side) {
    PriceSurface s;
    s.grid = grid;
    s.side = side;
    s.values.assign(grid.t.size() * grid.nodes_x(), 0.0);
    auto last = s.row(grid.nt());
    for (std::size_t j = 0; j < grid.nodes_x(); ++j) last[j] = claim.terminal.eval_scalar(grid.spot(j));
    return s;
}

/// Sigma used for the hedge at row k (the step that ends at t_k).
inline double row_sigma(const MarketModel& model, const Grid& grid, std::size_t k) {
    const std::size_t kk = std::min(k, grid.nt() - 1);
    return model.sigma_mean(grid.t[kk], grid.t[kk + 1]);
}

}  // namespace detail

/// Fills pi_star = (sigma^T)^{-1} argmin(side * sigma * S dP/dS, B_t) at every node.
inline PriceSurface extract_hedge(PriceSurface surface, const MarketModel& model,
                                  const AmbiguityRectangle& amb, const ConstraintSpec& cons) {
    if (surface.grad.size() != surface.values.size()) fill_gradient(surface);
    surface.pi_star.assign(surface.values.size(), 0.0);
    const double sign = side_sign(surface.side);
    for (std::size_t k = 0; k < surface.grid.t.size(); ++k) {
        const double sigma = detail::row_sigma(model, surface.grid, k);
        const double a = std::isfinite(cons.lo()[0]) ? sigma * cons.lo()[0] : cons.lo()[0];
        const double b = std::isfinite(cons.hi()[0]) ? sigma * cons.hi()[0] : cons.hi()[0];
        for (std::size_t j = 0; j < surface.width(); ++j) {
            const std::size_t i = surface.index(k, j);
            ScalarDistance d = distance_1d(sign * sigma * surface.grad[i], amb.kappa_lo[0],
                                           amb.kappa_hi[0], a, b);
            surface.pi_star[i] = std::clamp(d.z / sigma, cons.lo()[0], cons.hi()[0]);
        }
    }
    return surface;
}

/// Backward theta-scheme solve of the European bid or ask equation.
inline PriceSurface solve_european(const MarketModel& model, const ClaimSpec& claim,
                                   const AmbiguityRectangle& amb, const ConstraintSpec& cons,
                                   const Grid& grid, Side side, const SolverOptions& opts = {}) {
    detail::check_one_dimensional(model, amb, cons);
    PriceSurface s = detail::terminal_surface(grid, claim, side);
    SemilinearStepper stepper(grid, amb, cons, side, opts);
    for (std::size_t k = grid.nt(); k-- > 0;) {
        StepCoefficients c = step_coefficients(model, claim, grid, k, opts.rannacher_steps);
        try {
            stepper.step(c, s.row(k + 1), s.row(k), s.row(k + 1));
        } catch (const Error& e) {
            fail(e.code(), e.detail() + " at time step " + std::to_string(k));
        }
    }
    s.meta_hash = problem_hash(model, claim, amb, cons);
    fill_gradient(s);
    return extract_hedge(std::move(s), model, amb, cons);
}

}  // namespace ambig::pde
