#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ambig/ambiguity.hpp"
#include "ambig/payoff.hpp"
#include "ambig/pde/grid.hpp"
#include "ambig/pde/surface.hpp"
#include "ambig/pde/tridiagonal.hpp"

namespace ambig::pde {

struct SolverOptions {
    double picard_tol = 1e-10;  // sup-norm change, relative to max(1, |P|)
    int picard_max = 50;
    int rannacher_steps = 4;    // fully implicit steps before Crank-Nicolson
};

/// Coefficients frozen over one backward step [t_k, t_{k+1}].
struct StepCoefficients {
    double dtau = 0.0;
    double theta = 0.5;
    double rate = 0.0;       // mean r
    double sigma2 = 0.0;     // mean sigma^2 (diffusion)
    double sigma = 0.0;      // mean sigma (argument of d_O and B_t)
    double earnings = 0.0;   // mean earnings rate
};

/// Optional obstacle handling for a step.
struct StepObstacle {
    std::span<const double> gamma;          // obstacle at t_k
    double penalty = 0.0;                   // m; 0 disables the penalty term
    std::span<const std::uint8_t> pinned;   // nodes fixed to gamma (empty: none)
};

struct StepReport {
    int iterations = 0;
    double change = 0.0;
};

/// One backward theta-step of
///   -P_t - L_0 P = earnings - side * d_O(side * sigma * P_x, B_t)
/// in log-price, where side = +1 (bid) or -1 (ask).
///
/// The d_O term is resolved by frozen-gradient iteration: at the current
/// iterate each node gets the minimizer z* and the active kernel c (kappa_hi,
/// -kappa_lo or 0 by the sign of the residual exposure), which makes the term
/// linear, c * (side * sigma * P_x + z*). The c * sigma part moves into the
/// drift, so upwinding can react to the effective dividend.
class SemilinearStepper {
public:
    SemilinearStepper(const Grid& grid, const AmbiguityRectangle& amb, const ConstraintSpec& cons,
                      Side side, SolverOptions opts)
        : grid_(grid), side_(side), sign_(side_sign(side)), opts_(opts),
          kl_(amb.kappa_lo[0]), kh_(amb.kappa_hi[0]), lo_(cons.lo()[0]), hi_(cons.hi()[0]) {
        const std::size_t n = grid.nodes_x();
        for (auto* v : {&c_new_, &z_new_, &c_old_, &z_old_, &lower_, &diag_, &upper_, &rhs_, &cst_,
                        &scratch_, &grad_, &iter_, &next_, &op_old_}) {
            v->assign(n, 0.0);
        }
    }

    /// Fitted reaction coefficient: the step maps a constant c to c * exp(-r dtau) exactly.
    static double fitted_reaction(double r, double dtau, double theta) {
        if (r == 0.0) return 0.0;
        const double e = std::exp(-r * dtau);
        return (1.0 - e) / (((1.0 - theta) + theta * e) * dtau);
    }

    /// Source so that constant earnings accumulate as int exp(-r s) ds exactly.
    static double fitted_source(const StepCoefficients& c, double rho) {
        if (c.earnings == 0.0) return 0.0;
        const double phi = c.rate == 0.0 ? c.dtau : -std::expm1(-c.rate * c.dtau) / c.rate;
        return c.earnings * phi * (1.0 + c.theta * rho * c.dtau) / c.dtau;
    }

    /// Advances `old` (at t_{k+1}) to `out` (at t_k). `guess` seeds the iteration.
    StepReport step(const StepCoefficients& c, std::span<const double> old, std::span<double> out,
                    std::span<const double> guess, const StepObstacle* obstacle = nullptr) {
        const std::size_t n = old.size();
        const double rho = fitted_reaction(c.rate, c.dtau, c.theta);
        const double src = fitted_source(c, rho);

        // explicit part at the old level
        policy(old, c.sigma, c_old_, z_old_);
        rows(c, rho, c_old_, z_old_);
        for (std::size_t j = 0; j < n; ++j) op_old_[j] = apply_row(j, old) + cst_[j];

        std::copy(guess.begin(), guess.end(), iter_.begin());
        StepReport rep;
        for (int it = 1; it <= opts_.picard_max; ++it) {
            policy(iter_, c.sigma, c_new_, z_new_);
            rows(c, rho, c_new_, z_new_);
            for (std::size_t j = 0; j < n; ++j) {
                rhs_[j] = old[j] + (1.0 - c.theta) * c.dtau * op_old_[j] + c.dtau * src +
                          c.theta * c.dtau * cst_[j];
                lower_[j] *= -c.theta * c.dtau;
                upper_[j] *= -c.theta * c.dtau;
                diag_[j] = 1.0 - c.theta * c.dtau * diag_[j];
            }
            if (obstacle) apply_obstacle(*obstacle, c.dtau);
            solve_tridiagonal(lower_, diag_, upper_, rhs_, next_, scratch_);

            double change = 0.0, scale = 1.0;
            for (std::size_t j = 0; j < n; ++j) {
                change = std::max(change, std::abs(next_[j] - iter_[j]));
                scale = std::max(scale, std::abs(next_[j]));
            }
            std::swap(iter_, next_);
            rep.iterations = it;
            rep.change = change;
            if (change <= opts_.picard_tol * scale) {
                std::copy(iter_.begin(), iter_.end(), out.begin());
                return rep;
            }
        }
        fail(ErrorCode::PicardNonConvergence,
             "frozen-gradient iteration did not converge (last change " + std::to_string(rep.change) +
                 ")");
    }

    /// Linear system of one step with the policy frozen at `at` (no obstacle):
    /// lower/diag/upper and rhs such that the step solves A P_k = rhs.
    void assemble(const StepCoefficients& c, std::span<const double> old, std::span<const double> at,
                  std::vector<double>& lower, std::vector<double>& diag, std::vector<double>& upper,
                  std::vector<double>& rhs) {
        const std::size_t n = old.size();
        const double rho = fitted_reaction(c.rate, c.dtau, c.theta);
        const double src = fitted_source(c, rho);
        policy(old, c.sigma, c_old_, z_old_);
        rows(c, rho, c_old_, z_old_);
        for (std::size_t j = 0; j < n; ++j) op_old_[j] = apply_row(j, old) + cst_[j];
        policy(at, c.sigma, c_new_, z_new_);
        rows(c, rho, c_new_, z_new_);
        lower.resize(n);
        diag.resize(n);
        upper.resize(n);
        rhs.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            rhs[j] = old[j] + (1.0 - c.theta) * c.dtau * op_old_[j] + c.dtau * src + c.theta * c.dtau * cst_[j];
            lower[j] = -c.theta * c.dtau * lower_[j];
            upper[j] = -c.theta * c.dtau * upper_[j];
            diag[j] = 1.0 - c.theta * c.dtau * diag_[j];
        }
    }

    /// Discrete residual of the unpenalized equation at a solved step:
    /// (P_k - P_{k+1})/dtau - theta L P_k - (1-theta) L P_{k+1} - source.
    void residual(const StepCoefficients& c, std::span<const double> old, std::span<const double> now,
                  std::span<double> out) {
        const std::size_t n = old.size();
        const double rho = fitted_reaction(c.rate, c.dtau, c.theta);
        const double src = fitted_source(c, rho);
        policy(old, c.sigma, c_old_, z_old_);
        rows(c, rho, c_old_, z_old_);
        for (std::size_t j = 0; j < n; ++j) op_old_[j] = apply_row(j, old) + cst_[j];
        policy(now, c.sigma, c_new_, z_new_);
        rows(c, rho, c_new_, z_new_);
        for (std::size_t j = 0; j < n; ++j) {
            double op_new = apply_row(j, now) + cst_[j];
            out[j] = (now[j] - old[j]) / c.dtau - c.theta * op_new - (1.0 - c.theta) * op_old_[j] - src;
        }
    }

private:
    // Kernel c_j and minimizer z*_j at the gradient of p.
    void policy(std::span<const double> p, double sigma, std::vector<double>& cc,
                std::vector<double>& zz) {
        log_gradient(p, grid_.h(), grad_);
        const double a = std::isfinite(lo_) ? sigma * lo_ : lo_;
        const double b = std::isfinite(hi_) ? sigma * hi_ : hi_;
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double zbar = sign_ * sigma * grad_[j];
            ScalarDistance d = distance_1d(zbar, kl_, kh_, a, b);
            const double w = zbar + d.z;
            cc[j] = w > 0.0 ? kh_ : (w < 0.0 ? -kl_ : 0.0);
            zz[j] = d.z;
        }
    }

    // Operator rows L (without time factor) into lower_/diag_/upper_ and cst_.
    // In x = ln S the operator is a (P_xx - P_x) + mu P_x - rho P with
    // mu = rho - c sigma. Every stencil below is exact on P = a + b S, so the
    // scheme carries constants and the stock itself without error.
    void rows(const StepCoefficients& c, double rho, const std::vector<double>& cc,
              const std::vector<double>& zz) {
        const std::size_t n = cc.size();
        const double h = grid_.h();
        const double a = 0.5 * c.sigma2;
        // a (P_xx - P_x) with weights annihilating 1 and e^x
        const double wl = a * 2.0 / (h * h * (1.0 + std::exp(-h)));
        const double wu = wl * std::exp(-h);
        const double fwd = std::expm1(h), bwd = -std::expm1(-h), cen = 2.0 * std::sinh(h);
        for (std::size_t j = 0; j < n; ++j) {
            cst_[j] = -sign_ * cc[j] * zz[j];
            const double mu = rho - cc[j] * c.sigma;
            if (j == 0 || j + 1 == n) {
                // S-linear far field: P_xx = P_x, one-sided inward difference
                if (j == 0) {
                    lower_[j] = 0.0;
                    upper_[j] = mu / fwd;
                    diag_[j] = -mu / fwd - rho;
                } else {
                    upper_[j] = 0.0;
                    lower_[j] = -mu / bwd;
                    diag_[j] = mu / bwd - rho;
                }
                continue;
            }
            if (wl - mu / cen >= 0.0 && wu + mu / cen >= 0.0) {
                lower_[j] = wl - mu / cen;
                upper_[j] = wu + mu / cen;
                diag_[j] = -wl - wu - rho;
            } else if (mu > 0.0) {
                lower_[j] = wl;
                upper_[j] = wu + mu / fwd;
                diag_[j] = -wl - wu - mu / fwd - rho;
            } else {
                lower_[j] = wl - mu / bwd;
                upper_[j] = wu;
                diag_[j] = -wl - wu + mu / bwd - rho;
            }
        }
    }

    double apply_row(std::size_t j, std::span<const double> p) const {
        double v = diag_[j] * p[j];
        if (j > 0) v += lower_[j] * p[j - 1];
        if (j + 1 < p.size()) v += upper_[j] * p[j + 1];
        return v;
    }

    void apply_obstacle(const StepObstacle& ob, double dtau) {
        const std::size_t n = diag_.size();
        if (!ob.pinned.empty()) {
            for (std::size_t j = 0; j < n; ++j) {
                if (!ob.pinned[j]) continue;
                lower_[j] = upper_[j] = 0.0;
                diag_[j] = 1.0;
                rhs_[j] = ob.gamma[j];
            }
        }
        if (ob.penalty > 0.0) {
            // m (Gamma - P)^+ with the active set frozen at the current iterate
            for (std::size_t j = 0; j < n; ++j) {
                if ((ob.pinned.empty() || !ob.pinned[j]) && iter_[j] < ob.gamma[j]) {
                    diag_[j] += dtau * ob.penalty;
                    rhs_[j] += dtau * ob.penalty * ob.gamma[j];
                }
            }
        }
    }

    const Grid& grid_;
    Side side_;
    double sign_;
    SolverOptions opts_;
    double kl_, kh_, lo_, hi_;
    std::vector<double> c_new_, z_new_, c_old_, z_old_;
    std::vector<double> lower_, diag_, upper_, rhs_, cst_, scratch_, grad_, iter_, next_, op_old_;
};

/// Step coefficients for [t_k, t_{k+1}]; theta = 1 for the first `rannacher` steps from maturity.
inline StepCoefficients step_coefficients(const MarketModel& model, const ClaimSpec& claim,
                                          const Grid& grid, std::size_t k, int rannacher) {
    const double a = grid.t[k], b = grid.t[k + 1];
    StepCoefficients c;
    c.dtau = b - a;
    const auto from_maturity = static_cast<int>(grid.nt() - 1 - k);
    c.theta = from_maturity < rannacher ? 1.0 : 0.5;
    c.rate = model.rate_mean(a, b);
    const double rms = model.sigma_rms(a, b);
    c.sigma2 = rms * rms;
    c.sigma = model.sigma_mean(a, b);
    c.earnings = claim.earnings.average(a, b);
    return c;
}

}  // namespace ambig::pde
