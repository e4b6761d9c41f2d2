#pragma once

#include <cmath>
#include <vector>

#include <Eigen/QR>

#include "ambig/ambiguity.hpp"
#include "ambig/oracle/paths.hpp"
#include "ambig/payoff.hpp"
#include "ambig/pde/surface.hpp"

namespace ambig::oracle {

struct LsmcOptions {
    int steps = 50;
    std::size_t paths = 100000;
    int basis_degree = 4;
    std::uint64_t seed = 1;
    bool picard_correction = false;  // re-evaluate the driver once at the fitted U
};

namespace detail {

// Exponents of all monomials of total degree <= d in n variables.
inline std::vector<std::vector<int>> monomials(int n, int d) {
    std::vector<std::vector<int>> out;
    std::vector<int> e(static_cast<std::size_t>(n), 0);
    auto rec = [&](auto&& self, int i, int left) -> void {
        if (i == n) {
            out.push_back(e);
            return;
        }
        for (int p = 0; p <= left; ++p) {
            e[static_cast<std::size_t>(i)] = p;
            self(self, i + 1, left - p);
        }
        e[static_cast<std::size_t>(i)] = 0;
    };
    rec(rec, 0, d);
    return out;
}

// Polynomials in standardized ln S at time step k.
inline Matrix basis(const PathSet& ps, int k, const std::vector<std::vector<int>>& mono) {
    const auto P = static_cast<Eigen::Index>(ps.paths);
    Matrix x(P, ps.n);
    for (int i = 0; i < ps.n; ++i) {
        double mean = 0.0, ss = 0.0;
        for (std::size_t p = 0; p < ps.paths; ++p) mean += ps.log_spot(k, p, i);
        mean /= static_cast<double>(ps.paths);
        for (std::size_t p = 0; p < ps.paths; ++p) ss += std::pow(ps.log_spot(k, p, i) - mean, 2);
        const double sd = std::sqrt(ss / static_cast<double>(ps.paths));
        for (std::size_t p = 0; p < ps.paths; ++p) {
            x(static_cast<Eigen::Index>(p), i) = sd > 0.0 ? (ps.log_spot(k, p, i) - mean) / sd : 0.0;
        }
    }
    Matrix phi(P, static_cast<Eigen::Index>(mono.size()));
    for (std::size_t c = 0; c < mono.size(); ++c) {
        for (Eigen::Index p = 0; p < P; ++p) {
            double v = 1.0;
            for (int i = 0; i < ps.n; ++i) v *= std::pow(x(p, i), mono[c][static_cast<std::size_t>(i)]);
            phi(p, static_cast<Eigen::Index>(c)) = v;
        }
    }
    return phi;
}

struct SideState {
    double sign;
    Vector u;       // pathwise U: at k+1 on entry, at k on exit
    Vector fitted;  // conditional expectation of u at k
};

}  // namespace detail

/// Least-squares Monte Carlo for the bid/ask pricing BSDE (reflected at the
/// early payoff for American claims).
///
/// Each path carries U_k = U_{k+1} + f(t_k, U_{k+1}, Z_k) dt, the martingale
/// part left implicit; Z_k and E_k[U_k] come from regressions on the basis.
/// Reflection adds (Gamma - E_k[U_k])^+ to the bid. The estimate is the path
/// average at t = 0.
inline McEstimate lsmc_bsde(const MarketModel& model, const ClaimSpec& claim, const AmbiguityRectangle& amb,
                            const ConstraintSpec& cons, pde::Side side, const Vector& s0,
                            const LsmcOptions& opt = {}) {
    require_valid(model);
    amb.validate();
    const int n = model.n;
    if (amb.dim() != n || cons.dim() != n) {
        fail(ErrorCode::DimensionMismatch, "ambiguity/constraint must have n entries");
    }
    if (opt.paths < 1000) fail(ErrorCode::InvalidArgument, "lsmc needs at least 1000 paths");
    if (opt.basis_degree < 0) fail(ErrorCode::InvalidArgument, "basis degree must be nonnegative");
    const bool american = claim.is_american();
    if (american && !claim.early) fail(ErrorCode::InvalidClaim, "American claim needs its early payoff pair");

    const PathSet ps = simulate_paths(model, s0, opt.steps, opt.paths, opt.seed);
    const auto P = static_cast<Eigen::Index>(opt.paths);
    const auto mono = detail::monomials(n, opt.basis_degree);

    auto gamma_at = [&](const Vector& S) {
        return std::max(payoff_eval(claim.early->first, S), payoff_eval(claim.early->second, S));
    };

    // the ask of an American claim is stopped on the bid's exercise set, so the
    // bid recursion runs alongside it
    std::vector<detail::SideState> sides;
    if (side == pde::Side::Bid || american) sides.push_back({1.0, Vector(P), Vector(P)});
    if (side == pde::Side::Ask) sides.push_back({-1.0, Vector(P), Vector(P)});
    for (Eigen::Index p = 0; p < P; ++p) {
        const double v = payoff_eval(claim.terminal, ps.spot(opt.steps, static_cast<std::size_t>(p)));
        for (auto& s : sides) s.u[p] = v;
    }

    const bool diag = is_diagonal(model.vol.at(0.0));
    Matrix target(P, n);
    Vector z(n), f(P);
    for (int k = opt.steps - 1; k >= 0; --k) {
        const auto kk = static_cast<std::size_t>(k);
        const double a = ps.times[kk], b = ps.times[kk + 1], dt = b - a;
        const double r = model.rate_mean(a, b);
        const double rho = claim.earnings.average(a, b);
        const Matrix& sig = ps.sigma[kk];
        const bool use_1d = n == 1 || (diag && is_diagonal(sig));

        Eigen::ColPivHouseholderQR<Matrix> qr;
        Matrix phi;
        if (k > 0) {
            phi = detail::basis(ps, k, mono);
            if (american) {
                phi.conservativeResize(Eigen::NoChange, phi.cols() + 1);
                for (Eigen::Index p = 0; p < P; ++p) phi(p, phi.cols() - 1) = gamma_at(ps.spot(k, static_cast<std::size_t>(p)));
            }
            qr.compute(phi);
            if (qr.rank() < phi.cols()) {
                fail(ErrorCode::IllConditioned, "regression basis is rank deficient at step " + std::to_string(k) +
                                                    " (lower basis_degree or add paths)");
            }
        }
        auto project = [&](const Matrix& t) -> Matrix {
            if (k > 0) return phi * qr.solve(t);
            // all paths share S_0: the conditional mean is the sample mean
            Matrix m = t.colwise().mean();
            return m.replicate(P, 1);
        };
        auto driver = [&](double sign, const Vector& u, const Matrix& zhat, Vector& out) {
            for (Eigen::Index p = 0; p < P; ++p) {
                double d = 0.0;
                if (use_1d) {
                    for (int i = 0; i < n; ++i) {
                        const double s = sig(i, i);
                        const double lo = cons.lo()[i], hi = cons.hi()[i];
                        d += distance_1d(sign * zhat(p, i), amb.kappa_lo[i], amb.kappa_hi[i],
                                         std::isfinite(lo) ? s * lo : lo, std::isfinite(hi) ? s * hi : hi)
                                 .value;
                    }
                } else {
                    for (int i = 0; i < n; ++i) z[i] = sign * zhat(p, i);
                    d = distance_to_constraint(z, amb, cons, sig).value;
                }
                out[p] = rho - r * u[p] - sign * d;
            }
        };

        for (auto& s : sides) {
            for (Eigen::Index p = 0; p < P; ++p) {
                for (int i = 0; i < n; ++i) {
                    target(p, i) = s.u[p] * ps.increment(k, static_cast<std::size_t>(p), i) / dt;
                }
            }
            Matrix zhat = project(target);
            driver(s.sign, s.u, zhat, f);
            s.u += dt * f;  // pathwise continuation
            s.fitted = project(s.u);
            if (opt.picard_correction) {
                // driver re-evaluated at the fitted value, same pathwise martingale part
                Vector f2(P);
                driver(s.sign, s.fitted, zhat, f2);
                s.u += dt * (f2 - f);
                s.fitted = project(s.u);
            }
        }

        if (american) {
            auto& bid = sides.front();
            Vector g(P);
            for (Eigen::Index p = 0; p < P; ++p) g[p] = gamma_at(ps.spot(k, static_cast<std::size_t>(p)));
            // exercise test uses a regression on the paths where the obstacle is
            // above its floor; elsewhere the continuation dominates
            Vector cont = bid.fitted;
            std::vector<Eigen::Index> live;
            if (k > 0) {
                const double floor = g.minCoeff();
                for (Eigen::Index p = 0; p < P; ++p) {
                    if (g[p] > floor) live.push_back(p);
                }
                cont.setConstant(HUGE_VAL);
                if (live.size() >= 10 * static_cast<std::size_t>(phi.cols())) {
                    const auto L = static_cast<Eigen::Index>(live.size());
                    Matrix sub(L, phi.cols());
                    Vector y(L);
                    for (Eigen::Index q = 0; q < L; ++q) {
                        sub.row(q) = phi.row(live[static_cast<std::size_t>(q)]);
                        y[q] = bid.u[live[static_cast<std::size_t>(q)]];
                    }
                    Eigen::ColPivHouseholderQR<Matrix> qr_live(sub);
                    if (qr_live.rank() == sub.cols()) {
                        Vector coef = qr_live.solve(y);
                        for (Eigen::Index q = 0; q < L; ++q) {
                            const Eigen::Index p = live[static_cast<std::size_t>(q)];
                            cont[p] = sub.row(q).dot(coef);
                        }
                    } else {
                        for (Eigen::Index p : live) cont[p] = bid.fitted[p];
                    }
                }
            }
            for (Eigen::Index p = 0; p < P; ++p) {
                const double push = std::max(0.0, g[p] - cont[p]);
                if (!(push > 0.0)) continue;
                for (auto& s : sides) {
                    if (s.sign > 0.0) {
                        s.u[p] += push;  // Skorohod increment from the conditional value
                    } else {
                        s.u[p] = g[p];   // buyer exercises: the seller's problem stops
                    }
                }
            }
        }
    }

    const Vector& u0 = sides.back().u;
    std::vector<double> sample(u0.data(), u0.data() + P);
    return summarize(sample, opt.seed);
}

}  // namespace ambig::oracle
