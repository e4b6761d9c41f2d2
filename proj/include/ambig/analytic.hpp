#pragma once

#include <algorithm>
#include <cmath>

#include "ambig/model.hpp"
#include "ambig/payoff.hpp"
#include "ambig/utility.hpp"

namespace ambig {

struct DualResult {
    double c_hat;   // optimal consumption rate
    double v_star;  // sup_c { v(t,c) - c }
};

/// Solves d/dc v(t, c_hat) = 1 by bisection and returns v(t, c_hat) - c_hat.
inline DualResult convex_dual(const UtilitySpec& u, double t) {
    u.validate();
    auto excess = [&](double c) { return u.marginal(t, c) - 1.0; };

    double lo = std::max(1e-12, u.c_floor());
    double hi = std::min(1.0, u.c_limit());
    if (excess(lo) < 0.0) {
        fail(ErrorCode::BracketFailure, "marginal utility is below 1 at the bracket floor");
    }
    int growth = 0;
    while (excess(hi) > 0.0) {
        if (hi >= u.c_limit() || ++growth > 200) {
            fail(ErrorCode::BracketFailure, "marginal utility never crosses 1 within bracket growth limit");
        }
        lo = hi;
        hi = std::min(2.0 * hi, u.c_limit());
    }
    double mid = hi;
    for (int it = 0; it < 400; ++it) {
        mid = 0.5 * (lo + hi);
        double e = excess(mid);
        if (std::abs(e) <= 1e-12 || hi - lo <= 1e-15 * std::max(1.0, hi)) break;
        (e > 0.0 ? lo : hi) = mid;
    }
    return {mid, u.value(t, mid) - mid};
}

/// exp(-int_t^s r(u) du).
inline double discount(const MarketModel& model, double t, double s) {
    if (s < t) fail(ErrorCode::InvalidArgument, "discount needs t <= s");
    return std::exp(-model.rate.integral(t, s));
}

/// Value of the optimal standalone consumption: int_t^T discount(t,s) v*(s) ds.
inline double consumption_value(const MarketModel& model, const UtilitySpec& u, double t) {
    const double T = model.horizon;
    if (t > T) fail(ErrorCode::InvalidArgument, "consumption_value needs t <= T");
    const bool homogeneous = u.time_homogeneous();
    const double v_const = homogeneous ? convex_dual(u, t).v_star : 0.0;
    double acc = 0.0;
    double df = 1.0;  // discount(t, lo)
    model.rate.for_each_piece(t, T, [&](double lo, double hi, double r) {
        double v = homogeneous ? v_const : convex_dual(u, 0.5 * (lo + hi)).v_star;
        double len = hi - lo;
        double w = std::abs(r * len) < 1e-12 ? len * (1.0 - 0.5 * r * len) : -std::expm1(-r * len) / r;
        acc += df * v * w;
        df *= std::exp(-r * len);
    });
    return acc;
}

enum class OptionKind { Call, Put };

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Black-Scholes price with continuous dividend yield q.
inline double bs_price(double S, double K, double tau, double r, double q, double sigma,
                       OptionKind kind) {
    if (!(S > 0.0) || !(K > 0.0) || !(tau > 0.0) || !(sigma > 0.0)) {
        fail(ErrorCode::InvalidArgument, "bs_price needs S, K, tau, sigma > 0");
    }
    const double sd = sigma * std::sqrt(tau);
    const double fwd_s = S * std::exp(-q * tau);
    const double fwd_k = K * std::exp(-r * tau);
    const double d1 = (std::log(S / K) + (r - q) * tau) / sd + 0.5 * sd;
    const double d2 = d1 - sd;
    if (kind == OptionKind::Call) return fwd_s * norm_cdf(d1) - fwd_k * norm_cdf(d2);
    return fwd_k * norm_cdf(-d2) - fwd_s * norm_cdf(-d1);
}

/// Risk-neutral price of a piecewise-linear payoff under constant (r, q, sigma),
/// via its decomposition into a forward, a bond and calls at the knots.
inline double bs_payoff_price(const PayoffDescriptor& psi, double S, double tau, double r, double q,
                              double sigma) {
    const auto& k = psi.knots();
    const auto& v = psi.values();
    const double bond = std::exp(-r * tau);
    const double fwd = S * std::exp(-q * tau);
    // f(s) = v0 + sl (s - k0) + sum_i dslope_i (s - k_i)^+
    double price = (v[0] - psi.slope_left() * k[0]) * bond + psi.slope_left() * fwd;
    double prev = psi.slope_left();
    for (std::size_t i = 0; i < k.size(); ++i) {
        double next = i + 1 < k.size() ? (v[i + 1] - v[i]) / (k[i + 1] - k[i]) : psi.slope_right();
        double jump = next - prev;
        if (jump != 0.0) {
            double call = k[i] <= 0.0 ? fwd - k[i] * bond
                                      : bs_price(S, k[i], tau, r, q, sigma, OptionKind::Call);
            price += jump * call;
        }
        prev = next;
    }
    return price;
}

/// int_t^s earnings(u) discount(t, u) du, exact for piecewise-constant inputs.
inline double discounted_earnings(const MarketModel& model, const PiecewiseConstant<double>& earnings,
                                  double t, double s) {
    double earn = 0.0;
    double df = 1.0;
    model.rate.for_each_piece(t, s, [&](double lo, double hi, double r) {
        // earnings are piecewise constant too; integrate on the common refinement
        earnings.for_each_piece(lo, hi, [&](double a, double b, double rho) {
            double len = b - a;
            double w = std::abs(r * len) < 1e-12 ? len : -std::expm1(-r * len) / r;
            earn += df * rho * w;
            df *= std::exp(-r * len);
        });
    });
    return earn;
}

/// Dividend-adjusted risk-neutral price for the claim in `model` at (t, S):
/// time-dependent coefficients enter through interval means (rms for sigma),
/// earnings through their exactly discounted integral.
inline double dividend_adjusted_price(const MarketModel& model, const ClaimSpec& claim,
                                      const PiecewiseConstant<double>& dividend, double t, double S) {
    const double T = model.horizon;
    const double tau = T - t;
    const double earn = discounted_earnings(model, claim.earnings, t, T);
    if (tau <= 0.0) return claim.terminal.eval_scalar(S) + earn;
    const double rbar = model.rate_mean(t, T);
    const double qbar = dividend.average(t, T);
    const double sbar = model.sigma_rms(t, T);
    return bs_payoff_price(claim.terminal, S, tau, rbar, qbar, sbar) + earn;
}

}  // namespace ambig
