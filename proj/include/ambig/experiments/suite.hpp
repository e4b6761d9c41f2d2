#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ambig/analytic.hpp"
#include "ambig/experiments/report.hpp"
#include "ambig/oracle/binomial.hpp"
#include "ambig/parallel.hpp"
#include "ambig/pde/european.hpp"
#include "ambig/vi/american.hpp"

namespace ambig::experiments {

/// Everything the scripted checks need. Claims are built from `strike`.
struct Setup {
    MarketModel model = MarketModel::black_scholes(0.05, 0.2, 1.0);
    double strike = 100.0;
    double spot = 100.0;
    int nx = 500;
    int nt = 500;
    double width_mult = 6.0;
    double kappa = 0.1;
    double kappa_lo = 0.0;
    pde::SolverOptions solver;
    vi::PenaltyOptions penalty;
    int tree_steps = 2000;
    std::vector<double> kappas{0.2, 0.1, 0.05, 0.025};
    double trim = 0.1;
    int terminal_skip = 2;
    double equality_tol = 5e-3;
    double american_tol = 0.05;
    double bound_tol = 1e-3;  // times strike
    double slope_lo = 0.8;
    double slope_hi = 1.2;
    double hedge_tol = 1e-6;
    double complementarity_tol = 1e-4;
    double nonbinding_tol = 1e-8;
    double boundary_cells = 2.0;

    pde::Grid grid() const { return pde::Grid::make(model, spot, nx, nt, width_mult); }
    AmbiguityRectangle ambiguity(double k) const {
        return {Vector::Constant(1, kappa_lo), Vector::Constant(1, k)};
    }
    ConstraintSpec orthant() const { return ConstraintSpec::orthant(1); }
    /// sigma(t) * kappa as a piecewise-constant dividend.
    PiecewiseConstant<double> dividend(double k) const {
        std::vector<double> v;
        for (const Matrix& s : model.vol.values()) v.push_back(s(0, 0) * k);
        return {model.vol.breaks(), v};
    }
    oracle::TreeParams tree(double q, double s0) const {
        oracle::TreeParams tp;
        tp.s0 = s0;
        tp.rate = model.rate_mean(0.0, model.horizon);
        tp.dividend = q;
        tp.sigma = model.sigma_rms(0.0, model.horizon);
        tp.maturity = model.horizon;
        tp.steps = tree_steps;
        return tp;
    }
    double sigma_bar() const { return model.sigma_mean(0.0, model.horizon); }
};

namespace detail {

/// max |P(0,S) - ref(S)| / |ref(S)| over the middle half of the grid.
template <class Ref>
double max_rel_dev(const pde::PriceSurface& s, Ref&& ref) {
    auto [lo, hi] = s.grid.trimmed(0.25);
    double worst = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) {
        const double r = ref(s.grid.spot(j));
        worst = std::max(worst, std::abs(s.value(0, j) - r) / std::abs(r));
    }
    return worst;
}

inline std::size_t nearest_node(const pde::Grid& g, double S) {
    const double x = std::log(S);
    auto it = std::lower_bound(g.x.begin(), g.x.end(), x);
    if (it == g.x.end()) return g.x.size() - 1;
    auto j = static_cast<std::size_t>(it - g.x.begin());
    if (j > 0 && std::abs(g.x[j - 1] - x) < std::abs(g.x[j] - x)) --j;
    return j;
}

/// P(0, spot) by linear interpolation in ln S.
inline double at_spot(const pde::PriceSurface& s, double spot) { return pde::query_price(s, 0.0, spot); }

}  // namespace detail

/// Monotone-payoff equalities: European call/put bid and ask against the
/// dividend-adjusted closed form, the bid hedge of the call, and American
/// call/put bids against trees.
inline Table run_equality_suite(const Setup& su) {
    const auto g = su.grid();
    const auto amb = su.ambiguity(su.kappa);
    const auto cons = su.orthant();
    const auto q_full = su.dividend(su.kappa);
    const PiecewiseConstant<double> q_zero(0.0);
    const double K = su.strike;
    Table t;

    auto euro = [&](const char* name, PayoffDescriptor psi, pde::Side side, const PiecewiseConstant<double>& q) {
        const auto claim = ClaimSpec::european(psi);
        auto s = pde::solve_european(su.model, claim, amb, cons, g, side, su.solver);
        double dev = detail::max_rel_dev(s, [&](double S) { return dividend_adjusted_price(su.model, claim, q, 0.0, S); });
        t.push_back({name, "max_rel_dev", dev, su.equality_tol});
        return s;
    };
    auto call_bid = euro("eu_call_bid", PayoffDescriptor::call(K), pde::Side::Bid, q_full);
    euro("eu_call_ask", PayoffDescriptor::call(K), pde::Side::Ask, q_zero);
    double pi = 0.0;
    for (double v : call_bid.pi_star) pi = std::max(pi, std::abs(v));
    t.push_back({"eu_call_bid_hedge", "sup_abs_pi", pi, su.hedge_tol});
    euro("eu_put_bid", PayoffDescriptor::put(K), pde::Side::Bid, q_zero);
    euro("eu_put_ask", PayoffDescriptor::put(K), pde::Side::Ask, q_full);

    const double qbar = su.sigma_bar() * su.kappa;
    {
        const auto claim = ClaimSpec::american(PayoffDescriptor::call(K));
        auto sol = vi::solve_american(su.model, claim, amb, cons, g, su.penalty, su.solver);
        const double tree_q = oracle::binomial_price(su.tree(qbar, su.spot), claim.terminal, ExerciseStyle::American);
        t.push_back({"am_call_bid", "abs_dev_at_spot", std::abs(detail::at_spot(sol.bid, su.spot) - tree_q),
                     su.american_tol});
        // pointwise chain bid <= ask <= tree(q = 0) on the trimmed window at t = 0
        const auto w = Window::of(g, su.trim, su.terminal_skip);
        double bid_ask = -HUGE_VAL, ask_p0 = -HUGE_VAL;
        for (std::size_t j = w.j_lo; j <= w.j_hi; ++j) bid_ask = std::max(bid_ask, sol.bid.value(0, j) - sol.ask.value(0, j));
        const std::size_t stride = std::max<std::size_t>(1, (w.j_hi - w.j_lo) / 40);
        std::vector<std::size_t> nodes;
        for (std::size_t j = w.j_lo; j <= w.j_hi; j += stride) nodes.push_back(j);
        std::vector<double> excess(nodes.size());
        parallel_for(nodes.size(), [&](std::size_t i) {
            const double S = g.spot(nodes[i]);
            excess[i] = sol.ask.value(0, nodes[i]) -
                        oracle::binomial_price(su.tree(0.0, S), claim.terminal, ExerciseStyle::American);
        });
        for (double e : excess) ask_p0 = std::max(ask_p0, e);
        t.push_back({"am_call_bid_le_ask", "max_excess", bid_ask, su.bound_tol * K});
        t.push_back({"am_call_ask_le_tree_q0", "max_excess", ask_p0, su.american_tol});
    }
    {
        const auto claim = ClaimSpec::american(PayoffDescriptor::put(K));
        auto bid = vi::solve_american_bid(su.model, claim, amb, cons, g, su.penalty, su.solver);
        const double tree0 = oracle::binomial_price(su.tree(0.0, su.spot), claim.terminal, ExerciseStyle::American);
        t.push_back({"am_put_bid", "abs_dev_at_spot", std::abs(detail::at_spot(bid.surface, su.spot) - tree0),
                     su.american_tol});
    }
    return t;
}

/// A violated bound at one node.
struct Offender {
    std::string bound;
    double t = 0.0;
    double S = 0.0;
    double excess = 0.0;
};

struct BoundAudit {
    Table table;                   // metric "violations", threshold 0
    std::vector<Offender> worst;   // largest excess per bound, violations only
};

inline void write_offenders_csv(std::ostream& os, const std::vector<Offender>& v) {
    os << "bound,t,S,excess\n";
    for (const auto& o : v) {
        os << o.bound << ',' << pde::format_double(o.t) << ',' << pde::format_double(o.S) << ','
           << pde::format_double(o.excess) << '\n';
    }
}

/// Sandwich bounds for the straddle: each bound is `lhs <= rhs` checked node by
/// node on the window with slack bound_tol * K.
inline BoundAudit run_bound_audit(const Setup& su) {
    const auto g = su.grid();
    const auto amb = su.ambiguity(su.kappa);
    const auto cons = su.orthant();
    const double K = su.strike;
    const double tol = su.bound_tol * K;
    const auto straddle = ClaimSpec::european(PayoffDescriptor::straddle(K));
    const auto below_up = ClaimSpec::european(PayoffDescriptor::call(K));
    const auto below_down = ClaimSpec::european(PayoffDescriptor::put(K));
    // increasing and above the straddle: K + (S - K)^+
    const auto above_up = ClaimSpec::european(PayoffDescriptor::call(K).shifted(K));

    auto bid = pde::solve_european(su.model, straddle, amb, cons, g, pde::Side::Bid, su.solver);
    auto ask = pde::solve_european(su.model, straddle, amb, cons, g, pde::Side::Ask, su.solver);
    const auto am_claim = ClaimSpec::american(PayoffDescriptor::straddle(K));
    auto am = vi::solve_american(su.model, am_claim, amb, cons, g, su.penalty, su.solver);

    const auto q_full = su.dividend(su.kappa);
    const auto q_half = su.dividend(0.5 * su.kappa);
    const PiecewiseConstant<double> q_zero(0.0);
    const auto w = Window::of(g, su.trim, su.terminal_skip);

    using NodeFn = std::function<double(std::size_t, std::size_t)>;
    auto closed = [&](const ClaimSpec& c, const PiecewiseConstant<double>& q) -> NodeFn {
        return [&, c, q](std::size_t k, std::size_t j) {
            return dividend_adjusted_price(su.model, c, q, g.t[k], g.spot(j));
        };
    };
    auto surf = [](const pde::PriceSurface& s) -> NodeFn {
        return [&s](std::size_t k, std::size_t j) { return s.value(k, j); };
    };
    struct Bound {
        const char* name;
        NodeFn lhs, rhs;
    };
    const std::vector<Bound> bounds = {
        {"bid_ge_p0_full_call_below", closed(below_up, q_full), surf(bid)},
        {"bid_ge_p0_zero_put_below", closed(below_down, q_zero), surf(bid)},
        {"bid_le_p0_q0", surf(bid), closed(straddle, q_zero)},
        {"bid_le_p0_qhalf", surf(bid), closed(straddle, q_half)},
        {"bid_le_p0_qfull", surf(bid), closed(straddle, q_full)},
        {"ask_ge_p0_qfull", closed(straddle, q_full), surf(ask)},
        {"ask_le_p0_zero_above", surf(ask), closed(above_up, q_zero)},
        {"bid_le_ask", surf(bid), surf(ask)},
        {"am_bid_le_ask", surf(am.bid), surf(am.ask)},
    };

    BoundAudit out;
    std::vector<std::size_t> counts(bounds.size(), 0);
    std::vector<Offender> worst(bounds.size());
    parallel_for(bounds.size(), [&](std::size_t b) {
        worst[b] = {bounds[b].name, 0.0, 0.0, -HUGE_VAL};
        for (std::size_t k = 0; k <= w.k_hi; ++k) {
            for (std::size_t j = w.j_lo; j <= w.j_hi; ++j) {
                const double e = bounds[b].lhs(k, j) - bounds[b].rhs(k, j);
                if (e > tol) ++counts[b];
                if (e > worst[b].excess) worst[b] = {bounds[b].name, g.t[k], g.spot(j), e};
            }
        }
    });
    for (std::size_t b = 0; b < bounds.size(); ++b) {
        out.table.push_back({std::string("straddle_") + bounds[b].name, "violations", double(counts[b]), 0.0});
        if (counts[b] > 0) out.worst.push_back(worst[b]);
    }
    return out;
}

struct ConvergenceReport {
    std::vector<double> kappas;
    std::vector<double> err_bid;
    std::vector<double> err_ask;
    double slope = 0.0;
    bool monotone = true;
    double s_lo = 0.0, s_hi = 0.0, t_hi = 0.0;
};

inline void write_convergence_csv(std::ostream& os, const ConvergenceReport& r) {
    os << "kappa,sup_err_bid,sup_err_ask\n";
    for (std::size_t i = 0; i < r.kappas.size(); ++i) {
        os << pde::format_double(r.kappas[i]) << ',' << pde::format_double(r.err_bid[i]) << ','
           << pde::format_double(r.err_ask[i]) << '\n';
    }
    os << "slope=" << pde::format_double(r.slope) << '\n';
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0.0, my = 0.0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
        sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    }
    return sxy / sxx;
}

/// Sup-norm distance of bid and ask to the kappa = 0 surface of the same grid,
/// for each kappa; the slope is fitted to bid + ask errors.
inline ConvergenceReport run_convergence(const Setup& su, const ClaimSpec& claim, std::vector<double> kappas) {
    if (kappas.size() < 4) fail(ErrorCode::InvalidArgument, "convergence sweep needs at least 4 kappa values");
    for (std::size_t i = 1; i < kappas.size(); ++i) {
        if (!(kappas[i] < kappas[i - 1])) fail(ErrorCode::InvalidArgument, "kappa values must be strictly decreasing");
    }
    const auto g = su.grid();
    const auto cons = su.orthant();
    const auto w = Window::of(g, su.trim, su.terminal_skip);

    auto solve = [&](double k) -> std::pair<pde::PriceSurface, pde::PriceSurface> {
        const auto amb = su.ambiguity(k);
        if (claim.is_american()) {
            auto sol = vi::solve_american(su.model, claim, amb, cons, g, su.penalty, su.solver);
            return {std::move(sol.bid), std::move(sol.ask)};
        }
        return {pde::solve_european(su.model, claim, amb, cons, g, pde::Side::Bid, su.solver),
                pde::solve_european(su.model, claim, amb, cons, g, pde::Side::Ask, su.solver)};
    };

    std::vector<double> all = kappas;
    all.push_back(0.0);
    std::vector<std::pair<pde::PriceSurface, pde::PriceSurface>> sols(all.size());
    parallel_for(all.size(), [&](std::size_t i) { sols[i] = solve(all[i]); });
    const auto& ref = sols.back().first;

    ConvergenceReport r;
    r.kappas = kappas;
    r.s_lo = w.s_lo(g);
    r.s_hi = w.s_hi(g);
    r.t_hi = g.t[w.k_hi];
    auto sup = [&](const pde::PriceSurface& s) {
        double e = 0.0;
        for (std::size_t k = 0; k <= w.k_hi; ++k) {
            for (std::size_t j = w.j_lo; j <= w.j_hi; ++j) e = std::max(e, std::abs(s.value(k, j) - ref.value(k, j)));
        }
        return e;
    };
    std::vector<double> x, y;
    for (std::size_t i = 0; i < kappas.size(); ++i) {
        r.err_bid.push_back(sup(sols[i].first));
        r.err_ask.push_back(sup(sols[i].second));
        const double e = r.err_bid.back() + r.err_ask.back();
        if (e > 0.0 && kappas[i] > 0.0) {
            x.push_back(kappas[i]);
            y.push_back(e);
        }
        if (i > 0) {
            const double prev = r.err_bid[i - 1] + r.err_ask[i - 1];
            if (e > prev + 1e-9) r.monotone = false;
        }
    }
    if (x.size() < 3) fail(ErrorCode::InvalidArgument, "fewer than 3 positive errors: slope fit is degenerate");
    r.slope = loglog_slope(x, y);
    return r;
}

inline Table convergence_table(const Setup& su, const std::string& name, const ConvergenceReport& r) {
    // two-sided slope interval as two one-sided rows
    return {{name, "slope_below_max", r.slope, su.slope_hi},
            {name, "slope_above_min", -r.slope, -su.slope_lo},
            {name, "nonmonotone", r.monotone ? 0.0 : 1.0, 0.0}};
}

/// American-specific checks: the kappa = 0 put against the tree (price and
/// exercise boundary), the penalty complementarity residual, and a non-binding
/// obstacle reproducing the European bid.
inline Table run_american_checks(const Setup& su) {
    const auto g = su.grid();
    const double K = su.strike;
    Table t;
    const auto put = ClaimSpec::american(PayoffDescriptor::put(K));
    {
        const auto amb = AmbiguityRectangle::none(1);
        auto bid = vi::solve_american_bid(su.model, put, amb, su.orthant(), g, su.penalty, su.solver);
        auto region = vi::exercise_region(bid, put);
        auto tree = oracle::binomial_tree(su.tree(0.0, su.spot), put.terminal, nullptr, ExerciseStyle::American, true);
        t.push_back({"am_put_k0", "abs_dev_at_spot", std::abs(detail::at_spot(bid.surface, su.spot) - tree.price),
                     su.american_tol});
        double worst = 0.0;
        for (double frac : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            auto k = static_cast<std::size_t>(std::lround(frac * static_cast<double>(g.nt())));
            auto kt = static_cast<std::size_t>(std::lround(frac * su.tree_steps));
            if (region.boundary[k].empty() || tree.boundary[kt].empty()) {
                worst = HUGE_VAL;
                continue;
            }
            const double cells = std::abs(std::log(region.boundary[k].front() / tree.boundary[kt].front())) / g.h();
            worst = std::max(worst, cells);
        }
        t.push_back({"am_put_k0_boundary", "max_cells_off", worst, su.boundary_cells});
        t.push_back({"am_put_k0_penalty", "complementarity", bid.complementarity_residual, su.complementarity_tol});
    }
    {
        const auto claim = ClaimSpec::american(PayoffDescriptor::call(K));
        const auto amb = su.ambiguity(su.kappa);
        auto bid = vi::solve_american_bid(su.model, claim, amb, su.orthant(), g, su.penalty, su.solver);
        t.push_back({"am_call_penalty", "complementarity", bid.complementarity_residual, su.complementarity_tol});
    }
    {
        // obstacle far below any price: -2C(1 + S) with C = 1e3
        const double C = 1e3;
        const auto low = PayoffDescriptor::linear(-2.0 * C, -2.0 * C);
        const auto psi = PayoffDescriptor::call(K);
        const auto claim = ClaimSpec::american(psi, low, low);
        const auto amb = su.ambiguity(su.kappa);
        auto am = vi::solve_american_bid(su.model, claim, amb, su.orthant(), g, su.penalty, su.solver);
        auto eu = pde::solve_european(su.model, ClaimSpec::european(psi), amb, su.orthant(), g, pde::Side::Bid, su.solver);
        double diff = 0.0;
        for (std::size_t i = 0; i < eu.values.size(); ++i) diff = std::max(diff, std::abs(eu.values[i] - am.surface.values[i]));
        t.push_back({"am_nonbinding", "max_abs_diff_vs_european", diff, su.nonbinding_tol});
    }
    return t;
}

}  // namespace ambig::experiments
