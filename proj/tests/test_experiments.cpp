#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "ambig/experiments/suite.hpp"
#include "oracles.hpp"

using namespace ambig;
using namespace ambig::experiments;

namespace {

std::string failing_rows(const Table& t) {
    std::string s;
    for (const auto& r : t) {
        if (!r.pass()) s += r.case_name + " " + r.metric + "=" + std::to_string(r.value) + "; ";
    }
    return s;
}

}  // namespace

TEST(EqualitySuite, AllCasesPassAtDeskScale) {
    experiments::Setup su;
    auto t = run_equality_suite(su);
    EXPECT_EQ(t.size(), 9u);
    EXPECT_TRUE(all_pass(t)) << failing_rows(t);
}

TEST(BoundAudit, StraddleSandwichHolds) {
    experiments::Setup su;
    auto audit = run_bound_audit(su);
    EXPECT_EQ(audit.table.size(), 9u);
    EXPECT_TRUE(all_pass(audit.table)) << failing_rows(audit.table);
    EXPECT_TRUE(audit.worst.empty());
}

TEST(BoundAudit, BoundsCollapseWithoutAmbiguity) {
    experiments::Setup su;
    su.kappa = 0.0;
    auto audit = run_bound_audit(su);
    EXPECT_TRUE(all_pass(audit.table)) << failing_rows(audit.table);
}

TEST(BoundAudit, LargeKappaOnCoarseGridListsOffenders) {
    experiments::Setup su;
    su.nx = su.nt = 60;
    su.kappa = 0.5;
    auto audit = run_bound_audit(su);
    EXPECT_FALSE(all_pass(audit.table));
    ASSERT_FALSE(audit.worst.empty());
    std::ostringstream os;
    write_offenders_csv(os, audit.worst);
    EXPECT_EQ(os.str().rfind("bound,t,S,excess\n", 0), 0u);
}

TEST(Convergence, EuropeanStraddleIsFirstOrder) {
    experiments::Setup su;
    auto r = run_convergence(su, ClaimSpec::european(PayoffDescriptor::straddle(100)), su.kappas);
    EXPECT_GE(r.slope, 0.8);
    EXPECT_LE(r.slope, 1.2);
    EXPECT_TRUE(r.monotone);
    EXPECT_TRUE(all_pass(convergence_table(su, "c", r)));
    for (double e : r.err_bid) EXPECT_GT(e, 0.0);
}

TEST(Convergence, MonotoneCallErrorIsClosedFormGap) {
    experiments::Setup su;
    su.nx = su.nt = 300;
    auto r = run_convergence(su, ClaimSpec::european(PayoffDescriptor::call(100)), su.kappas);
    const auto g = su.grid();
    const auto w = Window::of(g, su.trim, su.terminal_skip);
    for (std::size_t i = 0; i < r.kappas.size(); ++i) {
        // bid error is the closed-form gap between dividend sigma*kappa and 0
        double gap = 0.0;
        for (std::size_t k = 0; k <= w.k_hi; ++k) {
            const double tau = 1.0 - g.t[k];
            for (std::size_t j = w.j_lo; j <= w.j_hi; ++j) {
                const double S = g.spot(j);
                gap = std::max(gap, oracle_ref::bs(S, 100, tau, 0.05, 0.0, 0.2, true) -
                                        oracle_ref::bs(S, 100, tau, 0.05, 0.2 * r.kappas[i], 0.2, true));
            }
        }
        EXPECT_NEAR(r.err_bid[i], gap, 0.01 * gap + 1e-3);
        // the ask of an increasing payoff under an orthant is the dividend-free price
        EXPECT_LT(r.err_ask[i], 1e-3);
    }
    EXPECT_NEAR(r.slope, 1.0, 0.1);
}

TEST(Convergence, SweepArgumentsAreChecked) {
    experiments::Setup su;
    su.nx = su.nt = 60;
    auto claim = ClaimSpec::european(PayoffDescriptor::straddle(100));
    EXPECT_THROW(run_convergence(su, claim, {0.2, 0.1, 0.05}), Error);
    EXPECT_THROW(run_convergence(su, claim, {0.2, 0.1, 0.1, 0.05}), Error);
    EXPECT_THROW(run_convergence(su, claim, {0.0, -0.1, -0.2, -0.3}), Error);
}

TEST(Convergence, ZeroKappaReproducesReference) {
    experiments::Setup su;
    su.nx = su.nt = 100;
    auto claim = ClaimSpec::european(PayoffDescriptor::straddle(100));
    auto r = run_convergence(su, claim, {0.2, 0.1, 0.05, 0.0});
    EXPECT_LT(r.err_bid.back(), 1e-10);
    EXPECT_LT(r.err_ask.back(), 1e-10);
}

TEST(AmericanChecks, AllPass) {
    experiments::Setup su;
    auto t = run_american_checks(su);
    EXPECT_EQ(t.size(), 5u);
    EXPECT_TRUE(all_pass(t)) << failing_rows(t);
}

TEST(Reports, DeterministicAndWellFormed) {
    experiments::Setup su;
    su.nx = su.nt = 100;
    su.tree_steps = 200;
    auto a = run_equality_suite(su);
    auto b = run_equality_suite(su);
    std::ostringstream oa, ob;
    write_table_csv(oa, a);
    write_table_csv(ob, b);
    EXPECT_EQ(oa.str(), ob.str());
    EXPECT_EQ(oa.str().rfind("case,metric,value,threshold,verdict\n", 0), 0u);

    ConvergenceReport r;
    r.kappas = {0.2, 0.1};
    r.err_bid = {1.0, 0.5};
    r.err_ask = {0.25, 0.125};
    r.slope = 1.0;
    std::ostringstream oc;
    write_convergence_csv(oc, r);
    EXPECT_EQ(oc.str(), "kappa,sup_err_bid,sup_err_ask\n0.20000000000000001,1,0.25\n0.10000000000000001,0.5,0.125\nslope=1\n");
}

TEST(Reports, LogLogSlopeOfPowerLaw) {
    std::vector<double> x{0.2, 0.1, 0.05, 0.025}, y;
    for (double v : x) y.push_back(3.0 * std::pow(v, 1.5));
    EXPECT_NEAR(loglog_slope(x, y), 1.5, 1e-12);
}

TEST(Reports, WindowTrimsEdgesAndTerminalLayer) {
    experiments::Setup su;
    auto g = su.grid();
    auto w = Window::of(g, 0.1, 2);
    EXPECT_EQ(w.j_lo, 50u);
    EXPECT_EQ(w.j_hi, 450u);
    EXPECT_EQ(w.k_hi, 498u);
}
