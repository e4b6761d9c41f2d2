#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "ambig/analytic.hpp"
#include "ambig/pde/csv.hpp"
#include "ambig/pde/european.hpp"
#include "oracles.hpp"
#include "properties.hpp"

using namespace ambig;
using pde::Side;

namespace {

const MarketModel kBs = MarketModel::black_scholes(0.05, 0.2, 1.0);

double max_rel_dev_mid(const pde::PriceSurface& s, double q, bool call) {
    auto [lo, hi] = s.grid.trimmed(0.25);
    double worst = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) {
        double ref = oracle_ref::bs(s.grid.spot(j), 100.0, 1.0, 0.05, q, 0.2, call);
        worst = std::max(worst, std::abs(s.value(0, j) - ref) / ref);
    }
    return worst;
}

}  // namespace

TEST(Grid, ShapeAndAnchor) {
    auto g = pde::Grid::make(kBs, 100.0, 500, 400);
    EXPECT_EQ(g.nodes_x(), 501u);
    EXPECT_EQ(g.t.size(), 401u);
    EXPECT_EQ(g.x[250], std::log(100.0));
    EXPECT_NEAR(g.x.back() - g.x.front(), 2 * 6 * 0.2, 1e-12);
    EXPECT_EQ(g.t.back(), 1.0);
    EXPECT_THROW(pde::Grid::make(kBs, 100.0, 40, 400), Error);
}

TEST(SolveEuropean, NoAmbiguityCollapsesToBlackScholes) {
    auto g = pde::Grid::make(kBs, 100.0, 500, 500);
    auto claim = ClaimSpec::european(PayoffDescriptor::call(100));
    for (const auto& cons : {ConstraintSpec::orthant(1), ConstraintSpec::unconstrained(1)}) {
        for (auto side : {Side::Bid, Side::Ask}) {
            auto s = pde::solve_european(kBs, claim, AmbiguityRectangle::none(1), cons, g, side);
            EXPECT_LT(max_rel_dev_mid(s, 0.0, true), 5e-3);
        }
    }
}

TEST(SolveEuropean, IncreasingPayoffBidIsDividendPrice) {
    auto g = pde::Grid::make(kBs, 100.0, 500, 500);
    auto claim = ClaimSpec::european(PayoffDescriptor::call(100));
    auto amb = AmbiguityRectangle::upper_only(1, 0.1);
    auto bid = pde::solve_european(kBs, claim, amb, ConstraintSpec::orthant(1), g, Side::Bid);
    auto ask = pde::solve_european(kBs, claim, amb, ConstraintSpec::orthant(1), g, Side::Ask);
    EXPECT_LT(max_rel_dev_mid(bid, 0.02, true), 5e-3);
    EXPECT_LT(max_rel_dev_mid(ask, 0.0, true), 5e-3);
}

TEST(SolveEuropean, DecreasingPayoffBidIsDividendFreePrice) {
    auto g = pde::Grid::make(kBs, 100.0, 500, 500);
    auto claim = ClaimSpec::european(PayoffDescriptor::put(100));
    auto amb = AmbiguityRectangle::upper_only(1, 0.1);
    auto bid = pde::solve_european(kBs, claim, amb, ConstraintSpec::orthant(1), g, Side::Bid);
    auto ask = pde::solve_european(kBs, claim, amb, ConstraintSpec::orthant(1), g, Side::Ask);
    EXPECT_LT(max_rel_dev_mid(bid, 0.0, false), 5e-3);
    EXPECT_LT(max_rel_dev_mid(ask, 0.02, false), 5e-3);
}

TEST(SolveEuropean, TerminalRowIsThePayoff) {
    auto g = pde::Grid::make(kBs, 100.0, 100, 100);
    auto psi = PayoffDescriptor::piecewise({80, 100, 120}, {10, 0, 15}, -0.5, 0.8);
    auto s = pde::solve_european(kBs, ClaimSpec::european(psi), AmbiguityRectangle::symmetric(1, 0.1),
                                 ConstraintSpec::orthant(1), g, Side::Bid);
    for (std::size_t j = 0; j < g.nodes_x(); ++j) EXPECT_EQ(s.value(g.nt(), j), psi.eval_scalar(g.spot(j)));
}

TEST(SolveEuropean, MultiAssetIsUnsupported) {
    MarketModel m;
    m.n = 2;
    m.vol = PiecewiseConstant<Matrix>(Matrix::Identity(2, 2) * 0.2);
    auto g = pde::Grid::make(kBs, 100.0, 100, 100);
    try {
        pde::solve_european(m, ClaimSpec::european(PayoffDescriptor::call(100)), AmbiguityRectangle::none(2),
                            ConstraintSpec::orthant(2), g, Side::Bid);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Unsupported);
    }
}

TEST(SolveEuropean, PicardNonConvergenceNamesTheStep) {
    auto g = pde::Grid::make(kBs, 100.0, 100, 100);
    pde::SolverOptions o;
    o.picard_max = 1;
    try {
        pde::solve_european(kBs, ClaimSpec::european(PayoffDescriptor::straddle(100)),
                            AmbiguityRectangle::symmetric(1, 0.5), ConstraintSpec::orthant(1), g, Side::Bid, o);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::PicardNonConvergence);
        EXPECT_NE(std::string(e.what()).find("time step"), std::string::npos);
    }
}

TEST(ExtractHedge, IncreasingPayoffOrthant) {
    auto g = pde::Grid::make(kBs, 100.0, 200, 200);
    auto claim = ClaimSpec::european(PayoffDescriptor::call(100));
    auto amb = AmbiguityRectangle::upper_only(1, 0.1);
    auto bid = pde::solve_european(kBs, claim, amb, ConstraintSpec::orthant(1), g, Side::Bid);
    auto ask = pde::solve_european(kBs, claim, amb, ConstraintSpec::orthant(1), g, Side::Ask);
    double bid_sup = 0.0, ask_dev = 0.0;
    for (std::size_t i = 0; i < bid.values.size(); ++i) {
        bid_sup = std::max(bid_sup, std::abs(bid.pi_star[i]));
        ask_dev = std::max(ask_dev, std::abs(ask.pi_star[i] - std::max(ask.grad[i], 0.0)));
    }
    EXPECT_LT(bid_sup, 1e-6);
    EXPECT_LT(ask_dev, 1e-12);
}

TEST(ExtractHedge, UnconstrainedBidIsShortDelta) {
    auto g = pde::Grid::make(kBs, 100.0, 200, 200);
    auto s = pde::solve_european(kBs, ClaimSpec::european(PayoffDescriptor::straddle(100)),
                                 AmbiguityRectangle::symmetric(1, 0.1), ConstraintSpec::unconstrained(1), g, Side::Bid);
    for (std::size_t i = 0; i < s.values.size(); ++i) EXPECT_NEAR(s.pi_star[i], -s.grad[i], 1e-12);
}

TEST(QueryPrice, NodesMidpointsAndHull) {
    auto g = pde::Grid::make(kBs, 100.0, 100, 100);
    auto claim = ClaimSpec::european(PayoffDescriptor::call(100));
    auto s = pde::solve_european(kBs, claim, AmbiguityRectangle::none(1), ConstraintSpec::orthant(1), g, Side::Bid);
    EXPECT_EQ(pde::query_price(s, g.t[30], g.spot(40)), s.value(30, 40));
    EXPECT_EQ(pde::query_price(s, 1.0, g.spot(70)), std::max(g.spot(70) - 100.0, 0.0));
    const double mid = pde::query_price(s, 0.5 * (g.t[30] + g.t[31]), std::exp(0.5 * (g.x[40] + g.x[41])));
    const double lo = std::min({s.value(30, 40), s.value(30, 41), s.value(31, 40), s.value(31, 41)});
    const double hi = std::max({s.value(30, 40), s.value(30, 41), s.value(31, 40), s.value(31, 41)});
    EXPECT_GE(mid, lo);
    EXPECT_LE(mid, hi);
    EXPECT_THROW(pde::query_price(s, 0.5, 1.0), Error);
    EXPECT_THROW(pde::query_price(s, 1.5, 100.0), Error);
}

TEST(SurfaceCsv, RoundTripIsExact) {
    auto g = pde::Grid::make(kBs, 100.0, 60, 50);
    auto s = pde::solve_european(kBs, ClaimSpec::european(PayoffDescriptor::straddle(100)),
                                 AmbiguityRectangle::symmetric(1, 0.1), ConstraintSpec::orthant(1), g, Side::Ask);
    std::stringstream ss;
    pde::write_surface_csv(ss, s);
    EXPECT_EQ(ss.str().substr(0, 24), "t,S,value,dP_dS,pi_star\n");
    auto back = pde::read_surface_csv(ss, Side::Ask);
    ASSERT_EQ(back.values.size(), s.values.size());
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        EXPECT_EQ(back.values[i], s.values[i]);
        EXPECT_EQ(back.pi_star[i], s.pi_star[i]);
    }
    EXPECT_DOUBLE_EQ(pde::query_price(back, 0.3, 101.0), pde::query_price(s, 0.3, 101.0));
}

TEST(SurfaceCsv, RejectsMalformedInput) {
    std::stringstream bad_header("t,S,price\n0,1,2\n");
    EXPECT_THROW(pde::read_surface_csv(bad_header), Error);
    std::stringstream ragged("t,S,value,dP_dS,pi_star\n0,1,2,3\n");
    EXPECT_THROW(pde::read_surface_csv(ragged), Error);
}

TEST(PdeProperties, CallSurfaceIsNondecreasingInSpot) {
    auto g = pde::Grid::make(kBs, 100.0, 200, 200);
    for (auto side : {Side::Bid, Side::Ask}) {
        auto s = pde::solve_european(kBs, ClaimSpec::european(PayoffDescriptor::call(100)),
                                     AmbiguityRectangle::symmetric(1, 0.2), ConstraintSpec::orthant(1), g, side);
        for (std::size_t i = 0; i < s.values.size(); ++i) EXPECT_GE(s.grad[i], -1e-8);
    }
}

TEST(PdeProperties, OrderingBidRiskNeutralAsk) {
    auto o = props::pde_ordering();
    EXPECT_EQ(o.failures, 0u) << "worst " << o.worst;
}

TEST(PdeProperties, CashTranslation) {
    auto o = props::pde_cash_translation();
    EXPECT_EQ(o.failures, 0u) << "worst " << o.worst;
}

TEST(PdeProperties, ComparisonPrinciple) {
    auto o = props::pde_comparison();
    EXPECT_EQ(o.failures, 0u) << "worst " << o.worst;
}

TEST(PdeProperties, GridConvergenceFactor) {
    auto c = props::pde_grid_convergence(100);
    EXPECT_GE(c.factor(), 3.0) << c.err_coarse << " -> " << c.err_fine;
}

TEST(PdeProperties, HedgeFeasibility) {
    auto o = props::hedge_feasibility();
    EXPECT_EQ(o.failures, 0u);
}

TEST(PdeProperties, EarningsEnterAsDiscountedIntegral) {
    auto g = pde::Grid::make(kBs, 100.0, 200, 200);
    auto claim = ClaimSpec::european(PayoffDescriptor::call(100));
    auto base = pde::solve_european(kBs, claim, AmbiguityRectangle::none(1), ConstraintSpec::orthant(1), g, Side::Bid);
    claim.earnings = PiecewiseConstant<double>({0.5}, {3.0, 1.0});
    auto with = pde::solve_european(kBs, claim, AmbiguityRectangle::none(1), ConstraintSpec::orthant(1), g, Side::Bid);
    const double earn = discounted_earnings(kBs, claim.earnings, 0.0, 1.0);
    EXPECT_NEAR(with.value(0, 100) - base.value(0, 100), earn, 1e-8);
}
