#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ambig/ambiguity.hpp"
#include "oracles.hpp"
#include "properties.hpp"

using namespace ambig;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

}  // namespace

TEST(SupportValue, ZeroAtOrigin) {
    AmbiguityRectangle amb{vec({0.3, 0.4}), vec({0.1, 0.2})};
    EXPECT_EQ(support_value(Vector::Zero(2), amb), 0.0);
}

TEST(SupportValue, AsymmetricRectangleMatchesGridMaximum) {
    AmbiguityRectangle amb{vec({0.3, 0.4}), vec({0.1, 0.2})};
    const double v = support_value(vec({1.0, -2.0}), amb);
    EXPECT_NEAR(v, 0.9, 1e-15);
    EXPECT_NEAR(v, oracle_ref::rectangle_grid_max({1.0, -2.0}, {0.3, 0.4}, {0.1, 0.2}), 1e-12);
}

TEST(SupportValue, KappaIgnoranceIsScaledL1Norm) {
    auto amb = AmbiguityRectangle::symmetric(2, 1.0);
    EXPECT_NEAR(support_value(vec({3.0, -4.0}), amb), 7.0, 1e-15);
    EXPECT_NEAR(oracle_ref::rectangle_grid_max({3.0, -4.0}, {1.0, 1.0}, {1.0, 1.0}), 7.0, 1e-12);
}

TEST(SupportValue, EqualsMaximumOverSampledPriors) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + trial % 3;
        Vector zbar = props::uniform_vec(rng, n, -3.0, 3.0);
        AmbiguityRectangle amb{props::uniform_vec(rng, n, 0.0, 1.0), props::uniform_vec(rng, n, 0.0, 1.0)};
        double best = -HUGE_VAL;
        for (int s = 0; s < 10000; ++s) {
            // faces are sampled with positive probability so the vertices are reached
            Vector xi(n);
            for (int i = 0; i < n; ++i) {
                double p = u(rng);
                xi[i] = p < 1.0 / 3 ? -amb.kappa_lo[i]
                                    : (p < 2.0 / 3 ? amb.kappa_hi[i]
                                                   : -amb.kappa_lo[i] + (amb.kappa_hi[i] + amb.kappa_lo[i]) * u(rng));
            }
            best = std::max(best, xi.dot(zbar));
        }
        EXPECT_NEAR(support_value(zbar, amb), best, 1e-9);
    }
}

TEST(SupportValue, DimensionMismatchThrows) {
    EXPECT_THROW(support_value(Vector::Zero(2), AmbiguityRectangle::symmetric(3, 0.1)), Error);
}

TEST(Distance, UnconstrainedIsZeroWithFullOffset) {
    Matrix sigma(2, 2);
    sigma << 0.2, 0.0, 0.05, 0.3;
    auto d = distance_to_constraint(vec({1.5, -0.7}), AmbiguityRectangle::symmetric(2, 0.3),
                                    ConstraintSpec::unconstrained(2), sigma);
    EXPECT_EQ(d.value, 0.0);
    EXPECT_TRUE(d.argmin_z.isApprox(vec({-1.5, 0.7})));
    EXPECT_TRUE((sigma.transpose() * d.argmin_pi).isApprox(d.argmin_z));
}

TEST(Distance, OrthantExampleMatchesBruteForce) {
    AmbiguityRectangle amb{vec({0.3, 0.4}), vec({0.1, 0.2})};
    const auto cons = ConstraintSpec::orthant(2);
    const Matrix I = Matrix::Identity(2, 2);
    auto d = distance_to_constraint(vec({1.0, -2.0}), amb, cons, I);
    EXPECT_NEAR(d.value, 0.1, 1e-15);
    EXPECT_NEAR(d.argmin_z[0], 0.0, 1e-15);
    EXPECT_NEAR(d.argmin_z[1], 2.0, 1e-15);

    ZGridSpec g{Vector::Zero(2), Vector::Constant(2, 3.0), 1e-3, 2};
    auto b = brute_force_distance(vec({1.0, -2.0}), amb, cons, I, g);
    EXPECT_NEAR(b.value, 0.1, 1e-3);
    EXPECT_NEAR(b.argmin_z[1], 2.0, 1e-3);
}

TEST(Distance, OneDimensionalOrthantAbsorbsNegativeExposure) {
    auto d = distance_to_constraint(vec({-5.0}), AmbiguityRectangle::upper_only(1, 0.1),
                                    ConstraintSpec::orthant(1), Matrix::Identity(1, 1));
    EXPECT_EQ(d.value, 0.0);
    EXPECT_EQ(d.argmin_z[0], 5.0);
}

TEST(Distance, OrthantReducesToPositivePart) {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 200; ++i) {
        Vector zbar = props::uniform_vec(rng, 3, -2.0, 2.0);
        Vector kh = props::uniform_vec(rng, 3, 0.0, 1.0);
        AmbiguityRectangle amb{props::uniform_vec(rng, 3, 0.0, 1.0), kh};
        Matrix sigma = props::uniform_vec(rng, 3, 0.1, 0.5).asDiagonal();
        auto d = distance_to_constraint(zbar, amb, ConstraintSpec::orthant(3), sigma);
        EXPECT_NEAR(d.value, kh.dot(zbar.cwiseMax(0.0)), 1e-14);
        EXPECT_TRUE(d.argmin_z.isApprox((-zbar).cwiseMax(0.0)) || d.argmin_z.isZero());
    }
}

TEST(Distance, BoxClampsComponentwise) {
    auto cons = ConstraintSpec::box(vec({-1.0}), vec({0.5}));
    // sigma = 2: B = [-2, 1]; zbar = -3 needs z = 3 but only 1 is available
    auto d = distance_to_constraint(vec({-3.0}), AmbiguityRectangle::symmetric(1, 0.2), cons, Matrix::Constant(1, 1, 2.0));
    EXPECT_NEAR(d.value, 0.2 * 2.0, 1e-15);
    EXPECT_NEAR(d.argmin_z[0], 1.0, 1e-15);
    EXPECT_NEAR(d.argmin_pi[0], 0.5, 1e-15);
}

TEST(Distance, NonDiagonalClosedFormSignalsFallback) {
    Matrix sigma(2, 2);
    sigma << 0.2, 0.0, 0.1, 0.3;
    auto amb = AmbiguityRectangle::symmetric(2, 0.1);
    EXPECT_THROW(
        {
            try {
                distance_closed_form(vec({1.0, 1.0}), amb, ConstraintSpec::orthant(2), sigma);
            } catch (const Error& e) {
                EXPECT_EQ(e.code(), ErrorCode::NonAxisAligned);
                throw;
            }
        },
        Error);
    EXPECT_NO_THROW(distance_to_constraint(vec({1.0, 1.0}), amb, ConstraintSpec::orthant(2), sigma));
}

TEST(Distance, DimensionMismatchThrows) {
    EXPECT_THROW(distance_to_constraint(vec({1.0, 2.0}), AmbiguityRectangle::symmetric(2, 0.1),
                                        ConstraintSpec::orthant(3), Matrix::Identity(2, 2)),
                 Error);
}

TEST(BruteForce, LargeBoxApproachesUnconstrained) {
    auto amb = AmbiguityRectangle::symmetric(1, 0.5);
    double prev = HUGE_VAL;
    for (double half : {0.5, 1.0, 2.0, 4.0}) {
        auto cons = ConstraintSpec::box(vec({-half}), vec({half}));
        ZGridSpec g{vec({-half}), vec({half}), 1e-3, 2};
        double v = brute_force_distance(vec({3.0}), amb, cons, Matrix::Identity(1, 1), g).value;
        EXPECT_LE(v, prev + 1e-12);
        prev = v;
    }
    EXPECT_NEAR(prev, 0.0, 1e-12);
}

TEST(BruteForce, TrivialRectangleGivesZero) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        Vector zbar = props::uniform_vec(rng, 2, -2.0, 2.0);
        ZGridSpec g{Vector::Zero(2), Vector::Constant(2, 1.0), 0.1, 3};
        auto v = brute_force_distance(zbar, AmbiguityRectangle::none(2), ConstraintSpec::orthant(2),
                                      Matrix::Identity(2, 2), g);
        EXPECT_EQ(v.value, 0.0);
    }
}

TEST(BruteForce, EmptyGridThrows) {
    ZGridSpec g{vec({1.0}), vec({0.0}), 0.1, 2};
    EXPECT_THROW(brute_force_distance(vec({0.0}), AmbiguityRectangle::none(1), ConstraintSpec::orthant(1),
                                      Matrix::Identity(1, 1), g),
                 Error);
}

TEST(DistanceProperties, NonnegativeAndZeroWhenFeasible) {
    std::mt19937_64 rng(21);
    for (int c = 0; c < 500; ++c) {
        auto r = props::random_instance(rng, 1 + c % 3, c % 2 == 0);
        EXPECT_GE(distance_to_constraint(r.zbar, r.amb, r.cons, r.sigma).value, 0.0);
        // -zbar inside B
        Vector z = props::random_z_in_b(rng, r);
        EXPECT_NEAR(distance_to_constraint(Vector(-z), r.amb, r.cons, r.sigma).value, 0.0, 1e-12);
    }
}

TEST(DistanceProperties, OracleAgreement500) {
    auto o = props::ambiguity_oracle_agreement(11, 500);
    EXPECT_EQ(o.failures, 0u) << "worst excess " << o.worst;
    EXPECT_GE(o.cases, 500u);
}

TEST(DistanceProperties, PositiveHomogeneity1000) {
    auto o = props::ambiguity_homogeneity(12, 1000);
    EXPECT_EQ(o.failures, 0u) << "worst " << o.worst;
}

TEST(DistanceProperties, ArgminCertificate1000) {
    auto o = props::ambiguity_argmin_certificate(13, 1000);
    EXPECT_EQ(o.failures, 0u) << "worst " << o.worst;
}
