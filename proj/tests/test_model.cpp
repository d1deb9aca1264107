#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "lago/model.hpp"
#include "support.hpp"

using namespace lago;
using lago::test::box;
using lago::test::params;

TEST(Expit, SymmetryPoint) { EXPECT_DOUBLE_EQ(expit(0.0), 0.5); }

TEST(Expit, InvertsLogitAtNinety) {
    EXPECT_NEAR(logit(0.9), 2.1972245773362196, 1e-15);
    EXPECT_NEAR(expit(logit(0.9)), 0.9, 1e-15);
}

TEST(Expit, CoachingLinearPredictorGivesEightyFive) {
    // ln 0.10 + 2.78 ln 2.79 + ln(1.08)/3 + 1.75 ln 1.94, by hand
    const double eta = std::log(0.10) + 2.78 * std::log(2.79) + std::log(1.08) / 3.0 + 1.75 * std::log(1.94);
    EXPECT_NEAR(eta, 1.736, 2e-3);
    EXPECT_NEAR(expit(eta), 0.850, 3e-3);
}

TEST(Expit, NoOverflowAtExtremes) {
    for (double t : {-700.0, -745.0, -1e6, 700.0, 1e6}) {
        const double v = expit(t);
        EXPECT_TRUE(std::isfinite(v));
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    EXPECT_GT(expit(-700.0), 0.0);
    EXPECT_EQ(expit(700.0), 1.0);
}

TEST(Expit, RoundTripOverProbabilityRange) {
    for (double p : {1e-12, 1e-9, 1e-6, 1e-3, 0.1, 0.25, 0.5, 0.75, 0.9, 0.999, 1 - 1e-6, 1 - 1e-9, 1 - 1e-12}) {
        const double back = expit(logit(p));
        EXPECT_LE(std::abs(back - p) / p, 1e-12) << p;
    }
}

TEST(Logit, RejectsBoundary) {
    EXPECT_THROW(logit(0.0), DomainError);
    EXPECT_THROW(logit(1.0), DomainError);
    EXPECT_THROW(logit(1.5), DomainError);
}

TEST(LinearPredictor, ZeroParamsGiveZero) {
    EXPECT_EQ(linear_predictor(ModelParams::zeros(2, 1), InterventionPackage{1.3, 4.0}, CenterCovariates{-2.0}), 0.0);
}

TEST(LinearPredictor, HandArithmetic) {
    const auto b = lago::test::odds_ratio_params({1.2, 1.5});
    const double expected = 2 * std::log(1.2) + 4.5 * std::log(1.5);
    EXPECT_NEAR(linear_predictor(b, InterventionPackage{2.0, 4.5}, CenterCovariates{}), 2.189, 1e-3);
    EXPECT_DOUBLE_EQ(linear_predictor(b, InterventionPackage{2.0, 4.5}, CenterCovariates{}), expected);
}

TEST(LinearPredictor, ControlPackageGivesIntercept) {
    const auto b = params(-0.7, {0.4, 0.2}, {0.3});
    EXPECT_DOUBLE_EQ(linear_predictor(b, InterventionPackage::zeros(2), CenterCovariates{0.0}), -0.7);
}

TEST(LinearPredictor, DimensionMismatchThrows) {
    const auto b = params(0, {0.4, 0.2}, {0.3});
    EXPECT_THROW(linear_predictor(b, InterventionPackage{1.0}, CenterCovariates{0.0}), DimensionError);
    EXPECT_THROW(linear_predictor(b, InterventionPackage{1.0, 2.0}, CenterCovariates{}), DimensionError);
}

TEST(SuccessProbability, NullScenarioControlIsHalf) {
    const auto b = lago::test::odds_ratio_params({1.0, 1.0});
    EXPECT_DOUBLE_EQ(success_probability(b, InterventionPackage::zeros(2), CenterCovariates{}), 0.5);
}

TEST(SuccessProbability, KnownOptimumPackage) {
    const auto b = lago::test::odds_ratio_params({1.2, 1.5});
    EXPECT_NEAR(success_probability(b, InterventionPackage{2.0, 4.5}, CenterCovariates{}), 0.899, 1e-3);
}

TEST(SuccessProbability, LowerCornerBelowUpperCorner) {
    const auto b = lago::test::odds_ratio_params({1.2, 1.5});
    const auto bx = box({0, 0}, {2, 5});
    EXPECT_LT(success_probability(b, bx.lower_corner(), CenterCovariates{}),
              success_probability(b, InterventionPackage(bx.upper()), CenterCovariates{}));
}

TEST(SuccessProbability, StrictlyIncreasingIffPositiveEffect) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const auto b = params(u(rng), {u(rng), u(rng), trial % 5 == 0 ? 0.0 : u(rng)}, {u(rng)});
        const CenterCovariates z{u(rng)};
        for (Eigen::Index r = 0; r < 3; ++r) {
            InterventionPackage x{u(rng) + 1, u(rng) + 1, u(rng) + 1};
            const double before = success_probability(b, x, z);
            x[r] += 0.5;
            const double after = success_probability(b, x, z);
            const double beta = b.component_effects[r];
            if (beta > 0) EXPECT_GT(after, before);
            else EXPECT_LE(after, before);
        }
    }
}

TEST(SuccessProbability, PermutationInvariant) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const Vector b1 = Vector::NullaryExpr(4, [&] { return u(rng); });
        const Vector a = Vector::NullaryExpr(4, [&] { return 2.0 * u(rng); });
        std::vector<int> perm(4);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Vector pb(4), pa(4);
        for (int i = 0; i < 4; ++i) pb[i] = b1[perm[i]], pa[i] = a[perm[i]];
        const double base = success_probability(ModelParams(0.2, b1, Vector(0)), InterventionPackage(a), {});
        const double permuted = success_probability(ModelParams(0.2, pb, Vector(0)), InterventionPackage(pa), {});
        EXPECT_NEAR(base, permuted, 1e-15);
    }
}

TEST(PackageCost, HandArithmetic) {
    const auto bx = box({0, 0}, {2, 5});
    EXPECT_DOUBLE_EQ(package_cost(LinearCost{1.0, 8.0}, bx, InterventionPackage{2.0, 4.5}), 38.0);
    EXPECT_DOUBLE_EQ(package_cost(LinearCost{1.0, 8.0}, bx, InterventionPackage::zeros(2)), 0.0);
}

TEST(PackageCost, CoachingPackage) {
    EXPECT_DOUBLE_EQ(package_cost(LinearCost{800.0, 170.0}, box({1, 1}, {5, 40}), InterventionPackage{3.0, 1.0}),
                     2570.0);
}

TEST(PackageCost, OutsideBoxThrows) {
    EXPECT_THROW(package_cost(LinearCost{1.0, 8.0}, box({0, 0}, {2, 5}), InterventionPackage{2.5, 1.0}), DomainError);
    EXPECT_THROW(package_cost(LinearCost{1.0, 8.0}, box({0, 0}, {2, 5}), InterventionPackage{1.0}), DimensionError);
}

TEST(PackageCost, LinearCostIsAdditive) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto bx = box({0, 0, 0}, {2, 2, 2});
    const LinearCost c{3.0, 0.5, 7.25};
    for (int i = 0; i < 100; ++i) {
        const InterventionPackage x{u(rng), u(rng), u(rng)}, y{u(rng), u(rng), u(rng)};
        const InterventionPackage sum(x.components + y.components);
        EXPECT_NEAR(package_cost(c, bx, sum), package_cost(c, bx, x) + package_cost(c, bx, y), 1e-12);
    }
}

TEST(PackageCost, TabulatedEvaluatesCallable) {
    const TabulatedCost tab{[](const InterventionPackage& x) { return x[0] * x[0] + 2.0; }};
    EXPECT_DOUBLE_EQ(package_cost(tab, box({0}, {3}), InterventionPackage{1.5}), 4.25);
}

TEST(LinearCost, RejectsNonPositive) {
    EXPECT_THROW((LinearCost{1.0, 0.0}), DomainError);
    EXPECT_THROW((LinearCost{-1.0}), DomainError);
}

TEST(InterventionBox, Validation) {
    EXPECT_THROW(box({0, 3}, {2, 1}), DomainError);
    EXPECT_THROW(InterventionBox(make_vector({0}), make_vector({1, 2})), DimensionError);
    EXPECT_THROW(box({0}, {INFINITY}), DomainError);
    const auto bx = box({0, 0}, {2, 5});
    EXPECT_TRUE(bx.contains(InterventionPackage{2.0, 0.0}));
    EXPECT_FALSE(bx.contains(InterventionPackage{2.0, 5.1}));
    EXPECT_EQ(bx.clip(InterventionPackage{3.0, -1.0}), (InterventionPackage{2.0, 0.0}));
    EXPECT_EQ(bx.midpoint(), (InterventionPackage{1.0, 2.5}));
}
