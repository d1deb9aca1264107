#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "lago/simulator.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace lago;

namespace {

std::vector<CenterPlan> control_centers(int count, std::uint64_t n, Eigen::Index p, Eigen::Index q) {
    std::vector<CenterPlan> out;
    for (int j = 0; j < count; ++j)
        out.push_back({"c" + std::to_string(j), Arm::control, CenterCovariates::zeros(q), InterventionPackage::zeros(p),
                       InterventionPackage::zeros(p), n});
    return out;
}

double success_rate(const StageDataset& d) {
    double s = 0, n = 0;
    for (const auto& r : d.records()) {
        n += static_cast<double>(r.weight);
        s += static_cast<double>(r.weight) * r.outcome;
    }
    return s / n;
}

bool same_records(const StageDataset& a, const StageDataset& b) {
    if (a.records().size() != b.records().size()) return false;
    for (std::size_t i = 0; i < a.records().size(); ++i) {
        const auto& x = a.records()[i];
        const auto& y = b.records()[i];
        if (x.stage != y.stage || x.center_id != y.center_id || x.outcome != y.outcome || x.weight != y.weight ||
            !(x.actual == y.actual) || x.covariates.values != y.covariates.values)
            return false;
    }
    return true;
}

bool same_summary(const SimulationSummary& a, const SimulationSummary& b) {
    if (a.coefficients.size() != b.coefficients.size()) return false;
    for (std::size_t i = 0; i < a.coefficients.size(); ++i) {
        const auto& x = a.coefficients[i];
        const auto& y = b.coefficients[i];
        if (x.mean_estimate != y.mean_estimate || x.mean_se != y.mean_se || x.emp_sd != y.emp_sd || x.cp95 != y.cp95)
            return false;
    }
    return a.bias_x_opt == b.bias_x_opt && a.rmse_x_opt == b.rmse_x_opt && a.set_cp95 == b.set_cp95 &&
           a.set_perc == b.set_perc && a.bands_cp95 == b.bands_cp95 && a.rejection_rates == b.rejection_rates;
}

}  // namespace

TEST(Seeds, ChildSeedsDistinctAndStable) {
    EXPECT_EQ(child_seed(1, 0), child_seed(1, 0));
    EXPECT_NE(child_seed(1, 0), child_seed(1, 1));
    EXPECT_NE(child_seed(1, 0), child_seed(2, 0));
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const double u = uniform01(rng);
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
}

TEST(GenerateStageData, NullSuccessRateIsHalf) {
    Rng rng(11);
    const auto d = generate_stage_data(rng, 1, control_centers(10, 100000, 2, 0), ModelParams::zeros(2, 0));
    EXPECT_NEAR(success_rate(d), 0.5, 0.0015);
    EXPECT_DOUBLE_EQ(d.total_weight(), 1e6);
    EXPECT_LE(d.records().size(), 20u);
}

TEST(GenerateStageData, DeterministicForFixedSeed) {
    const auto centers = control_centers(4, 500, 1, 0);
    Rng a(42), b(42);
    EXPECT_TRUE(same_records(generate_stage_data(a, 1, centers, ModelParams::zeros(1, 0)),
                             generate_stage_data(b, 1, centers, ModelParams::zeros(1, 0))));
}

TEST(GenerateStageData, SaturatedPredictorGivesAllSuccesses) {
    Rng rng(1);
    const auto d = generate_stage_data(rng, 1, control_centers(3, 1000, 1, 0), ModelParams(50.0, make_vector({0.0}), {}));
    EXPECT_DOUBLE_EQ(success_rate(d), 1.0);
}

TEST(Coupling, EqualProbabilitiesCopyY2) {
    for (double w : {0.0, 0.3, 0.99})
        for (int y : {0, 1}) EXPECT_EQ(coupled_outcome(y, w, 0.4, 0.4), y);
}

TEST(Coupling, ZeroStaysZeroWhenLimitHigher) {
    for (int i = 0; i < 100; ++i) EXPECT_EQ(coupled_outcome(0, i / 100.0, 0.9, 0.6), 0);
}

TEST(Coupling, RejectsBadInput) {
    EXPECT_THROW(coupled_outcome(1, 0.5, 0.0, 0.5), DomainError);
    EXPECT_THROW(coupled_outcome(1, 0.5, 0.5, 1.0), DomainError);
    EXPECT_THROW(coupled_outcome(2, 0.5, 0.5, 0.5), DomainError);
}

TEST(Coupling, MarginalLawAndDistance) {
    const int draws = 1000000;
    boost::math::chi_squared chi(1);
    const double critical = boost::math::quantile(chi, 0.999);
    Rng rng(2024);
    for (auto [pl, pa] : {std::pair{0.9, 0.6}, std::pair{0.3, 0.7}, std::pair{0.5, 0.5}}) {
        double ones = 0, differ = 0;
        for (int i = 0; i < draws; ++i) {
            const int y2 = uniform01(rng) < pl ? 1 : 0;
            const int y = coupled_outcome(y2, uniform01(rng), pl, pa);
            ones += y;
            differ += y != y2;
        }
        const double mean = ones / draws, dis = differ / draws, gap = std::abs(pl - pa);
        EXPECT_NEAR(mean, pa, 3 * std::sqrt(pa * (1 - pa) / draws));
        EXPECT_NEAR(dis, gap, std::max(3 * std::sqrt(gap * (1 - gap) / draws), 1e-12));
        const double e1 = pa * draws, e0 = (1 - pa) * draws;
        const double stat = (ones - e1) * (ones - e1) / e1 + (draws - ones - e0) * (draws - ones - e0) / e0;
        EXPECT_LT(stat, critical);
    }
}

TEST(Recommend, NonPositiveEffectsGiveLowerCorner) {
    const auto s = default_two_component_scenario(1.2, 1.5, 100, 200, 20);
    ModelFit f;
    f.beta_hat = ModelParams(0.0, make_vector({-0.1, 0.0}), make_vector({0.2}));
    const auto r = recommend_next_stage(f, s, CenterCovariates{0.0});
    EXPECT_EQ(r.x_opt, s.box.lower_corner());
    EXPECT_EQ(r.status, OptimizationStatus::infeasible_max_returned);
}

TEST(Recommend, TruthGivesTrueOptimum) {
    const auto s = default_two_component_scenario(1.2, 2.0, 100, 500, 20);
    ModelFit f;
    f.beta_hat = s.true_params;
    for (double z : {-1.0, 0.0, 0.7}) {
        const auto r = recommend_next_stage(f, s, CenterCovariates{z});
        const auto truth = solve_linear_greedy(s.problem_at(s.true_params, CenterCovariates{z}));
        EXPECT_EQ(r.x_opt, truth.x_opt);
    }
}

TEST(Recommend, ConvergesWithLargeStageOne) {
    auto s = default_two_component_scenario(1.2, 1.5, 10000, 1, 20);
    double worst = 0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        const auto trial = run_lago_trial(s, child_seed(77, rep));
        for (const auto& c : trial.centers[1]) {
            if (c.arm == Arm::control) continue;
            const auto truth = solve_linear_greedy(s.problem_at(s.true_params, c.z));
            worst = std::max(worst, (c.recommended.components - truth.x_opt.components).cwiseAbs().maxCoeff());
        }
    }
    EXPECT_LT(worst, 0.1);
}

// Ten times the stage-1 size shrinks the worst deviation by about sqrt(10).
TEST(Recommend, ConvergesWithLargerStageOne) {
    auto s = default_two_component_scenario(1.2, 1.5, 100000, 1, 20);
    double worst = 0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        const auto trial = run_lago_trial(s, child_seed(77, rep));
        for (const auto& c : trial.centers[1]) {
            if (c.arm == Arm::control) continue;
            const auto truth = solve_linear_greedy(s.problem_at(s.true_params, c.z));
            worst = std::max(worst, (c.recommended.components - truth.x_opt.components).cwiseAbs().maxCoeff());
        }
    }
    EXPECT_LT(worst, 0.1);
}

TEST(Trial, StructureAndDeterminism) {
    const auto s = default_two_component_scenario(1.2, 1.5, 100, 200, 20);
    const auto a = run_lago_trial(s, 5);
    const auto b = run_lago_trial(s, 5);
    EXPECT_TRUE(same_records(a.data, b.data));
    EXPECT_EQ(a.final_fit.coefficients(), b.final_fit.coefficients());
    ASSERT_EQ(a.centers.size(), 2u);
    ASSERT_EQ(a.interim_fits.size(), 2u);
    ASSERT_EQ(a.recommendations.size(), 2u);
    EXPECT_EQ(a.tests.size(), 4u);
    for (const auto& stage : a.centers)
        for (std::size_t j = 0; j < stage.size(); ++j) {
            EXPECT_EQ(stage[j].arm, j < 10 ? Arm::control : Arm::intervention);
            if (stage[j].arm == Arm::control) {
                EXPECT_TRUE(stage[j].actual.components.isZero(0.0));
            }
            EXPECT_TRUE(s.box.contains(stage[j].actual));
        }
    // Factorial stage-1 design over the intervention slots.
    EXPECT_EQ(a.centers[0][10].recommended, (InterventionPackage{0.0, 0.0}));
    EXPECT_EQ(a.centers[0][11].recommended, (InterventionPackage{2.0, 0.0}));
    EXPECT_EQ(a.centers[0][12].recommended, (InterventionPackage{0.0, 5.0}));
    EXPECT_EQ(a.centers[0][13].recommended, (InterventionPackage{2.0, 5.0}));
}

TEST(Trial, FixedInitialPackageSingleComponent) {
    auto s = default_two_component_scenario(1.5, 1.5, 100, 200, 20);
    s.true_params.component_effects = make_vector({std::log(1.5)});
    s.box = InterventionBox(make_vector({0.0}), make_vector({5.0}));
    s.cost = LinearCost{1.0};
    s.grid_step = make_vector({0.125});
    s.initial_design = InitialDesign::fixed;
    s.initial_recommendation = InterventionPackage{2.5};
    const auto t = run_lago_trial(s, StageSeeds::derive(3, 2));
    for (const auto& c : t.centers[0])
        if (c.arm == Arm::intervention) {
            EXPECT_EQ(c.recommended, InterventionPackage{2.5});
        }
    EXPECT_TRUE(t.interim_fits[0].has_value());
    EXPECT_EQ(t.fallbacks, 0);
}

// With two components a single fixed package leaves a_1 and a_2 collinear, so
// no stage can be fitted and the final fit reports non-identifiability.
TEST(Trial, FixedInitialPackageTwoComponentsNotIdentifiable) {
    auto s = default_two_component_scenario(1.2, 1.5, 100, 200, 20);
    s.initial_design = InitialDesign::fixed;
    s.initial_recommendation = InterventionPackage{1.0, 2.5};
    EXPECT_THROW(run_lago_trial(s, 3), NonIdentifiableError);
}

TEST(Trial, ImplementationMapHalvesActual) {
    auto s = default_two_component_scenario(1.2, 1.5, 100, 200, 20);
    s.implementation_map.scale = make_vector({0.5, 0.5});
    const auto t = run_lago_trial(s, 8);
    for (const auto& c : t.centers[1]) {
        if (c.arm == Arm::control) continue;
        EXPECT_EQ(c.actual.components, (0.5 * c.recommended.components).eval());
    }
    // Records carry the actual package, not the recommendation.
    for (const auto& r : t.data.records()) {
        if (r.stage != 2 || r.arm == Arm::control) continue;
        const auto& plan = *std::find_if(t.centers[1].begin(), t.centers[1].end(),
                                         [&](const CenterPlan& c) { return c.id == r.center_id; });
        EXPECT_EQ(r.actual, plan.actual);
    }
}

// Regenerating stage-k outcomes must not change recommendations for stages <= k.
TEST(Trial, EarlierRecommendationsIgnoreLaterOutcomes) {
    auto s = default_two_component_scenario(1.2, 1.5, 100, 200, 20);
    s.stages = 3;
    s.n_per_center = {100, 200, 200};
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto base_seeds = StageSeeds::derive(seed, 3);
        const auto base = run_lago_trial(s, base_seeds);
        for (int k = 1; k <= 3; ++k) {
            auto perturbed = base_seeds;
            perturbed.outcomes[static_cast<std::size_t>(k - 1)] ^= 0x5DEECE66DULL;
            const auto other = run_lago_trial(s, perturbed);
            for (int m = 1; m <= k; ++m)
                EXPECT_EQ(base.recommendations[static_cast<std::size_t>(m - 1)],
                          other.recommendations[static_cast<std::size_t>(m - 1)])
                    << "seed " << seed << " stage " << k << " rec " << m;
            if (k < 3) {
                EXPECT_NE(base.recommendations[static_cast<std::size_t>(k)],
                          other.recommendations[static_cast<std::size_t>(k)]);
            }
        }
    }
}

TEST(Trial, NullTwoProportionPValuesUniformSmallDesign) {
    auto s = default_two_component_scenario(1.0, 1.0, 50, 100, 6);
    s.true_params.covariate_effects = Vector(0);
    s.covariate_law = CovariateLaw::none;
    s.z_tilde = CenterCovariates::zeros(0);
    std::vector<double> pvals;
    for (std::uint64_t rep = 0; rep < 1000; ++rep) {
        const auto t = run_lago_trial(s, child_seed(606, rep));
        pvals.push_back(t.tests[2].p_value);
    }
    EXPECT_LT(oracle::ks_uniform(pvals), 0.06);
}

TEST(MonteCarlo, ReproducibleAcrossRunsAndWorkerCounts) {
    auto s = default_two_component_scenario(1.2, 1.5, 100, 200, 20);
    s.workers = 1;
    const auto a = monte_carlo(s, 60);
    const auto b = monte_carlo(s, 60);
    s.workers = 4;
    const auto c = monte_carlo(s, 60);
    EXPECT_TRUE(same_summary(a, b));
    EXPECT_TRUE(same_summary(a, c));
}

TEST(MonteCarlo, SingleReplicateFlagsSd) {
    const auto s = default_two_component_scenario(1.2, 1.5, 100, 200, 20);
    const auto sum = monte_carlo(s, 1);
    EXPECT_FALSE(sum.sd_defined);
    EXPECT_EQ(sum.replicates, 1u);
    for (const auto& c : sum.coefficients) EXPECT_TRUE(std::isnan(c.emp_sd));
    const auto trial = run_lago_trial(s, child_seed(s.seed, 0));
    EXPECT_DOUBLE_EQ(sum.coefficients[0].mean_estimate, trial.final_fit.beta_hat.component_effects[0]);
}

TEST(MonteCarlo, AllFailedThrows) {
    const auto s = default_two_component_scenario(1.2, 1.5, 100, 200, 20);
    EXPECT_THROW(summarize(s, std::vector<ReplicateOutcome>(3)), NumericalError);
}

TEST(MonteCarlo, SummaryInvariants) {
    const auto s = default_two_component_scenario(1.2, 2.0, 100, 200, 20);
    const auto sum = monte_carlo(s, 200);
    for (double rate : {sum.set_cp95, sum.bands_cp95, sum.set_perc / 100})
        EXPECT_TRUE(rate >= 0 && rate <= 1);
    for (double rate : sum.rejection_rates) EXPECT_TRUE(rate >= 0 && rate <= 1);
    EXPECT_GE(sum.rmse_x_opt, sum.bias_x_opt.norm() - 1e-12);
}

TEST(MonteCarlo, NullEstimatesUnbiased) {
    const auto sum = monte_carlo(default_two_component_scenario(1.0, 1.0, 100, 200, 20), 1000);
    for (std::size_t r = 0; r < 2; ++r) {
        const auto& c = sum.coefficients[r];
        EXPECT_LT(std::abs(c.mean_estimate), 3 * c.emp_sd / std::sqrt(static_cast<double>(sum.succeeded))) << c.name;
    }
}

TEST(MonteCarlo, NullStageSuccessRatesUncorrelated) {
    const auto results = run_replicates(default_two_component_scenario(1.0, 1.0, 100, 200, 20), 1000);
    std::vector<double> s1, s2;
    for (const auto& r : results) {
        if (!r.ok) continue;
        s1.push_back(r.stage_success_rates[0]);
        s2.push_back(r.stage_success_rates[1]);
    }
    const double n = static_cast<double>(s1.size());
    const double m1 = std::accumulate(s1.begin(), s1.end(), 0.0) / n, m2 = std::accumulate(s2.begin(), s2.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < s1.size(); ++i) {
        sxy += (s1[i] - m1) * (s2[i] - m2);
        sxx += (s1[i] - m1) * (s1[i] - m1);
        syy += (s2[i] - m2) * (s2[i] - m2);
    }
    EXPECT_LT(std::abs(sxy / std::sqrt(sxx * syy)), 3 / std::sqrt(n));
}

// Mean estimated SE tracks the empirical SD of the estimates.
TEST(MonteCarlo, StandardErrorsMatchSamplingSd) {
    const auto sum = monte_carlo(default_two_component_scenario(1.2, 1.5, 100, 200, 20), 1000);
    for (const auto& c : sum.coefficients) {
        EXPECT_GT(c.se_over_sd, 0.9) << c.name;
        EXPECT_LT(c.se_over_sd, 1.1) << c.name;
    }
}

TEST(MonteCarlo, SmallerDesignBiasAndCoverage) {
    const auto sum = monte_carlo(default_two_component_scenario(1.2, 1.5, 50, 100, 10), 1000);
    const auto& b11 = sum.coefficients[0];
    EXPECT_NEAR(b11.pct_rel_bias, -3.0, 5.0);
    EXPECT_GE(100 * b11.cp95, 93.0);
    EXPECT_LE(100 * b11.cp95, 97.0);
}
