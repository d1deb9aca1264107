#pragma once

// Simulated controlled multi-stage trials: each stage enrolls fresh centers
// (half control, half intervention), intervention centers receive the package
// recommended from the data of earlier stages, and the pooled data are refit.
// Monte Carlo batches aggregate estimator, optimizer and coverage metrics.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "lago/error.hpp"
#include "lago/estimation.hpp"
#include "lago/inference.hpp"
#include "lago/model.hpp"
#include "lago/optimizer.hpp"

namespace lago {

// ---------------------------------------------------------------------------
// Seeding

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Deterministic child stream `index` of `parent`.
inline std::uint64_t child_seed(std::uint64_t parent, std::uint64_t index) {
    return splitmix64(parent ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

using Rng = std::mt19937_64;

// Uniform on [0,1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// ---------------------------------------------------------------------------
// Scenario

enum class CovariateLaw { none, standard_normal };

// Stage-1 packages for intervention centers, fixed before any outcome is seen.
enum class InitialDesign {
    factorial,  // cycle through the 2^p box corners (center i gets corner with bits of i)
    uniform,    // independent uniform draw over the box per center
    fixed       // every center gets `initial_recommendation`
};

// a = clip(scale .* x + shift); empty vectors mean identity.
struct ImplementationMap {
    Vector scale;
    Vector shift;

    bool identity() const { return scale.size() == 0 && shift.size() == 0; }

    InterventionPackage apply(const InterventionPackage& x, const InterventionBox& box) const {
        Vector a = x.components;
        if (scale.size()) a = a.cwiseProduct(scale);
        if (shift.size()) a += shift;
        return box.clip(InterventionPackage(a));
    }

    friend bool operator==(const ImplementationMap& a, const ImplementationMap& b) {
        return a.scale.size() == b.scale.size() && a.shift.size() == b.shift.size() &&
               a.scale == b.scale && a.shift == b.shift;
    }
};

struct ScenarioConfig {
    int stages = 2;
    int centers_per_stage = 20;
    std::vector<std::uint64_t> n_per_center;  // one entry per stage
    ModelParams true_params;
    bool include_intercept = false;
    CovariateLaw covariate_law = CovariateLaw::standard_normal;
    InterventionBox box;
    LinearCost cost;
    double target = 0.9;
    InitialDesign initial_design = InitialDesign::factorial;
    InterventionPackage initial_recommendation;  // used when initial_design == fixed
    ImplementationMap implementation_map;
    std::uint64_t seed = 1;
    std::size_t replicates = 1000;

    // Final analysis settings.
    CenterCovariates z_tilde;  // covariates of the "typical" center (default zero)
    Vector grid_step;          // confidence set / band grid over the box
    double level = 0.95;
    double alpha = 0.05;  // test size for rejection rates
    int workers = 0;      // 0 = hardware concurrency
    FitOptions fit;

    Eigen::Index p() const { return true_params.p(); }
    Eigen::Index q() const { return true_params.q(); }

    void validate() const {
        if (stages < 2) throw DomainError("design.stages must be at least 2");
        if (centers_per_stage < 2 || centers_per_stage % 2 != 0)
            throw DomainError("design.centers_per_stage must be an even number >= 2");
        if (static_cast<int>(n_per_center.size()) != stages)
            throw DimensionError("design.n_per_center needs one entry per stage");
        for (auto n : n_per_center)
            if (n < 1) throw DomainError("design.n_per_center entries must be >= 1");
        if (!true_params.finite()) throw DomainError("truth parameters must be finite");
        if (box.dimension() != p()) throw DimensionError("box dimension differs from truth.beta1 length");
        if (cost.unit_costs.size() != p()) throw DimensionError("cost.unit length differs from truth.beta1 length");
        if (!(target > 0.0 && target < 1.0)) throw DomainError("target.p must lie in (0,1)");
        if (!(level > 0.0 && level < 1.0)) throw DomainError("analysis.level must lie in (0,1)");
        if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("analysis.alpha must lie in (0,1)");
        if (covariate_law == CovariateLaw::none && q() != 0)
            throw DimensionError("covariate law 'none' requires no covariate effects");
        if (!include_intercept && true_params.intercept != 0.0)
            throw DomainError("truth.beta0 must be 0 when the intercept is excluded");
        if (initial_design == InitialDesign::fixed) {
            if (initial_recommendation.size() != p())
                throw DimensionError("design.initial_recommendation length differs from p");
            if (!box.contains(initial_recommendation))
                throw DomainError("design.initial_recommendation lies outside the box");
        }
        if (z_tilde.size() != q()) throw DimensionError("analysis.z_tilde length differs from q");
        if (grid_step.size() != p()) throw DimensionError("analysis.grid_step length differs from p");
        for (Eigen::Index r = 0; r < grid_step.size(); ++r)
            if (!(grid_step[r] > 0.0)) throw DomainError("analysis.grid_step entries must be positive");
        const auto& m = implementation_map;
        if ((m.scale.size() && m.scale.size() != p()) || (m.shift.size() && m.shift.size() != p()))
            throw DimensionError("implementation map length differs from p");
        if (workers < 0) throw DomainError("simulation.workers must be >= 0");
        if (replicates < 1) throw DomainError("simulation.replicates must be >= 1");
    }

    OptimizationProblem problem_at(const ModelParams& params, const CenterCovariates& z) const {
        return OptimizationProblem{params, z, box, CostFunction(cost), target};
    }

    std::vector<InterventionPackage> analysis_grid() const {
        return cartesian_grid(box.lower(), box.upper(), grid_step);
    }
};

// Defaults for the two-component design with unit costs (1, 8), box
// [0,2] x [0,5], one N(0,1) covariate with effect log 0.75 and no intercept.
inline ScenarioConfig default_two_component_scenario(double or1, double or2, std::uint64_t n1,
                                                     std::uint64_t n2, int centers) {
    ScenarioConfig s;
    s.stages = 2;
    s.centers_per_stage = centers;
    s.n_per_center = {n1, n2};
    s.true_params = ModelParams(0.0, make_vector({std::log(or1), std::log(or2)}), make_vector({std::log(0.75)}));
    s.include_intercept = false;
    s.covariate_law = CovariateLaw::standard_normal;
    s.box = InterventionBox(make_vector({0.0, 0.0}), make_vector({2.0, 5.0}));
    s.cost = LinearCost{1.0, 8.0};
    s.target = 0.9;
    s.initial_recommendation = s.box.midpoint();
    s.z_tilde = CenterCovariates::zeros(1);
    s.grid_step = make_vector({0.05, 0.125});
    s.fit.include_intercept = false;
    return s;
}

// ---------------------------------------------------------------------------
// Stage data

struct CenterPlan {
    std::string id;
    Arm arm = Arm::control;
    CenterCovariates z;
    InterventionPackage recommended;
    InterventionPackage actual;
    std::uint64_t n = 0;
};

// One Bernoulli(p_a(beta; z)) draw per participant; stored as at most two
// weighted records (successes, failures) per center.
inline StageDataset generate_stage_data(Rng& rng, int stage, const std::vector<CenterPlan>& centers,
                                        const ModelParams& truth) {
    StageDataset data(truth.p(), truth.q());
    for (const auto& c : centers) {
        const double prob = success_probability(truth, c.actual, c.z);
        std::uint64_t successes = 0;
        for (std::uint64_t i = 0; i < c.n; ++i) successes += uniform01(rng) < prob ? 1 : 0;
        for (int y : {1, 0}) {
            const std::uint64_t w = y == 1 ? successes : c.n - successes;
            if (w == 0) continue;
            data.add(ParticipantRecord{stage, c.id, c.arm, c.actual, c.z, y, w});
        }
    }
    return data;
}

// Coupled outcome with marginal Bernoulli(p_actual) built from
// y2 ~ Bernoulli(p_limit) and an independent uniform w; disagrees with y2
// with probability |p_limit - p_actual|.
inline int coupled_outcome(int y2, double w, double p_limit, double p_actual) {
    if (!(p_limit > 0.0 && p_limit < 1.0) || !(p_actual > 0.0 && p_actual < 1.0))
        throw DomainError("coupling probabilities must lie in (0,1)");
    if (y2 != 0 && y2 != 1) throw DomainError("coupled outcome needs a binary y2");
    if (p_limit > p_actual) {
        if (y2 == 0) return 0;
        return w < (p_limit - p_actual) / p_limit ? 0 : 1;
    }
    if (y2 == 1) return 1;
    return w < (p_actual - p_limit) / (1.0 - p_limit) ? 1 : 0;
}

// Package for a new center from an interim fit: the greedy optimum at the
// interim estimates (or its infeasible fallback), inside the box.
inline OptimizationResult recommend_next_stage(const ModelFit& fit_so_far, const ScenarioConfig& scenario,
                                               const CenterCovariates& z_next) {
    auto res = solve_linear_greedy(scenario.problem_at(fit_so_far.beta_hat, z_next));
    res.x_opt = scenario.box.clip(res.x_opt);
    return res;
}

// Stage-1 package for the `slot`-th intervention center.
inline InterventionPackage initial_package(const ScenarioConfig& scenario, int slot, Rng& rng) {
    const auto& lo = scenario.box.lower();
    const auto& hi = scenario.box.upper();
    InterventionPackage x = scenario.box.lower_corner();
    switch (scenario.initial_design) {
        case InitialDesign::fixed:
            return scenario.initial_recommendation;
        case InitialDesign::uniform:
            for (Eigen::Index r = 0; r < x.size(); ++r) x[r] = lo[r] + (hi[r] - lo[r]) * uniform01(rng);
            return x;
        case InitialDesign::factorial:
            for (Eigen::Index r = 0; r < x.size(); ++r)
                if (r < 64 && ((static_cast<unsigned long long>(slot) >> r) & 1ULL)) x[r] = hi[r];
            return x;
    }
    return x;
}

// ---------------------------------------------------------------------------
// One trial

struct StageSeeds {
    std::vector<std::uint64_t> covariates;  // center covariates and stage-1 packages
    std::vector<std::uint64_t> outcomes;    // participant outcomes

    static StageSeeds derive(std::uint64_t trial_seed, int stages) {
        StageSeeds s;
        for (int k = 0; k < stages; ++k) {
            s.covariates.push_back(child_seed(trial_seed, 2 * static_cast<std::uint64_t>(k)));
            s.outcomes.push_back(child_seed(trial_seed, 2 * static_cast<std::uint64_t>(k) + 1));
        }
        return s;
    }
};

struct TrialResult {
    StageDataset data;
    std::vector<std::vector<CenterPlan>> centers;  // per stage
    std::vector<std::optional<ModelFit>> interim_fits;  // [k] = fit on stages 1..k+1
    // [k][j] = recommended package for center j of stage k+1 (zero for control centers).
    std::vector<std::vector<InterventionPackage>> recommendations;
    int fallbacks = 0;  // stages whose recommendation reused the previous one
    ModelFit final_fit;
    ModelFit null_fit;  // beta1 = 0 submodel
    OptimizationResult final_opt;
    ConfidenceSet final_confset;
    ConfidenceBand final_bands;
    std::vector<TestResult> tests;  // wald, lrt, two_proportion, group_indicator
};

inline TrialResult run_lago_trial(const ScenarioConfig& scenario, const StageSeeds& seeds) {
    scenario.validate();
    const int K = scenario.stages;
    if (static_cast<int>(seeds.covariates.size()) != K || static_cast<int>(seeds.outcomes.size()) != K)
        throw DimensionError("stage seed count differs from number of stages");
    const int J = scenario.centers_per_stage;
    const Eigen::Index p = scenario.p(), q = scenario.q();

    TrialResult trial;
    trial.data = StageDataset(p, q);
    std::vector<InterventionPackage> previous;

    for (int k = 1; k <= K; ++k) {
        Rng cov_rng(seeds.covariates[static_cast<std::size_t>(k - 1)]);
        Rng out_rng(seeds.outcomes[static_cast<std::size_t>(k - 1)]);
        std::normal_distribution<double> normal(0.0, 1.0);

        std::vector<CenterPlan> plans(static_cast<std::size_t>(J));
        for (int j = 0; j < J; ++j) {
            auto& c = plans[static_cast<std::size_t>(j)];
            c.id = "s" + std::to_string(k) + "c" + std::to_string(j + 1);
            c.arm = j < J / 2 ? Arm::control : Arm::intervention;
            c.z = CenterCovariates::zeros(q);
            if (scenario.covariate_law == CovariateLaw::standard_normal)
                for (Eigen::Index s = 0; s < q; ++s) c.z.values[s] = normal(cov_rng);
            c.n = scenario.n_per_center[static_cast<std::size_t>(k - 1)];
        }

        const ModelFit* interim = k >= 2 && trial.interim_fits[static_cast<std::size_t>(k - 2)]
                                      ? &*trial.interim_fits[static_cast<std::size_t>(k - 2)]
                                      : nullptr;
        if (k >= 2 && !interim) ++trial.fallbacks;
        std::vector<InterventionPackage> recs;
        for (int j = 0; j < J; ++j) {
            auto& c = plans[static_cast<std::size_t>(j)];
            if (c.arm == Arm::control) {
                c.recommended = InterventionPackage::zeros(p);
                c.actual = c.recommended;
            } else {
                if (k == 1) {
                    c.recommended = initial_package(scenario, j - J / 2, cov_rng);
                } else if (interim) {
                    c.recommended = recommend_next_stage(*interim, scenario, c.z).x_opt;
                } else {
                    c.recommended = previous[static_cast<std::size_t>(j)];
                }
                c.actual = scenario.implementation_map.apply(c.recommended, scenario.box);
            }
            recs.push_back(c.recommended);
        }

        trial.data.append(generate_stage_data(out_rng, k, plans, scenario.true_params));
        trial.centers.push_back(std::move(plans));
        trial.recommendations.push_back(recs);
        previous = std::move(recs);

        if (k < K) {
            try {
                trial.interim_fits.emplace_back(fit_mle(trial.data, scenario.fit));
            } catch (const NumericalError&) {
                trial.interim_fits.emplace_back(std::nullopt);
            }
        }
    }

    trial.final_fit = fit_mle(trial.data, scenario.fit);
    trial.interim_fits.emplace_back(trial.final_fit);

    const auto grid = scenario.analysis_grid();
    trial.final_opt = solve_linear_greedy(scenario.problem_at(trial.final_fit.beta_hat, scenario.z_tilde));
    trial.final_confset = confidence_set(trial.final_fit, grid, scenario.z_tilde, scenario.target, scenario.level);
    trial.final_bands = scheffe_bands(trial.final_fit, grid, scenario.z_tilde, scenario.level);

    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    const auto guarded = [&](TestKind kind, auto&& run) {
        try {
            return run();
        } catch (const NumericalError&) {
            return TestResult{nan, 0, nan, kind};
        }
    };
    trial.tests.push_back(guarded(TestKind::wald, [&] { return wald_test_no_effect(trial.final_fit); }));
    trial.tests.push_back(guarded(TestKind::lrt, [&] {
        FitOptions null_opts = scenario.fit;
        null_opts.include_components = false;
        trial.null_fit = fit_mle(trial.data, null_opts);
        return lr_test(trial.final_fit, trial.null_fit);
    }));
    trial.tests.push_back(two_proportion_test(trial.data));
    trial.tests.push_back(guarded(TestKind::group_indicator, [&] {
        FitOptions opts = scenario.fit;
        opts.include_intercept = true;
        return group_indicator_test(trial.data, opts);
    }));
    return trial;
}

inline TrialResult run_lago_trial(const ScenarioConfig& scenario, std::uint64_t trial_seed) {
    return run_lago_trial(scenario, StageSeeds::derive(trial_seed, scenario.stages));
}

// ---------------------------------------------------------------------------
// Monte Carlo

struct ReplicateOutcome {
    bool ok = false;
    std::string failure;
    Vector estimates;        // fitted coordinates
    Vector standard_errors;  // fitted coordinates
    InterventionPackage x_hat;
    bool set_covers = false;
    double set_fraction = 0.0;
    bool band_covers = false;
    std::array<double, 4> p_values{};  // wald, lrt, two_proportion, group_indicator
    std::vector<double> stage_success_rates;
    int fallbacks = 0;
};

struct CoefficientSummary {
    std::string name;
    double truth = 0.0;
    double mean_estimate = 0.0;
    double bias = 0.0;
    double pct_rel_bias = 0.0;  // NaN when truth == 0
    double mean_se = 0.0;
    double emp_sd = 0.0;        // NaN for a single replicate
    double se_over_sd = 0.0;
    double cp95 = 0.0;
};

struct SimulationSummary {
    std::size_t replicates = 0;
    std::size_t succeeded = 0;
    std::size_t failed = 0;
    std::size_t fallbacks = 0;
    bool sd_defined = false;
    std::vector<CoefficientSummary> coefficients;
    InterventionPackage true_x_opt;
    OptimizationStatus true_status = OptimizationStatus::optimal;
    Vector bias_x_opt;
    double rmse_x_opt = 0.0;
    double set_cp95 = 0.0;
    double set_perc = 0.0;  // percent of grid
    double bands_cp95 = 0.0;
    std::array<double, 4> rejection_rates{};
    std::array<std::size_t, 4> test_counts{};
};

inline constexpr std::array<TestKind, 4> kTrialTests = {TestKind::wald, TestKind::lrt, TestKind::two_proportion,
                                                        TestKind::group_indicator};

inline Vector true_coefficients(const ScenarioConfig& s) {
    Vector v(s.p() + s.q() + (s.include_intercept ? 1 : 0));
    Eigen::Index k = 0;
    if (s.include_intercept) v[k++] = s.true_params.intercept;
    for (Eigen::Index r = 0; r < s.p(); ++r) v[k++] = s.true_params.component_effects[r];
    for (Eigen::Index r = 0; r < s.q(); ++r) v[k++] = s.true_params.covariate_effects[r];
    return v;
}

inline ReplicateOutcome evaluate_replicate(const ScenarioConfig& scenario, std::uint64_t trial_seed,
                                           const OptimizationResult& truth_opt) {
    ReplicateOutcome out;
    try {
        const auto trial = run_lago_trial(scenario, trial_seed);
        const auto& fit = trial.final_fit;
        out.estimates = fit.coefficients();
        out.standard_errors = fit.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
        out.x_hat = trial.final_opt.x_opt;
        out.set_covers = pointwise_probability_interval(fit, truth_opt.x_opt, scenario.z_tilde, scenario.level)
                             .contains(scenario.target);
        out.set_fraction = trial.final_confset.fraction();
        out.band_covers = band_covers(trial.final_bands, [&](const InterventionPackage& x) {
            return success_probability(scenario.true_params, x, scenario.z_tilde);
        });
        for (std::size_t t = 0; t < trial.tests.size(); ++t) out.p_values[t] = trial.tests[t].p_value;
        for (int k = 1; k <= scenario.stages; ++k) {
            double s = 0, n = 0;
            for (const auto& r : trial.data.records())
                if (r.stage == k) {
                    n += static_cast<double>(r.weight);
                    s += static_cast<double>(r.weight) * r.outcome;
                }
            out.stage_success_rates.push_back(s / n);
        }
        out.fallbacks = trial.fallbacks;
        out.ok = true;
    } catch (const NumericalError& e) {
        out.failure = e.what();
    }
    return out;
}

// Replicate i uses child_seed(scenario.seed, i); results are stored by index so
// any worker count gives identical output.
inline std::vector<ReplicateOutcome> run_replicates(const ScenarioConfig& scenario, std::size_t replicates) {
    scenario.validate();
    if (replicates < 1) throw DomainError("replicate count must be at least 1");
    const auto truth_opt = solve_linear_greedy(scenario.problem_at(scenario.true_params, scenario.z_tilde));
    std::vector<ReplicateOutcome> results(replicates);
    unsigned workers = scenario.workers > 0 ? static_cast<unsigned>(scenario.workers)
                                            : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, replicates));
    std::atomic<std::size_t> next{0};
    const auto work = [&] {
        for (std::size_t i = next++; i < replicates; i = next++)
            results[i] = evaluate_replicate(scenario, child_seed(scenario.seed, i), truth_opt);
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    return results;
}

inline SimulationSummary summarize(const ScenarioConfig& scenario, const std::vector<ReplicateOutcome>& results) {
    SimulationSummary sum;
    sum.replicates = results.size();
    const auto truth_opt = solve_linear_greedy(scenario.problem_at(scenario.true_params, scenario.z_tilde));
    sum.true_x_opt = truth_opt.x_opt;
    sum.true_status = truth_opt.status;

    std::vector<const ReplicateOutcome*> ok;
    for (const auto& r : results) {
        if (r.ok) ok.push_back(&r);
        sum.fallbacks += static_cast<std::size_t>(std::max(0, r.fallbacks));
    }
    sum.succeeded = ok.size();
    sum.failed = results.size() - ok.size();
    if (ok.empty()) throw NumericalError("all replicates failed");
    const double m = static_cast<double>(ok.size());
    sum.sd_defined = ok.size() > 1;

    const Vector truth = true_coefficients(scenario);
    std::vector<std::string> names;
    if (scenario.include_intercept) names.push_back("beta0");
    for (Eigen::Index r = 0; r < scenario.p(); ++r) names.push_back("beta1" + std::to_string(r + 1));
    for (Eigen::Index s = 0; s < scenario.q(); ++s) names.push_back("beta2" + std::to_string(s + 1));
    const double z975 = normal_quantile(0.975);
    for (Eigen::Index c = 0; c < truth.size(); ++c) {
        CoefficientSummary cs;
        cs.name = names[static_cast<std::size_t>(c)];
        cs.truth = truth[c];
        double sum_est = 0, sum_se = 0, covered = 0;
        for (const auto* r : ok) {
            sum_est += r->estimates[c];
            sum_se += r->standard_errors[c];
            covered += std::abs(r->estimates[c] - truth[c]) <= z975 * r->standard_errors[c] ? 1 : 0;
        }
        cs.mean_estimate = sum_est / m;
        cs.bias = cs.mean_estimate - cs.truth;
        cs.pct_rel_bias = cs.truth != 0.0 ? 100.0 * cs.bias / cs.truth : std::numeric_limits<double>::quiet_NaN();
        cs.mean_se = sum_se / m;
        if (sum.sd_defined) {
            double ss = 0;
            for (const auto* r : ok) ss += (r->estimates[c] - cs.mean_estimate) * (r->estimates[c] - cs.mean_estimate);
            cs.emp_sd = std::sqrt(ss / (m - 1.0));
            cs.se_over_sd = cs.mean_se / cs.emp_sd;
        } else {
            cs.emp_sd = cs.se_over_sd = std::numeric_limits<double>::quiet_NaN();
        }
        cs.cp95 = covered / m;
        sum.coefficients.push_back(cs);
    }

    sum.bias_x_opt = Vector::Zero(scenario.p());
    double sq = 0, set_cov = 0, set_frac = 0, band_cov = 0;
    for (const auto* r : ok) {
        const Vector diff = r->x_hat.components - truth_opt.x_opt.components;
        sum.bias_x_opt += diff;
        sq += diff.squaredNorm();
        set_cov += r->set_covers ? 1 : 0;
        set_frac += r->set_fraction;
        band_cov += r->band_covers ? 1 : 0;
    }
    sum.bias_x_opt /= m;
    sum.rmse_x_opt = std::sqrt(sq / m);
    sum.set_cp95 = set_cov / m;
    sum.set_perc = 100.0 * set_frac / m;
    sum.bands_cp95 = band_cov / m;

    for (std::size_t t = 0; t < kTrialTests.size(); ++t) {
        double rejected = 0;
        std::size_t n = 0;
        for (const auto* r : ok) {
            if (std::isnan(r->p_values[t])) continue;
            ++n;
            rejected += r->p_values[t] < scenario.alpha ? 1 : 0;
        }
        sum.test_counts[t] = n;
        sum.rejection_rates[t] = n ? rejected / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
    }
    return sum;
}

inline SimulationSummary monte_carlo(const ScenarioConfig& scenario, std::size_t replicates) {
    return summarize(scenario, run_replicates(scenario, replicates));
}

}  // namespace lago
