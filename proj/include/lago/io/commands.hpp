#pragma once

// Command pipelines behind the CLI. Each command turns a request into a
// ReportBundle; module errors become an error record with the matching exit
// code instead of escaping.

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "lago/error.hpp"
#include "lago/estimation.hpp"
#include "lago/inference.hpp"
#include "lago/io/config.hpp"
#include "lago/io/dataset_csv.hpp"
#include "lago/io/report.hpp"
#include "lago/optimizer.hpp"
#include "lago/simulator.hpp"

namespace lago::io {

enum class Command { simulate, fit, optimize, confset, bands, analyze };

inline const char* to_string(Command c) {
    switch (c) {
        case Command::simulate: return "simulate";
        case Command::fit: return "fit";
        case Command::optimize: return "optimize";
        case Command::confset: return "confset";
        case Command::bands: return "bands";
        case Command::analyze: return "analyze";
    }
    return "?";
}

inline Command parse_command(const std::string& name) {
    for (auto c : {Command::simulate, Command::fit, Command::optimize, Command::confset, Command::bands,
                   Command::analyze})
        if (name == to_string(c)) return c;
    throw UsageError("unknown command '" + name + "'");
}

struct RunRequest {
    Command command = Command::simulate;
    std::string config_path;
    std::optional<std::string> data_path;
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicates;
    std::optional<int> workers;
    std::optional<std::string> export_data_path;  // simulate: data of replicate 0

    bool needs_data() const {
        return command == Command::fit || command == Command::confset || command == Command::bands ||
               command == Command::analyze;
    }

    void validate() const {
        if (config_path.empty()) throw UsageError("--config is required");
        if (needs_data() && !data_path) throw UsageError(std::string(to_string(command)) + " requires --data");
        if (command == Command::simulate && data_path) throw UsageError("simulate does not read --data");
        if (command != Command::simulate && (replicates || export_data_path))
            throw UsageError("--reps and --export-data only apply to simulate");
        if (replicates && *replicates < 1) throw UsageError("--reps must be at least 1");
        if (workers && *workers < 0) throw UsageError("--workers must be non-negative");
    }
};

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

namespace detail {

inline std::string short_number(double v) { return std::isnan(v) ? "NA" : fmt::format("{:.6g}", v); }

inline std::vector<std::string> package_columns(Eigen::Index p) {
    std::vector<std::string> cols;
    for (Eigen::Index r = 0; r < p; ++r) cols.push_back("x_" + std::to_string(r + 1));
    return cols;
}

inline std::vector<std::string> package_cells(const InterventionPackage& x) {
    std::vector<std::string> cells;
    for (Eigen::Index r = 0; r < x.size(); ++r) cells.push_back(cell(x[r]));
    return cells;
}

// ---------------------------------------------------------------------------
// simulate

inline void simulate(const RunRequest& req, const std::string& text, ReportBundle& b) {
    auto s = parse_scenario(text);
    if (req.seed) s.seed = *req.seed;
    if (req.replicates) s.replicates = *req.replicates;
    if (req.workers) s.workers = *req.workers;
    b.metadata.emplace_back("seed", std::to_string(s.seed));
    b.metadata.emplace_back("replicates", std::to_string(s.replicates));

    const auto results = run_replicates(s, s.replicates);
    const auto sum = summarize(s, results);
    const Eigen::Index p = s.p();
    const auto offset = static_cast<std::size_t>(s.include_intercept ? 1 : 0);

    std::vector<std::string> design_cols, design_cells;
    for (Eigen::Index r = 0; r < p; ++r) {
        design_cols.push_back("exp_beta1" + std::to_string(r + 1));
        design_cells.push_back(short_number(std::exp(s.true_params.component_effects[r])));
    }
    for (std::size_t k = 0; k < s.n_per_center.size(); ++k) {
        design_cols.push_back("n_" + std::to_string(k + 1) + "j");
        design_cells.push_back(std::to_string(s.n_per_center[k]));
    }
    design_cols.push_back("J");
    design_cells.push_back(std::to_string(s.centers_per_stage));

    {
        auto cols = design_cols;
        auto row = design_cells;
        for (Eigen::Index r = 0; r < p; ++r) {
            const auto& c = sum.coefficients[offset + static_cast<std::size_t>(r)];
            cols.insert(cols.end(), {c.name + "_RelBias_pct", c.name + "_SE_EMPSD_x100", c.name + "_CP95"});
            row.insert(row.end(), {cell(c.pct_rel_bias, 3), cell(100.0 * c.se_over_sd, 3), cell(100.0 * c.cp95, 3)});
        }
        Table t("simulation_table1", cols);
        t.add_row(row);
        b.tables.push_back(std::move(t));
    }
    {
        Table t("coefficients", {"coefficient", "truth", "mean_estimate", "bias", "pct_rel_bias", "mean_se",
                                 "emp_sd", "se_over_emp_sd", "cp95"});
        for (const auto& c : sum.coefficients)
            t.add_row({c.name, cell(c.truth), cell(c.mean_estimate), cell(c.bias), cell(c.pct_rel_bias),
                       cell(c.mean_se), cell(c.emp_sd), cell(c.se_over_sd), cell(c.cp95)});
        b.tables.push_back(std::move(t));
    }
    {
        std::vector<std::string> cols, row;
        for (Eigen::Index r = 0; r < p; ++r) {
            cols.push_back("exp_beta1" + std::to_string(r + 1));
            row.push_back(design_cells[static_cast<std::size_t>(r)]);
        }
        for (Eigen::Index r = 0; r < p; ++r) {
            cols.push_back("x_opt_" + std::to_string(r + 1));
            row.push_back(cell(sum.true_x_opt[r], 3));
        }
        for (std::size_t k = 0; k < s.n_per_center.size(); ++k) {
            cols.push_back("n_" + std::to_string(k + 1) + "j");
            row.push_back(std::to_string(s.n_per_center[k]));
        }
        for (Eigen::Index r = 0; r < p; ++r) {
            cols.push_back("Bias_x" + std::to_string(r + 1) + "_x100");
            row.push_back(cell(100.0 * sum.bias_x_opt[r], 3));
        }
        cols.insert(cols.end(), {"RMSE_x100", "SetCP95", "SetPerc", "BandsCP95"});
        row.insert(row.end(), {cell(100.0 * sum.rmse_x_opt, 3), cell(100.0 * sum.set_cp95, 3), cell(sum.set_perc, 3),
                               cell(100.0 * sum.bands_cp95, 3)});
        Table t("simulation_table2", cols);
        t.add_row(row);
        b.tables.push_back(std::move(t));
    }
    {
        Table t("test_rejection", {"test", "rejection_rate", "alpha", "replicates_used"});
        for (std::size_t i = 0; i < kTrialTests.size(); ++i)
            t.add_row({to_string(kTrialTests[i]), cell(sum.rejection_rates[i]), cell(s.alpha),
                       std::to_string(sum.test_counts[i])});
        b.tables.push_back(std::move(t));
    }

    b.notes.push_back(fmt::format("replicates {} (succeeded {}, failed {})", sum.replicates, sum.succeeded, sum.failed));
    std::string xs;
    for (Eigen::Index r = 0; r < p; ++r) xs += (r ? ", " : "") + format_double(sum.true_x_opt[r]);
    b.notes.push_back("true optimal package (" + xs + "), status " + to_string(sum.true_status));
    if (sum.failed) b.warnings.push_back(fmt::format("{} replicates failed numerically and were excluded", sum.failed));
    if (sum.fallbacks)
        b.warnings.push_back(fmt::format("{} interim fits failed; previous recommendations were reused", sum.fallbacks));
    if (!sum.sd_defined) b.warnings.push_back("a single replicate leaves the empirical SD undefined");
    if (sum.true_status == OptimizationStatus::infeasible_max_returned)
        b.warnings.push_back("target is unreachable under the true model; the max-probability vertex is reported");

    if (req.export_data_path) {
        const auto trial = run_lago_trial(s, child_seed(s.seed, 0));
        io::detail::write_atomically(*req.export_data_path, format_dataset_csv(trial.data));
        b.metadata.emplace_back("exported_data", *req.export_data_path);
    }
}

// ---------------------------------------------------------------------------
// data commands

struct FittedData {
    StageDataset data;
    ModelFit fit;
};

inline FittedData load_and_fit(const RunRequest& req, const AnalysisConfig& cfg) {
    FittedData out{load_dataset_csv(*req.data_path), {}};
    out.fit = fit_mle(out.data, cfg.fit);
    return out;
}

inline void fit_tables(const FittedData& fd, const AnalysisConfig& cfg, ReportBundle& b) {
    const double z = normal_quantile(0.5 * (1.0 + cfg.level));
    std::set<int> stage_set;
    for (const auto& r : fd.data.records()) stage_set.insert(r.stage);
    const std::vector<int> stages(stage_set.begin(), stage_set.end());

    // Estimates after each stage, pooling everything observed so far.
    std::vector<std::optional<ModelFit>> cumulative;
    for (int k : stages) {
        if (k == stages.back()) {
            cumulative.emplace_back(fd.fit);
            continue;
        }
        try {
            cumulative.emplace_back(fit_mle(fd.data.through_stage(k), cfg.fit));
        } catch (const Error& e) {
            cumulative.emplace_back(std::nullopt);
            b.warnings.push_back(fmt::format("fit through stage {} failed: {}", k, e.what()));
        }
    }

    std::vector<std::string> cols = {"term"};
    for (int k : stages) {
        const auto label = k == stages.front() ? fmt::format("stage_{}", k) : fmt::format("stages_{}-{}", stages.front(), k);
        cols.insert(cols.end(), {"OR_" + label, "CI_lower_" + label, "CI_upper_" + label});
    }
    Table t3("table3", cols);
    for (Eigen::Index i = 0; i < fd.fit.dim(); ++i) {
        std::vector<std::string> row = {fd.fit.names[static_cast<std::size_t>(i)]};
        for (const auto& f : cumulative) {
            if (!f) {
                row.insert(row.end(), {"NA", "NA", "NA"});
                continue;
            }
            const double est = f->coefficients()[i], se = f->standard_error(i);
            row.insert(row.end(), {cell(std::exp(est)), cell(std::exp(est - z * se)), cell(std::exp(est + z * se))});
        }
        t3.add_row(row);
    }
    {
        std::vector<std::string> row = {"n"};
        for (std::size_t k = 0; k < stages.size(); ++k)
            row.insert(row.end(), {cell(fd.data.through_stage(stages[k]).total_weight()), "", ""});
        t3.add_row(row);
    }
    b.tables.push_back(std::move(t3));

    Table coef("coefficients",
               {"term", "estimate", "std_error", "z", "p_value", "odds_ratio", "or_ci_lower", "or_ci_upper"});
    const Vector est = fd.fit.coefficients();
    for (Eigen::Index i = 0; i < fd.fit.dim(); ++i) {
        const double se = fd.fit.standard_error(i);
        coef.add_row({fd.fit.names[static_cast<std::size_t>(i)], cell(est[i]), cell(se), cell(est[i] / se),
                      cell(normal_two_sided_p(est[i] / se)), cell(std::exp(est[i])), cell(std::exp(est[i] - z * se)),
                      cell(std::exp(est[i] + z * se))});
    }
    b.tables.push_back(std::move(coef));

    Table tests("tests", {"test", "statistic", "dof", "p_value"});
    const auto add = [&](TestKind kind, auto&& run) {
        try {
            const TestResult r = run();
            tests.add_row({to_string(kind), cell(r.statistic), std::to_string(r.dof), cell(r.p_value)});
        } catch (const NumericalError& e) {
            tests.add_row({to_string(kind), "NA", "NA", "NA"});
            b.warnings.push_back(std::string(to_string(kind)) + " test failed: " + e.what());
        }
    };
    add(TestKind::wald, [&] { return wald_test_no_effect(fd.fit); });
    add(TestKind::lrt, [&] {
        FitOptions null_opts = cfg.fit;
        null_opts.include_components = false;
        return lr_test(fd.fit, fit_mle(fd.data, null_opts));
    });
    add(TestKind::two_proportion, [&] { return two_proportion_test(fd.data); });
    add(TestKind::group_indicator, [&] {
        FitOptions opts = cfg.fit;
        opts.include_intercept = true;
        return group_indicator_test(fd.data, opts);
    });
    b.tables.push_back(std::move(tests));
    b.notes.push_back(fmt::format("records {}, participants {}, newton iterations {}", fd.data.records().size(),
                                  format_double(fd.data.total_weight()), fd.fit.iterations));
}

inline void optimize_table(const ModelParams& params, const AnalysisConfig& cfg, ReportBundle& b) {
    const OptimizationProblem problem{params, cfg.z_for(params.q()), cfg.require_box(), CostFunction(cfg.require_cost()),
                                      cfg.target};
    problem.validate();
    const auto grid = cfg.grid();
    const auto continuous = solve_linear_greedy(problem);
    const auto discrete = solve_grid(problem, grid);

    auto cols = std::vector<std::string>{"method"};
    const auto xcols = package_columns(params.p());
    cols.insert(cols.end(), xcols.begin(), xcols.end());
    cols.insert(cols.end(), {"probability", "cost", "status", "unique"});
    Table t("optimize", cols);
    for (const auto& [name, res] : {std::pair<std::string, const OptimizationResult*>{"continuous", &continuous},
                                    std::pair<std::string, const OptimizationResult*>{"grid", &discrete}}) {
        std::vector<std::string> row = {name};
        const auto xs = package_cells(res->x_opt);
        row.insert(row.end(), xs.begin(), xs.end());
        row.insert(row.end(), {cell(res->achieved_probability), cell(res->cost), to_string(res->status),
                               res->unique ? "true" : "false"});
        t.add_row(row);
    }
    b.tables.push_back(std::move(t));
    b.notes.push_back(fmt::format("optimization grid has {} packages", grid.size()));
    if (continuous.status == OptimizationStatus::infeasible_max_returned)
        b.warnings.push_back("target is unreachable inside the box; the max-probability package is reported");
    if (!continuous.unique) b.warnings.push_back("continuous optimum is not unique (tied cost-efficiency ratios)");
}

inline void confset_table(const ModelFit& fit, const AnalysisConfig& cfg, ReportBundle& b) {
    const auto set = confidence_set(fit, cfg.grid(), cfg.z_for(fit.beta_hat.q()), cfg.target, cfg.level);
    auto cols = package_columns(fit.beta_hat.p());
    cols.insert(cols.end(), {"lower", "upper", "estimate", "included"});
    Table t("confset", cols);
    for (std::size_t i = 0; i < set.grid.size(); ++i) {
        auto row = package_cells(set.grid[i]);
        const auto& ci = set.intervals[i];
        row.insert(row.end(), {cell(ci.lower), cell(ci.upper), cell(ci.center), set.included[i] ? "1" : "0"});
        t.add_row(row);
    }
    b.tables.push_back(std::move(t));
    b.notes.push_back(fmt::format("confidence set holds {} of {} grid packages ({}%)", set.count(), set.grid.size(),
                                  cell(100.0 * set.fraction(), 2)));
    if (set.count() == 0) b.warnings.push_back("confidence set is empty on this grid");
}

inline void bands_table(const ModelFit& fit, const AnalysisConfig& cfg, ReportBundle& b) {
    const auto band = scheffe_bands(fit, cfg.grid(), cfg.z_for(fit.beta_hat.q()), cfg.level, cfg.band_dimension);
    auto cols = package_columns(fit.beta_hat.p());
    cols.insert(cols.end(), {"lower", "upper", "estimate"});
    Table t("bands", cols);
    for (std::size_t i = 0; i < band.grid.size(); ++i) {
        auto row = package_cells(band.grid[i]);
        row.insert(row.end(), {cell(band.lower[i]), cell(band.upper[i]), cell(band.estimate[i])});
        t.add_row(row);
    }
    b.tables.push_back(std::move(t));
    b.notes.push_back(fmt::format("band dimension {}, multiplier {}", band.dof, cell(band.multiplier, 4)));
}

inline void run_pipeline(const RunRequest& req, const std::string& text, ReportBundle& b) {
    if (req.command == Command::simulate) return simulate(req, text, b);
    const auto cfg = parse_analysis(text);
    if (req.seed) b.metadata.emplace_back("seed", std::to_string(*req.seed));
    if (req.command == Command::optimize && !req.data_path) {
        if (!cfg.params) throw UsageError("optimize needs --data or params.beta1 in the config");
        return optimize_table(*cfg.params, cfg, b);
    }
    const auto fd = load_and_fit(req, cfg);
    switch (req.command) {
        case Command::fit: fit_tables(fd, cfg, b); break;
        case Command::optimize: optimize_table(fd.fit.beta_hat, cfg, b); break;
        case Command::confset: confset_table(fd.fit, cfg, b); break;
        case Command::bands: bands_table(fd.fit, cfg, b); break;
        case Command::analyze:
            fit_tables(fd, cfg, b);
            optimize_table(fd.fit.beta_hat, cfg, b);
            confset_table(fd.fit, cfg, b);
            bands_table(fd.fit, cfg, b);
            break;
        case Command::simulate: break;
    }
}

}  // namespace detail

inline ReportBundle run_command(const RunRequest& req) {
    ReportBundle b;
    b.command = to_string(req.command);
    b.metadata = {{"tool", "lago"}, {"version", kVersion}, {"command", b.command}};
    const auto fail = [&](const char* kind, const std::string& message, int code) {
        b.tables.clear();
        b.error = ErrorRecord{kind, message, code};
    };
    try {
        req.validate();
        b.metadata.emplace_back("config", req.config_path);
        if (req.data_path) b.metadata.emplace_back("data", *req.data_path);
        b.config_echo = read_text_file(req.config_path);
        detail::run_pipeline(req, b.config_echo, b);
    } catch (const UsageError& e) {
        fail("usage", e.what(), 2);
    } catch (const ValidationError& e) {
        fail("validation", e.what(), 3);
    } catch (const NumericalError& e) {
        fail("numerical", e.what(), 4);
    } catch (const std::exception& e) {
        fail("internal", e.what(), 1);
    }
    return b;
}

}  // namespace lago::io
