#pragma once

// Flat `key = value` configuration documents with dotted section prefixes.
// Lists are comma separated; `#` starts a comment.
//
//   design.centers_per_stage = 20
//   design.n_per_center = 100, 200
//   truth.exp_beta1 = 1.2, 1.5
//   box.lower = 0, 0

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "lago/error.hpp"
#include "lago/estimation.hpp"
#include "lago/inference.hpp"
#include "lago/model.hpp"
#include "lago/simulator.hpp"

namespace lago::io {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
    if (v == 0.0) return "0";
    for (int precision = 15; precision <= 17; ++precision) {
        auto text = fmt::format("{:.{}g}", v, precision);
        if (std::strtod(text.c_str(), nullptr) == v) return text;
    }
    return fmt::format("{:.17g}", v);
}

inline std::string format_list(const Vector& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_double(v[i]);
    return out;
}

class KeyValueDocument {
public:
    static KeyValueDocument parse(std::string_view text) {
        KeyValueDocument doc;
        std::istringstream in{std::string(text)};
        std::string line;
        std::size_t number = 0;
        while (std::getline(in, line)) {
            ++number;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const auto body = trim(line);
            if (body.empty()) continue;
            const auto eq = body.find('=');
            if (eq == std::string::npos) throw ParseError("expected 'key = value'", number);
            const auto key = trim(std::string_view(body).substr(0, eq));
            if (key.empty()) throw ParseError("empty key", number);
            if (doc.entries_.count(key)) throw ParseError("duplicate key " + key, number);
            doc.entries_[key] = Entry{trim(std::string_view(body).substr(eq + 1)), number};
        }
        return doc;
    }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }
    const std::string& value(const std::string& key) const { return entries_.at(key).value; }
    std::size_t line(const std::string& key) const { return entries_.at(key).line; }

    std::vector<std::string> keys() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : entries_) out.push_back(k);
        return out;
    }

private:
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };
    std::map<std::string, Entry> entries_;
};

// Typed access to a document that remembers missing required keys and
// rejects keys outside an allowed set.
class ConfigReader {
public:
    ConfigReader(const KeyValueDocument& doc, std::set<std::string> allowed)
        : doc_(doc), allowed_(std::move(allowed)) {}

    void reject_unknown() const {
        std::string unknown;
        for (const auto& k : doc_.keys())
            if (!allowed_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
        if (!unknown.empty()) throw ParseError("unknown configuration keys: " + unknown);
    }

    void require(const std::string& key) {
        if (!doc_.has(key)) missing_.push_back(key);
    }
    void require_one_of(const std::string& a, const std::string& b) {
        if (!doc_.has(a) && !doc_.has(b)) missing_.push_back(a + " (or " + b + ")");
        if (doc_.has(a) && doc_.has(b)) throw ParseError("give only one of " + a + " and " + b);
    }
    void throw_if_missing() const {
        if (missing_.empty()) return;
        std::string list;
        for (const auto& k : missing_) list += (list.empty() ? "" : ", ") + k;
        throw ParseError("missing required keys: " + list);
    }

    bool has(const std::string& key) const { return doc_.has(key); }

    double number(const std::string& key, double fallback) const {
        return has(key) ? parse_number(doc_.value(key), key) : fallback;
    }
    double number(const std::string& key) const { return parse_number(doc_.value(key), key); }

    Vector list(const std::string& key) const {
        const auto& text = doc_.value(key);
        if (trim(text).empty()) return Vector(0);
        const auto parts = split(text, ',');
        Vector v(static_cast<Eigen::Index>(parts.size()));
        for (std::size_t i = 0; i < parts.size(); ++i) v[static_cast<Eigen::Index>(i)] = parse_number(parts[i], key);
        return v;
    }
    Vector list(const std::string& key, const Vector& fallback) const { return has(key) ? list(key) : fallback; }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const {
        return has(key) ? parse_unsigned(doc_.value(key), key) : fallback;
    }
    std::vector<std::uint64_t> unsigned_list(const std::string& key) const {
        std::vector<std::uint64_t> out;
        for (const auto& part : split(doc_.value(key), ',')) out.push_back(parse_unsigned(part, key));
        return out;
    }

    bool boolean(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto& v = doc_.value(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw error(key, "expected true or false");
    }

    std::string word(const std::string& key, const std::string& fallback) const {
        return has(key) ? doc_.value(key) : fallback;
    }

    ParseError error(const std::string& key, const std::string& what) const {
        return ParseError(key + ": " + what, has(key) ? doc_.line(key) : 0);
    }

private:
    double parse_number(const std::string& text, const std::string& key) const {
        const auto t = trim(text);
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(t.c_str(), &end);
        if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v))
            throw error(key, "invalid number '" + t + "'");
        return v;
    }
    std::uint64_t parse_unsigned(const std::string& text, const std::string& key) const {
        const auto t = trim(text);
        if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos)
            throw error(key, "expected a non-negative integer, got '" + t + "'");
        errno = 0;
        const auto v = std::strtoull(t.c_str(), nullptr, 10);
        if (errno == ERANGE) throw error(key, "integer out of range");
        return v;
    }

    const KeyValueDocument& doc_;
    std::set<std::string> allowed_;
    std::vector<std::string> missing_;
};

namespace detail {

inline Vector log_of(const Vector& v, const std::string& key, const ConfigReader& reader) {
    Vector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!(v[i] > 0.0)) throw reader.error(key, "odds ratios must be positive");
        out[i] = std::log(v[i]);
    }
    return out;
}

inline Vector effects(const ConfigReader& reader, const std::string& prefix, const std::string& name) {
    const auto plain = prefix + "." + name;
    const auto exp_key = prefix + ".exp_" + name;
    if (reader.has(plain)) return reader.list(plain);
    if (reader.has(exp_key)) return log_of(reader.list(exp_key), exp_key, reader);
    return Vector(0);
}

inline double intercept(const ConfigReader& reader, const std::string& prefix) {
    const auto plain = prefix + ".beta0";
    const auto exp_key = prefix + ".exp_beta0";
    if (reader.has(plain) && reader.has(exp_key)) throw ParseError("give only one of " + plain + " and " + exp_key);
    if (reader.has(plain)) return reader.number(plain);
    if (reader.has(exp_key)) {
        const double v = reader.number(exp_key);
        if (!(v > 0.0)) throw reader.error(exp_key, "odds ratio must be positive");
        return std::log(v);
    }
    return 0.0;
}

inline Vector default_grid_step(const InterventionBox& box) {
    Vector step = (box.upper() - box.lower()) / 40.0;
    for (Eigen::Index r = 0; r < step.size(); ++r)
        if (!(step[r] > 0.0)) step[r] = 1.0;
    return step;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scenario documents (simulate)

inline const std::set<std::string>& scenario_keys() {
    static const std::set<std::string> keys = {
        "design.stages", "design.centers_per_stage", "design.n_per_center", "design.include_intercept",
        "design.covariate_law", "design.initial_design", "design.initial_recommendation",
        "design.implementation_scale", "design.implementation_shift", "truth.beta0", "truth.exp_beta0",
        "truth.beta1", "truth.exp_beta1", "truth.beta2", "truth.exp_beta2", "box.lower", "box.upper",
        "cost.unit", "target.p", "analysis.z_tilde", "analysis.grid_step", "analysis.level", "analysis.alpha",
        "fit.tol", "fit.max_iter", "simulation.seed", "simulation.replicates", "simulation.workers"};
    return keys;
}

inline ScenarioConfig parse_scenario(std::string_view text) {
    const auto doc = KeyValueDocument::parse(text);
    ConfigReader in(doc, scenario_keys());
    in.reject_unknown();
    in.require("design.centers_per_stage");
    in.require("design.n_per_center");
    in.require_one_of("truth.beta1", "truth.exp_beta1");
    in.require("box.lower");
    in.require("box.upper");
    in.require("cost.unit");
    in.throw_if_missing();
    if (in.has("truth.beta2") && in.has("truth.exp_beta2"))
        throw ParseError("give only one of truth.beta2 and truth.exp_beta2");

    try {
        ScenarioConfig s;
        s.stages = static_cast<int>(in.unsigned_integer("design.stages", 2));
        s.centers_per_stage = static_cast<int>(in.unsigned_integer("design.centers_per_stage", 0));
        s.n_per_center = in.unsigned_list("design.n_per_center");
        s.include_intercept = in.boolean("design.include_intercept", false);
        s.true_params = ModelParams(detail::intercept(in, "truth"), detail::effects(in, "truth", "beta1"),
                                    detail::effects(in, "truth", "beta2"));

        const auto law = in.word("design.covariate_law", s.q() > 0 ? "normal" : "none");
        if (law == "normal") s.covariate_law = CovariateLaw::standard_normal;
        else if (law == "none") s.covariate_law = CovariateLaw::none;
        else throw in.error("design.covariate_law", "expected 'normal' or 'none'");

        s.box = InterventionBox(in.list("box.lower"), in.list("box.upper"));
        s.cost = LinearCost(in.list("cost.unit"));
        s.target = in.number("target.p", 0.9);

        const auto design = in.word("design.initial_design", "factorial");
        if (design == "factorial") s.initial_design = InitialDesign::factorial;
        else if (design == "uniform") s.initial_design = InitialDesign::uniform;
        else if (design == "fixed") s.initial_design = InitialDesign::fixed;
        else throw in.error("design.initial_design", "expected 'factorial', 'uniform' or 'fixed'");
        s.initial_recommendation = InterventionPackage(
            in.list("design.initial_recommendation", s.box.dimension() == s.p() ? s.box.midpoint().components
                                                                                 : Vector(0)));
        if (in.has("design.implementation_scale")) s.implementation_map.scale = in.list("design.implementation_scale");
        if (in.has("design.implementation_shift")) s.implementation_map.shift = in.list("design.implementation_shift");

        s.z_tilde = CenterCovariates(in.list("analysis.z_tilde", Vector::Zero(s.q())));
        s.grid_step = in.list("analysis.grid_step", detail::default_grid_step(s.box));
        s.level = in.number("analysis.level", 0.95);
        s.alpha = in.number("analysis.alpha", 0.05);
        s.fit.tol = in.number("fit.tol", 1e-8);
        s.fit.max_iter = static_cast<int>(in.unsigned_integer("fit.max_iter", 100));
        s.fit.include_intercept = s.include_intercept;
        s.seed = in.unsigned_integer("simulation.seed", 1);
        s.replicates = in.unsigned_integer("simulation.replicates", 1000);
        s.workers = static_cast<int>(in.unsigned_integer("simulation.workers", 0));
        s.validate();
        return s;
    } catch (const ParseError&) {
        throw;
    } catch (const ValidationError& e) {
        throw ParseError(e.what());
    }
}

inline std::string serialize_scenario(const ScenarioConfig& s) {
    std::string out;
    const auto line = [&](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
    std::string sizes;
    for (std::size_t i = 0; i < s.n_per_center.size(); ++i) sizes += (i ? ", " : "") + std::to_string(s.n_per_center[i]);
    line("design.stages", std::to_string(s.stages));
    line("design.centers_per_stage", std::to_string(s.centers_per_stage));
    line("design.n_per_center", sizes);
    line("design.include_intercept", s.include_intercept ? "true" : "false");
    line("design.covariate_law", s.covariate_law == CovariateLaw::none ? "none" : "normal");
    line("design.initial_design", s.initial_design == InitialDesign::factorial ? "factorial"
                                  : s.initial_design == InitialDesign::uniform ? "uniform"
                                                                               : "fixed");
    line("design.initial_recommendation", format_list(s.initial_recommendation.components));
    if (s.implementation_map.scale.size()) line("design.implementation_scale", format_list(s.implementation_map.scale));
    if (s.implementation_map.shift.size()) line("design.implementation_shift", format_list(s.implementation_map.shift));
    line("truth.beta0", format_double(s.true_params.intercept));
    line("truth.beta1", format_list(s.true_params.component_effects));
    line("truth.beta2", format_list(s.true_params.covariate_effects));
    line("box.lower", format_list(s.box.lower()));
    line("box.upper", format_list(s.box.upper()));
    line("cost.unit", format_list(s.cost.unit_costs));
    line("target.p", format_double(s.target));
    line("analysis.z_tilde", format_list(s.z_tilde.values));
    line("analysis.grid_step", format_list(s.grid_step));
    line("analysis.level", format_double(s.level));
    line("analysis.alpha", format_double(s.alpha));
    line("fit.tol", format_double(s.fit.tol));
    line("fit.max_iter", std::to_string(s.fit.max_iter));
    line("simulation.seed", std::to_string(s.seed));
    line("simulation.replicates", std::to_string(s.replicates));
    line("simulation.workers", std::to_string(s.workers));
    return out;
}

inline bool same_scenario(const ScenarioConfig& a, const ScenarioConfig& b) {
    return a.stages == b.stages && a.centers_per_stage == b.centers_per_stage &&
           a.n_per_center == b.n_per_center && a.true_params == b.true_params &&
           a.include_intercept == b.include_intercept && a.covariate_law == b.covariate_law && a.box == b.box &&
           a.cost.unit_costs == b.cost.unit_costs && a.target == b.target && a.initial_design == b.initial_design &&
           a.initial_recommendation == b.initial_recommendation && a.implementation_map == b.implementation_map &&
           a.seed == b.seed && a.replicates == b.replicates && a.z_tilde.values == b.z_tilde.values &&
           a.grid_step == b.grid_step && a.level == b.level && a.alpha == b.alpha && a.workers == b.workers &&
           a.fit.tol == b.fit.tol && a.fit.max_iter == b.fit.max_iter &&
           a.fit.include_intercept == b.fit.include_intercept;
}

// ---------------------------------------------------------------------------
// Analysis documents (fit, optimize, confset, bands, analyze)

struct AnalysisConfig {
    bool include_intercept = true;
    std::optional<ModelParams> params;  // given coefficients for `optimize` without data
    std::optional<InterventionBox> box;
    std::optional<LinearCost> cost;
    double target = 0.9;
    std::optional<Vector> z_tilde;
    std::optional<Vector> grid_lower, grid_upper, grid_step;
    double level = 0.95;
    BandDimension band_dimension = BandDimension::contrast_rank;
    FitOptions fit;

    const InterventionBox& require_box() const {
        if (!box) throw ParseError("missing required keys: box.lower, box.upper");
        return *box;
    }
    const LinearCost& require_cost() const {
        if (!cost) throw ParseError("missing required keys: cost.unit");
        return *cost;
    }

    CenterCovariates z_for(Eigen::Index q) const {
        if (!z_tilde) return CenterCovariates::zeros(q);
        if (z_tilde->size() != q) throw DimensionError("analysis.z_tilde length differs from q");
        return CenterCovariates(*z_tilde);
    }

    std::vector<InterventionPackage> grid() const {
        const auto& b = require_box();
        return cartesian_grid(grid_lower.value_or(b.lower()), grid_upper.value_or(b.upper()),
                              grid_step.value_or(detail::default_grid_step(b)));
    }
};

inline const std::set<std::string>& analysis_keys() {
    static const std::set<std::string> keys = {
        "model.include_intercept", "params.beta0", "params.exp_beta0", "params.beta1", "params.exp_beta1",
        "params.beta1_per", "params.beta2", "params.exp_beta2", "params.beta2_per", "box.lower", "box.upper",
        "cost.unit", "target.p", "analysis.z_tilde", "analysis.level", "analysis.band_dimension", "grid.lower",
        "grid.upper", "grid.step", "fit.tol", "fit.max_iter"};
    return keys;
}

inline AnalysisConfig parse_analysis(std::string_view text) {
    const auto doc = KeyValueDocument::parse(text);
    ConfigReader in(doc, analysis_keys());
    in.reject_unknown();
    if (in.has("box.lower") != in.has("box.upper")) {
        in.require("box.lower");
        in.require("box.upper");
        in.throw_if_missing();
    }
    try {
        AnalysisConfig a;
        a.include_intercept = in.boolean("model.include_intercept", true);
        if (in.has("params.beta1") || in.has("params.exp_beta1")) {
            Vector b1 = detail::effects(in, "params", "beta1");
            Vector b2 = detail::effects(in, "params", "beta2");
            for (const auto& [key, vec] : {std::pair<std::string, Vector*>{"params.beta1_per", &b1},
                                           std::pair<std::string, Vector*>{"params.beta2_per", &b2}}) {
                if (!in.has(key)) continue;
                const Vector per = in.list(key);
                if (per.size() != vec->size()) throw in.error(key, "length differs from the effect vector");
                if ((per.array() <= 0.0).any()) throw in.error(key, "divisors must be positive");
                *vec = vec->cwiseQuotient(per);
            }
            a.params = ModelParams(detail::intercept(in, "params"), b1, b2);
        }
        if (in.has("box.lower")) a.box = InterventionBox(in.list("box.lower"), in.list("box.upper"));
        if (in.has("cost.unit")) a.cost = LinearCost(in.list("cost.unit"));
        a.target = in.number("target.p", 0.9);
        if (!(a.target > 0.0 && a.target < 1.0)) throw in.error("target.p", "must lie in (0,1)");
        if (in.has("analysis.z_tilde")) a.z_tilde = in.list("analysis.z_tilde");
        a.level = in.number("analysis.level", 0.95);
        if (!(a.level > 0.0 && a.level < 1.0)) throw in.error("analysis.level", "must lie in (0,1)");
        const auto dim = in.word("analysis.band_dimension", "contrast_rank");
        if (dim == "contrast_rank") a.band_dimension = BandDimension::contrast_rank;
        else if (dim == "fitted_parameters") a.band_dimension = BandDimension::fitted_parameters;
        else throw in.error("analysis.band_dimension", "expected 'contrast_rank' or 'fitted_parameters'");
        if (in.has("grid.lower")) a.grid_lower = in.list("grid.lower");
        if (in.has("grid.upper")) a.grid_upper = in.list("grid.upper");
        if (in.has("grid.step")) a.grid_step = in.list("grid.step");
        a.fit.tol = in.number("fit.tol", 1e-8);
        a.fit.max_iter = static_cast<int>(in.unsigned_integer("fit.max_iter", 100));
        a.fit.include_intercept = a.include_intercept;
        return a;
    } catch (const ParseError&) {
        throw;
    } catch (const ValidationError& e) {
        throw ParseError(e.what());
    }
}

}  // namespace lago::io
