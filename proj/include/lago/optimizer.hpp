#pragma once

// Minimum-cost package subject to p_x(beta; z) >= target inside the box.
//
// For linear costs the problem is an LP over a box with a single linear
// constraint on the logit scale, solved exactly by raising components in
// decreasing order of beta1_r / c_r. Other costs go through an explicit
// candidate grid.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "lago/error.hpp"
#include "lago/model.hpp"

namespace lago {

struct OptimizationProblem {
    ModelParams params;
    CenterCovariates z_tilde;
    InterventionBox box;
    CostFunction cost;
    double target = 0.9;

    void validate() const {
        if (!(target > 0.0 && target < 1.0)) throw DomainError("target probability must lie in (0,1)");
        if (box.dimension() != params.p()) throw DimensionError("box dimension differs from model p");
        if (z_tilde.size() != params.q()) throw DimensionError("covariate dimension differs from model q");
        if (!params.finite()) throw DomainError("model parameters must be finite");
        if (const auto* lin = std::get_if<LinearCost>(&cost); lin && lin->unit_costs.size() != params.p())
            throw DimensionError("unit cost count differs from model p");
    }
};

enum class OptimizationStatus { optimal, infeasible_max_returned, at_baseline };

inline const char* to_string(OptimizationStatus s) {
    switch (s) {
        case OptimizationStatus::optimal: return "optimal";
        case OptimizationStatus::infeasible_max_returned: return "infeasible_max_returned";
        case OptimizationStatus::at_baseline: return "at_baseline";
    }
    return "?";
}

struct OptimizationResult {
    InterventionPackage x_opt;
    double achieved_probability = 0.0;
    double cost = 0.0;
    OptimizationStatus status = OptimizationStatus::optimal;
    bool unique = true;  // false when two raised components tie on cost-efficiency
};

// Vertex maximizing the linear predictor: U_r where beta1_r > 0, else L_r.
inline std::pair<double, InterventionPackage> max_achievable_probability(const OptimizationProblem& problem) {
    problem.validate();
    InterventionPackage vertex = problem.box.lower_corner();
    for (Eigen::Index r = 0; r < vertex.size(); ++r)
        if (problem.params.component_effects[r] > 0.0) vertex[r] = problem.box.upper()[r];
    return {success_probability(problem.params, vertex, problem.z_tilde), vertex};
}

namespace detail {

inline OptimizationResult finish(const OptimizationProblem& problem, InterventionPackage x,
                                 OptimizationStatus status, bool unique) {
    OptimizationResult res;
    res.achieved_probability = success_probability(problem.params, x, problem.z_tilde);
    res.cost = package_cost(problem.cost, problem.box, x);
    res.x_opt = std::move(x);
    res.status = status;
    res.unique = unique;
    return res;
}

}  // namespace detail

inline OptimizationResult solve_linear_greedy(const OptimizationProblem& problem) {
    problem.validate();
    const auto* linear = std::get_if<LinearCost>(&problem.cost);
    if (!linear) throw DomainError("greedy solver requires a linear cost");
    const auto& beta1 = problem.params.component_effects;
    const auto& c = linear->unit_costs;
    const Vector& lower = problem.box.lower();
    const Vector& upper = problem.box.upper();

    InterventionPackage x = problem.box.lower_corner();
    const double goal = logit(problem.target);
    double eta = linear_predictor(problem.params, x, problem.z_tilde);
    if (eta >= goal) return detail::finish(problem, std::move(x), OptimizationStatus::at_baseline, true);

    std::vector<Eigen::Index> order;
    for (Eigen::Index r = 0; r < beta1.size(); ++r)
        if (beta1[r] > 0.0) order.push_back(r);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return beta1[a] / c[a] > beta1[b] / c[b];
    });
    bool unique = true;
    for (std::size_t i = 1; i < order.size(); ++i)
        if (std::abs(beta1[order[i]] / c[order[i]] - beta1[order[i - 1]] / c[order[i - 1]]) < 1e-12)
            unique = false;

    for (Eigen::Index r : order) {
        const double room = beta1[r] * (upper[r] - lower[r]);
        if (eta + room >= goal) {
            x[r] = std::min(upper[r], lower[r] + (goal - eta) / beta1[r]);
            return detail::finish(problem, std::move(x), OptimizationStatus::optimal, unique);
        }
        x[r] = upper[r];
        eta += room;
    }
    return detail::finish(problem, std::move(x), OptimizationStatus::infeasible_max_returned, unique);
}

// Cheapest feasible candidate; cost ties go to the higher probability, then
// to the lexicographically smaller package.
inline OptimizationResult solve_grid(const OptimizationProblem& problem,
                                     const std::vector<InterventionPackage>& grid) {
    problem.validate();
    if (grid.empty()) throw DomainError("candidate grid is empty");
    const auto lex_less = [](const InterventionPackage& a, const InterventionPackage& b) {
        return std::lexicographical_compare(a.components.begin(), a.components.end(),
                                            b.components.begin(), b.components.end());
    };

    std::optional<std::size_t> best, most_probable;
    double best_cost = 0, best_prob = 0, top_prob = -1;
    std::vector<double> probs(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& x = grid[i];
        const double prob = success_probability(problem.params, x, problem.z_tilde);
        const double cost = package_cost(problem.cost, problem.box, x);
        probs[i] = prob;
        if (!most_probable || prob > top_prob ||
            (prob == top_prob && lex_less(x, grid[*most_probable]))) {
            most_probable = i;
            top_prob = prob;
        }
        if (prob < problem.target) continue;
        const bool better = !best || cost < best_cost ||
                            (cost == best_cost && (prob > best_prob ||
                                                   (prob == best_prob && lex_less(x, grid[*best]))));
        if (better) {
            best = i;
            best_cost = cost;
            best_prob = prob;
        }
    }
    if (!best)
        return detail::finish(problem, grid[*most_probable], OptimizationStatus::infeasible_max_returned, true);
    const bool baseline = grid[*best] == problem.box.lower_corner();
    return detail::finish(problem, grid[*best],
                          baseline ? OptimizationStatus::at_baseline : OptimizationStatus::optimal, true);
}

// Cartesian grid lower, lower+step, ... (inclusive of upper within 1e-9).
inline std::vector<InterventionPackage> cartesian_grid(const Vector& lower, const Vector& upper,
                                                       const Vector& step) {
    if (lower.size() != upper.size() || lower.size() != step.size())
        throw DimensionError("grid specification lengths differ");
    std::vector<std::vector<double>> axes(static_cast<std::size_t>(lower.size()));
    for (Eigen::Index r = 0; r < lower.size(); ++r) {
        if (!(step[r] > 0.0)) throw DomainError("grid step must be positive");
        if (lower[r] > upper[r]) throw DomainError("grid lower bound exceeds upper bound");
        auto& axis = axes[static_cast<std::size_t>(r)];
        const auto count = static_cast<long>(std::floor((upper[r] - lower[r]) / step[r] + 1e-9));
        for (long k = 0; k <= count; ++k) axis.push_back(lower[r] + static_cast<double>(k) * step[r]);
    }
    std::vector<InterventionPackage> grid;
    std::vector<std::size_t> idx(axes.size(), 0);
    while (true) {
        InterventionPackage x = InterventionPackage::zeros(lower.size());
        for (std::size_t r = 0; r < axes.size(); ++r) x[static_cast<Eigen::Index>(r)] = axes[r][idx[r]];
        grid.push_back(std::move(x));
        std::size_t r = axes.size();
        while (r > 0) {
            --r;
            if (++idx[r] < axes[r].size()) break;
            idx[r] = 0;
            if (r == 0) return grid;
        }
        if (axes.empty()) return grid;
    }
}

}  // namespace lago
