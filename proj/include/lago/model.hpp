#pragma once

// Intervention-package geometry, costs and the logistic success model
//   logit p_a(beta; z) = beta0 + beta1' a + beta2' z.

#include <cmath>
#include <functional>
#include <initializer_list>
#include <limits>
#include <string>
#include <utility>
#include <variant>

#include <Eigen/Core>

#include "lago/error.hpp"

namespace lago {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline Vector make_vector(std::initializer_list<double> values) {
    Vector v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
}

// A point in the intervention space: one real per component, in the
// component's own units (days, visits, ...).
struct InterventionPackage {
    Vector components;

    InterventionPackage() = default;
    explicit InterventionPackage(Vector c) : components(std::move(c)) {}
    InterventionPackage(std::initializer_list<double> c) : components(make_vector(c)) {}

    static InterventionPackage zeros(Eigen::Index p) { return InterventionPackage(Vector::Zero(p)); }

    Eigen::Index size() const { return components.size(); }
    double operator[](Eigen::Index r) const { return components[r]; }
    double& operator[](Eigen::Index r) { return components[r]; }

    friend bool operator==(const InterventionPackage& a, const InterventionPackage& b) {
        return a.components.size() == b.components.size() && a.components == b.components;
    }
};

struct CenterCovariates {
    Vector values;

    CenterCovariates() = default;
    explicit CenterCovariates(Vector v) : values(std::move(v)) {}
    CenterCovariates(std::initializer_list<double> v) : values(make_vector(v)) {}

    static CenterCovariates zeros(Eigen::Index q) { return CenterCovariates(Vector::Zero(q)); }
    Eigen::Index size() const { return values.size(); }
};

// The bounded support [L_1,U_1] x ... x [L_p,U_p].
class InterventionBox {
public:
    InterventionBox() = default;
    InterventionBox(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
        if (lower_.size() != upper_.size())
            throw DimensionError("box bounds have different lengths");
        for (Eigen::Index r = 0; r < lower_.size(); ++r) {
            if (!std::isfinite(lower_[r]) || !std::isfinite(upper_[r]))
                throw DomainError("box bounds must be finite");
            if (lower_[r] > upper_[r])
                throw DomainError("box lower bound exceeds upper bound for component " +
                                  std::to_string(r + 1));
        }
    }

    const Vector& lower() const { return lower_; }
    const Vector& upper() const { return upper_; }
    Eigen::Index dimension() const { return lower_.size(); }

    bool contains(const InterventionPackage& x, double tol = 1e-12) const {
        if (x.size() != dimension()) return false;
        for (Eigen::Index r = 0; r < dimension(); ++r)
            if (!(x[r] >= lower_[r] - tol && x[r] <= upper_[r] + tol)) return false;
        return true;
    }

    void require_contains(const InterventionPackage& x) const {
        if (x.size() != dimension())
            throw DimensionError("package has " + std::to_string(x.size()) +
                                 " components, box has " + std::to_string(dimension()));
        if (!contains(x)) throw DomainError("intervention package lies outside the box");
    }

    InterventionPackage clip(const InterventionPackage& x) const {
        return InterventionPackage(x.components.cwiseMax(lower_).cwiseMin(upper_));
    }

    InterventionPackage midpoint() const { return InterventionPackage(0.5 * (lower_ + upper_)); }
    InterventionPackage lower_corner() const { return InterventionPackage(lower_); }

    friend bool operator==(const InterventionBox& a, const InterventionBox& b) {
        return a.lower_ == b.lower_ && a.upper_ == b.upper_;
    }

private:
    Vector lower_;
    Vector upper_;
};

// (beta0, beta1, beta2): intercept, p component effects, q covariate effects.
struct ModelParams {
    double intercept = 0.0;
    Vector component_effects;
    Vector covariate_effects;

    ModelParams() = default;
    ModelParams(double b0, Vector b1, Vector b2)
        : intercept(b0), component_effects(std::move(b1)), covariate_effects(std::move(b2)) {}

    static ModelParams zeros(Eigen::Index p, Eigen::Index q) {
        return ModelParams(0.0, Vector::Zero(p), Vector::Zero(q));
    }

    Eigen::Index p() const { return component_effects.size(); }
    Eigen::Index q() const { return covariate_effects.size(); }

    bool finite() const {
        return std::isfinite(intercept) && component_effects.allFinite() &&
               covariate_effects.allFinite();
    }

    // Stacked (beta0, beta1, beta2).
    Vector stacked() const {
        Vector v(1 + p() + q());
        v << intercept, component_effects, covariate_effects;
        return v;
    }

    friend bool operator==(const ModelParams& a, const ModelParams& b) {
        return a.intercept == b.intercept && a.component_effects == b.component_effects &&
               a.covariate_effects == b.covariate_effects;
    }
};

struct LinearCost {
    Vector unit_costs;

    LinearCost() = default;
    explicit LinearCost(Vector c) : unit_costs(std::move(c)) {
        for (Eigen::Index r = 0; r < unit_costs.size(); ++r)
            if (!(unit_costs[r] > 0.0) || !std::isfinite(unit_costs[r]))
                throw DomainError("unit costs must be strictly positive and finite");
    }
    LinearCost(std::initializer_list<double> c) : LinearCost(make_vector(c)) {}
};

// Arbitrary cost over the box; only usable through grid optimization.
struct TabulatedCost {
    std::function<double(const InterventionPackage&)> evaluate;
};

using CostFunction = std::variant<LinearCost, TabulatedCost>;

// Stable 1/(1+exp(-t)); never overflows.
inline double expit(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

inline double logit(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("logit requires a probability in (0,1)");
    return std::log(p) - std::log1p(-p);
}

inline void check_dimensions(const ModelParams& params, const InterventionPackage& a,
                             const CenterCovariates& z) {
    if (a.size() != params.p() || z.size() != params.q())
        throw DimensionError("model expects p=" + std::to_string(params.p()) +
                             ", q=" + std::to_string(params.q()) + " but got p=" +
                             std::to_string(a.size()) + ", q=" + std::to_string(z.size()));
}

inline double linear_predictor(const ModelParams& params, const InterventionPackage& a,
                               const CenterCovariates& z) {
    check_dimensions(params, a, z);
    return params.intercept + params.component_effects.dot(a.components) +
           params.covariate_effects.dot(z.values);
}

inline double success_probability(const ModelParams& params, const InterventionPackage& a,
                                  const CenterCovariates& z) {
    return expit(linear_predictor(params, a, z));
}

// C(x). Linear costs use C(0) = 0.
inline double package_cost(const CostFunction& cost, const InterventionBox& box,
                           const InterventionPackage& x) {
    box.require_contains(x);
    if (const auto* linear = std::get_if<LinearCost>(&cost)) {
        if (linear->unit_costs.size() != x.size())
            throw DimensionError("cost vector length differs from package length");
        return linear->unit_costs.dot(x.components);
    }
    const auto& tab = std::get<TabulatedCost>(cost);
    if (!tab.evaluate) throw DomainError("tabulated cost has no evaluator");
    return tab.evaluate(x);
}

}  // namespace lago
