#pragma once

// Pooled multi-stage logistic estimation: score, information, Newton fit
// with step-halving, covariance, and the tests for no intervention effect.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "lago/error.hpp"
#include "lago/model.hpp"

namespace lago {

enum class Arm { control, intervention };

inline const char* to_string(Arm arm) { return arm == Arm::control ? "control" : "intervention"; }

struct ParticipantRecord {
    int stage = 1;
    std::string center_id;
    Arm arm = Arm::control;
    InterventionPackage actual;
    CenterCovariates covariates;
    int outcome = 0;
    std::uint64_t weight = 1;  // number of identical participants this row stands for
};

// All records pooled across stages. Control rows must carry a = 0.
class StageDataset {
public:
    StageDataset() = default;
    StageDataset(Eigen::Index p, Eigen::Index q) : p_(p), q_(q) {
        if (p < 0 || q < 0) throw DimensionError("negative dataset dimension");
    }

    void add(ParticipantRecord record) {
        if (record.actual.size() != p_ || record.covariates.size() != q_)
            throw DimensionError("record dimensions (" + std::to_string(record.actual.size()) +
                                 "," + std::to_string(record.covariates.size()) +
                                 ") do not match dataset (" + std::to_string(p_) + "," +
                                 std::to_string(q_) + ")");
        if (record.outcome != 0 && record.outcome != 1)
            throw DomainError("outcome must be 0 or 1");
        if (record.weight < 1) throw DomainError("record weight must be at least 1");
        if (record.stage < 1) throw DomainError("stage must be a positive integer");
        if (record.arm == Arm::control && !record.actual.components.isZero(0.0))
            throw DomainError("control records must have an all-zero intervention");
        if (!record.actual.components.allFinite() || !record.covariates.values.allFinite())
            throw DomainError("record contains a non-finite value");
        records_.push_back(std::move(record));
    }

    void append(const StageDataset& other) {
        for (const auto& r : other.records()) add(r);
    }

    const std::vector<ParticipantRecord>& records() const { return records_; }
    Eigen::Index p() const { return p_; }
    Eigen::Index q() const { return q_; }
    bool empty() const { return records_.empty(); }

    double total_weight() const {
        double n = 0.0;
        for (const auto& r : records_) n += static_cast<double>(r.weight);
        return n;
    }

    // Records whose stage is at most `last_stage`.
    StageDataset through_stage(int last_stage) const {
        StageDataset out(p_, q_);
        for (const auto& r : records_)
            if (r.stage <= last_stage) out.records_.push_back(r);
        return out;
    }

private:
    std::vector<ParticipantRecord> records_;
    Eigen::Index p_ = 0;
    Eigen::Index q_ = 0;
};

// Which columns enter the logistic design.
struct DesignColumns {
    bool intercept = true;
    bool components = true;
    bool covariates = true;
    bool group_indicator = false;  // Q = 1 for intervention rows
};

struct FitOptions {
    double tol = 1e-8;
    int max_iter = 100;
    bool include_intercept = true;
    bool include_components = true;  // false fits the beta1 = 0 submodel
};

struct ModelFit {
    ModelParams beta_hat;
    Matrix covariance;  // over fitted coordinates, order: intercept?, beta1?, beta2
    double log_likelihood = 0.0;
    double n = 0.0;
    int iterations = 0;
    bool converged = false;
    bool include_intercept = true;
    bool include_components = true;
    std::vector<std::string> names;

    Eigen::Index dim() const { return covariance.rows(); }

    Eigen::Index intercept_index() const { return include_intercept ? 0 : -1; }
    Eigen::Index component_index(Eigen::Index r) const {
        if (!include_components) return -1;
        return (include_intercept ? 1 : 0) + r;
    }
    Eigen::Index covariate_index(Eigen::Index s) const {
        return (include_intercept ? 1 : 0) + (include_components ? beta_hat.p() : 0) + s;
    }

    std::vector<Eigen::Index> component_indices() const {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index r = 0; r < beta_hat.p(); ++r) idx.push_back(component_index(r));
        return idx;
    }

    Vector coefficients() const {
        Vector v(dim());
        Eigen::Index k = 0;
        if (include_intercept) v[k++] = beta_hat.intercept;
        if (include_components)
            for (Eigen::Index r = 0; r < beta_hat.p(); ++r) v[k++] = beta_hat.component_effects[r];
        for (Eigen::Index s = 0; s < beta_hat.q(); ++s) v[k++] = beta_hat.covariate_effects[s];
        return v;
    }

    double standard_error(Eigen::Index index) const { return std::sqrt(covariance(index, index)); }

    // (1, x', z') restricted to the fitted coordinates.
    Vector design_row(const InterventionPackage& x, const CenterCovariates& z) const {
        check_dimensions(beta_hat, x, z);
        Vector v(dim());
        Eigen::Index k = 0;
        if (include_intercept) v[k++] = 1.0;
        if (include_components)
            for (Eigen::Index r = 0; r < x.size(); ++r) v[k++] = x[r];
        for (Eigen::Index s = 0; s < z.size(); ++s) v[k++] = z.values[s];
        return v;
    }
};

enum class TestKind { wald, lrt, two_proportion, group_indicator };

inline const char* to_string(TestKind kind) {
    switch (kind) {
        case TestKind::wald: return "wald";
        case TestKind::lrt: return "lrt";
        case TestKind::two_proportion: return "two_proportion";
        case TestKind::group_indicator: return "group_indicator";
    }
    return "?";
}

// Chi-square statistics for wald/lrt; signed z statistics (dof 1, two-sided
// normal p-value) for two_proportion/group_indicator.
struct TestResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
    TestKind kind = TestKind::wald;
};

inline double chi_square_upper_tail(double statistic, int dof) {
    if (statistic <= 0.0) return 1.0;
    boost::math::chi_squared dist(dof);
    return boost::math::cdf(boost::math::complement(dist, statistic));
}

inline double normal_two_sided_p(double z) {
    boost::math::normal dist;
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(z)));
}

namespace detail {

struct Design {
    Matrix x;  // one row per record
    Vector y;
    Vector w;
    std::vector<std::string> names;
    double n = 0.0;
};

inline Design build_design(const StageDataset& data, const DesignColumns& cols) {
    if (data.empty()) throw DomainError("dataset has no records");
    const Eigen::Index p = data.p(), q = data.q();
    const Eigen::Index d = (cols.intercept ? 1 : 0) + (cols.components ? p : 0) +
                           (cols.covariates ? q : 0) + (cols.group_indicator ? 1 : 0);
    Design design;
    const auto rows = static_cast<Eigen::Index>(data.records().size());
    design.x.resize(rows, d);
    design.y.resize(rows);
    design.w.resize(rows);
    if (cols.intercept) design.names.push_back("intercept");
    if (cols.components)
        for (Eigen::Index r = 0; r < p; ++r) design.names.push_back("a_" + std::to_string(r + 1));
    if (cols.covariates)
        for (Eigen::Index s = 0; s < q; ++s) design.names.push_back("z_" + std::to_string(s + 1));
    if (cols.group_indicator) design.names.push_back("Q");

    Eigen::Index i = 0;
    for (const auto& rec : data.records()) {
        Eigen::Index k = 0;
        if (cols.intercept) design.x(i, k++) = 1.0;
        if (cols.components)
            for (Eigen::Index r = 0; r < p; ++r) design.x(i, k++) = rec.actual[r];
        if (cols.covariates)
            for (Eigen::Index s = 0; s < q; ++s) design.x(i, k++) = rec.covariates.values[s];
        if (cols.group_indicator) design.x(i, k++) = rec.arm == Arm::intervention ? 1.0 : 0.0;
        design.y[i] = rec.outcome;
        design.w[i] = static_cast<double>(rec.weight);
        design.n += design.w[i];
        ++i;
    }
    return design;
}

// log(1 + e^t) without overflow.
inline double softplus(double t) {
    return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

inline double log_likelihood(const Design& d, const Vector& beta) {
    const Vector eta = d.x * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i)
        ll += d.w[i] * (d.y[i] * eta[i] - softplus(eta[i]));
    return ll;
}

// n^-1 sum w x (y - p)
inline Vector score(const Design& d, const Vector& beta) {
    const Vector eta = d.x * beta;
    Vector resid(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) resid[i] = d.w[i] * (d.y[i] - expit(eta[i]));
    return d.x.transpose() * resid / d.n;
}

// n^-1 sum w x x' p (1 - p)
inline Matrix information(const Design& d, const Vector& beta) {
    const Vector eta = d.x * beta;
    Vector v(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double pr = expit(eta[i]);
        v[i] = d.w[i] * pr * (1.0 - pr);
    }
    Matrix info = d.x.transpose() * v.asDiagonal() * d.x / d.n;
    return 0.5 * (info + info.transpose());
}

// Columns that do not raise the rank of the weighted design when added in order.
inline std::vector<std::string> collinear_columns(const Design& d) {
    const Vector sw = d.w.cwiseSqrt();
    Matrix scaled = sw.asDiagonal() * d.x;
    for (Eigen::Index c = 0; c < scaled.cols(); ++c) {
        const double norm = scaled.col(c).norm();
        if (norm > 0.0) scaled.col(c) /= norm;
    }
    std::vector<std::string> bad;
    std::vector<Eigen::Index> kept;
    for (Eigen::Index c = 0; c < scaled.cols(); ++c) {
        if (scaled.col(c).norm() == 0.0) {
            bad.push_back(d.names[static_cast<std::size_t>(c)]);
            continue;
        }
        Matrix trial(scaled.rows(), static_cast<Eigen::Index>(kept.size()) + 1);
        for (std::size_t k = 0; k < kept.size(); ++k)
            trial.col(static_cast<Eigen::Index>(k)) = scaled.col(kept[k]);
        trial.col(trial.cols() - 1) = scaled.col(c);
        Eigen::ColPivHouseholderQR<Matrix> qr(trial);
        qr.setThreshold(1e-10);
        if (qr.rank() == trial.cols())
            kept.push_back(c);
        else
            bad.push_back(d.names[static_cast<std::size_t>(c)]);
    }
    return bad;
}

struct LogisticSolution {
    Vector beta;
    Matrix covariance;
    double log_likelihood = 0.0;
    int iterations = 0;
};

inline constexpr double kSeparationBound = 30.0;

// Newton-Raphson from beta = 0 with up to 20 step halvings per iteration.
// Converged once the score max-norm is below tol and the last full Newton
// step is small; on separated data the step stays O(1) while the score
// decays, so the iterate drifts past the separation bound instead.
inline LogisticSolution newton_fit(const Design& d, double tol, int max_iter) {
    if (d.x.cols() == 0) {
        // Nothing to estimate: every row sits at p = 1/2.
        LogisticSolution sol;
        sol.beta = Vector::Zero(0);
        sol.covariance = Matrix::Zero(0, 0);
        sol.log_likelihood = log_likelihood(d, sol.beta);
        return sol;
    }
    if (const auto bad = collinear_columns(d); !bad.empty()) {
        std::string list;
        for (const auto& b : bad) list += (list.empty() ? "" : ", ") + b;
        throw NonIdentifiableError("design is rank deficient; collinear columns: " + list, bad);
    }
    Vector beta = Vector::Zero(d.x.cols());
    double ll = log_likelihood(d, beta);
    for (int iter = 1; iter <= max_iter; ++iter) {
        const Vector g = score(d, beta);
        const Matrix info = information(d, beta);
        Eigen::LDLT<Matrix> ldlt(info);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
            throw SingularMatrixError("information matrix is not positive definite");
        const Vector step = ldlt.solve(g);
        if (!step.allFinite()) throw SingularMatrixError("Newton step is not finite");

        if (g.lpNorm<Eigen::Infinity>() < tol && step.lpNorm<Eigen::Infinity>() < 1e-3) {
            LogisticSolution sol;
            sol.beta = beta;
            sol.log_likelihood = ll;
            sol.iterations = iter - 1;
            Eigen::LDLT<Matrix> full(info * d.n);
            sol.covariance = full.solve(Matrix::Identity(info.rows(), info.cols()));
            sol.covariance = 0.5 * (sol.covariance + sol.covariance.transpose());
            return sol;
        }

        double scale = 1.0;
        Vector candidate = beta + step;
        double cand_ll = log_likelihood(d, candidate);
        for (int h = 0; h < 20 && !(cand_ll >= ll); ++h) {
            scale *= 0.5;
            candidate = beta + scale * step;
            cand_ll = log_likelihood(d, candidate);
        }
        beta = candidate;
        ll = cand_ll;
        if (beta.lpNorm<Eigen::Infinity>() > kSeparationBound)
            throw SeparationError("coefficient diverged beyond |beta| > 30; data are separated");
    }
    throw NonConvergenceError("Newton iteration did not converge in " + std::to_string(max_iter) +
                                  " iterations",
                              std::vector<double>(beta.data(), beta.data() + beta.size()));
}

inline DesignColumns columns_for(const FitOptions& options) {
    return DesignColumns{options.include_intercept, options.include_components, true, false};
}

}  // namespace detail

// n^-1 sum over all records of w (1, a, z)'(Y - p_a(beta; z)); the intercept
// entry is always present.
inline Vector score(const ModelParams& beta, const StageDataset& data) {
    if (beta.p() != data.p() || beta.q() != data.q())
        throw DimensionError("parameter dimensions do not match dataset");
    const auto design = detail::build_design(data, DesignColumns{});
    return detail::score(design, beta.stacked());
}

inline Matrix information(const ModelParams& beta, const StageDataset& data) {
    if (beta.p() != data.p() || beta.q() != data.q())
        throw DimensionError("parameter dimensions do not match dataset");
    const auto design = detail::build_design(data, DesignColumns{});
    return detail::information(design, beta.stacked());
}

inline double log_likelihood(const ModelParams& beta, const StageDataset& data) {
    if (beta.p() != data.p() || beta.q() != data.q())
        throw DimensionError("parameter dimensions do not match dataset");
    return detail::log_likelihood(detail::build_design(data, DesignColumns{}), beta.stacked());
}

inline ModelFit fit_mle(const StageDataset& data, const FitOptions& options = {}) {
    const auto design = detail::build_design(data, detail::columns_for(options));
    const auto sol = detail::newton_fit(design, options.tol, options.max_iter);

    ModelFit fit;
    fit.include_intercept = options.include_intercept;
    fit.include_components = options.include_components;
    fit.names = design.names;
    fit.beta_hat = ModelParams::zeros(data.p(), data.q());
    Eigen::Index k = 0;
    if (options.include_intercept) fit.beta_hat.intercept = sol.beta[k++];
    if (options.include_components)
        for (Eigen::Index r = 0; r < data.p(); ++r) fit.beta_hat.component_effects[r] = sol.beta[k++];
    for (Eigen::Index s = 0; s < data.q(); ++s) fit.beta_hat.covariate_effects[s] = sol.beta[k++];
    fit.covariance = sol.covariance;
    fit.log_likelihood = sol.log_likelihood;
    fit.n = design.n;
    fit.iterations = sol.iterations;
    fit.converged = true;
    return fit;
}

// Wald test of beta_S = null_values over fitted-coordinate indices S.
inline TestResult wald_test(const ModelFit& fit, const std::vector<Eigen::Index>& indices,
                            const Vector& null_values) {
    if (indices.empty()) throw DimensionError("wald test needs at least one coordinate");
    if (static_cast<Eigen::Index>(indices.size()) != null_values.size())
        throw DimensionError("null value count differs from index count");
    const Vector coef = fit.coefficients();
    const auto m = static_cast<Eigen::Index>(indices.size());
    Vector diff(m);
    Matrix sub(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto a = indices[static_cast<std::size_t>(i)];
        if (a < 0 || a >= fit.dim()) throw DimensionError("wald test index out of range");
        diff[i] = coef[a] - null_values[i];
        for (Eigen::Index j = 0; j < m; ++j) sub(i, j) = fit.covariance(a, indices[static_cast<std::size_t>(j)]);
    }
    Eigen::LDLT<Matrix> ldlt(sub);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        (ldlt.vectorD().array() <= 0.0).any())
        throw SingularMatrixError("covariance submatrix is singular");
    TestResult res;
    res.kind = TestKind::wald;
    res.statistic = diff.dot(ldlt.solve(diff));
    res.dof = static_cast<int>(m);
    res.p_value = chi_square_upper_tail(res.statistic, res.dof);
    return res;
}

// Wald test of beta1 = 0 on all component effects.
inline TestResult wald_test_no_effect(const ModelFit& fit) {
    const auto idx = fit.component_indices();
    return wald_test(fit, idx, Vector::Zero(static_cast<Eigen::Index>(idx.size())));
}

inline TestResult lr_test(const ModelFit& fit_full, const ModelFit& fit_null) {
    if (fit_null.dim() >= fit_full.dim())
        throw DimensionError("null model must have fewer parameters than the full model");
    if (fit_full.n != fit_null.n) throw DomainError("models were fitted on different data");
    const double diff = fit_full.log_likelihood - fit_null.log_likelihood;
    if (diff < -1e-8) throw NumericalError("full-model log-likelihood below null-model value");
    TestResult res;
    res.kind = TestKind::lrt;
    res.statistic = std::max(0.0, 2.0 * diff);
    res.dof = static_cast<int>(fit_full.dim() - fit_null.dim());
    res.p_value = chi_square_upper_tail(res.statistic, res.dof);
    return res;
}

// Pooled two-sample z test of success proportions, intervention minus control.
inline TestResult two_proportion_test(const StageDataset& data) {
    double n0 = 0, s0 = 0, n1 = 0, s1 = 0;
    for (const auto& r : data.records()) {
        const double w = static_cast<double>(r.weight);
        if (r.arm == Arm::control) {
            n0 += w;
            s0 += w * r.outcome;
        } else {
            n1 += w;
            s1 += w * r.outcome;
        }
    }
    if (n0 == 0 || n1 == 0) throw DomainError("two-proportion test needs records in both arms");
    const double pooled = (s0 + s1) / (n0 + n1);
    const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n0 + 1.0 / n1));
    TestResult res;
    res.kind = TestKind::two_proportion;
    res.dof = 1;
    res.statistic = se > 0.0 ? (s1 / n1 - s0 / n0) / se : 0.0;
    res.p_value = normal_two_sided_p(res.statistic);
    return res;
}

// Wald z test of gamma = 0 in logit p = beta0 + beta2'z + gamma Q.
inline TestResult group_indicator_test(const StageDataset& data, const FitOptions& options = {}) {
    bool has_control = false, has_intervention = false;
    for (const auto& r : data.records()) (r.arm == Arm::control ? has_control : has_intervention) = true;
    if (!has_control || !has_intervention)
        throw DomainError("group indicator test needs records in both arms");
    const auto design = detail::build_design(data, DesignColumns{true, false, true, true});
    const auto sol = detail::newton_fit(design, options.tol, options.max_iter);
    const Eigen::Index g = sol.beta.size() - 1;
    TestResult res;
    res.kind = TestKind::group_indicator;
    res.dof = 1;
    res.statistic = sol.beta[g] / std::sqrt(sol.covariance(g, g));
    res.p_value = normal_two_sided_p(res.statistic);
    return res;
}

}  // namespace lago
