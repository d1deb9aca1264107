#pragma once

// Pointwise intervals for p_x(beta; z), the confidence set for the optimal
// package and simultaneous bands over a grid of packages.
//
// Bands use the Scheffe multiplier sqrt(chi2_{level, d}), not the raw
// chi-square quantile. By default d is the rank of the contrasts
// {(1, x', z~')} spanned by the grid, which is the dimension the projection
// argument actually needs; with z~ held fixed this is below the number of
// fitted parameters, which would over-cover.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/QR>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "lago/error.hpp"
#include "lago/estimation.hpp"
#include "lago/model.hpp"

namespace lago {

struct ProbabilityInterval {
    double lower = 0.0;
    double upper = 1.0;
    double center = 0.5;

    bool contains(double p) const { return lower <= p && p <= upper; }
};

struct ConfidenceSet {
    std::vector<InterventionPackage> grid;
    std::vector<bool> included;
    std::vector<ProbabilityInterval> intervals;
    double level = 0.95;

    std::size_t count() const {
        std::size_t k = 0;
        for (bool b : included) k += b ? 1 : 0;
        return k;
    }
    // Fraction of grid points in the set (SetPerc / 100).
    double fraction() const { return grid.empty() ? 0.0 : static_cast<double>(count()) / grid.size(); }
};

enum class BandDimension {
    contrast_rank,     // rank of the grid's design rows
    fitted_parameters  // number of fitted coefficients
};

struct ConfidenceBand {
    std::vector<InterventionPackage> grid;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> estimate;
    double level = 0.95;
    int dof = 0;
    double multiplier = 0.0;
};

inline double normal_quantile(double prob) {
    boost::math::normal dist;
    return boost::math::quantile(dist, prob);
}

inline double chi_square_quantile(double prob, int dof) {
    boost::math::chi_squared dist(dof);
    return boost::math::quantile(dist, prob);
}

inline void check_level(double level) {
    if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0,1)");
}

// Logit-scale point estimate and standard error sigma(beta_hat; x, z).
struct LogitEstimate {
    double estimate = 0.0;
    double sigma = 0.0;
};

inline LogitEstimate logit_estimate(const ModelFit& fit, const InterventionPackage& x,
                                    const CenterCovariates& z_tilde) {
    const Vector v = fit.design_row(x, z_tilde);
    const double var = v.dot(fit.covariance * v);
    if (var < -1e-12 * std::max(1.0, v.squaredNorm() * fit.covariance.cwiseAbs().maxCoeff()))
        throw NumericalError("covariance is not positive semi-definite");
    return {v.dot(fit.coefficients()), std::sqrt(std::max(0.0, var))};
}

inline ProbabilityInterval interval_from(const LogitEstimate& e, double multiplier) {
    return {expit(e.estimate - multiplier * e.sigma), expit(e.estimate + multiplier * e.sigma),
            expit(e.estimate)};
}

inline ProbabilityInterval pointwise_probability_interval(const ModelFit& fit, const InterventionPackage& x,
                                                          const CenterCovariates& z_tilde, double level = 0.95) {
    check_level(level);
    return interval_from(logit_estimate(fit, x, z_tilde), normal_quantile(0.5 * (1.0 + level)));
}

inline ConfidenceSet confidence_set(const ModelFit& fit, const std::vector<InterventionPackage>& grid,
                                    const CenterCovariates& z_tilde, double target, double level = 0.95) {
    if (grid.empty()) throw DomainError("confidence set grid is empty");
    if (!(target > 0.0 && target < 1.0)) throw DomainError("target probability must lie in (0,1)");
    check_level(level);
    const double mult = normal_quantile(0.5 * (1.0 + level));
    ConfidenceSet set;
    set.grid = grid;
    set.level = level;
    set.included.reserve(grid.size());
    set.intervals.reserve(grid.size());
    for (const auto& x : grid) {
        const auto ci = interval_from(logit_estimate(fit, x, z_tilde), mult);
        set.intervals.push_back(ci);
        set.included.push_back(ci.contains(target));
    }
    return set;
}

inline double scheffe_multiplier(double level, int dof) { return std::sqrt(chi_square_quantile(level, dof)); }

// Rank of the span of design rows (1, x', z~') over the grid.
inline int contrast_rank(const ModelFit& fit, const std::vector<InterventionPackage>& grid,
                         const CenterCovariates& z_tilde) {
    Matrix gram = Matrix::Zero(fit.dim(), fit.dim());
    for (const auto& x : grid) {
        const Vector v = fit.design_row(x, z_tilde);
        gram.noalias() += v * v.transpose();
    }
    const Vector scale = gram.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    const Matrix normalized = scale.asDiagonal() * gram * scale.asDiagonal();
    Eigen::ColPivHouseholderQR<Matrix> qr(normalized);
    qr.setThreshold(1e-10);
    return std::max(static_cast<int>(qr.rank()), 1);
}

inline ConfidenceBand scheffe_bands(const ModelFit& fit, const std::vector<InterventionPackage>& grid,
                                    const CenterCovariates& z_tilde, double level = 0.95,
                                    BandDimension dimension = BandDimension::contrast_rank) {
    if (grid.empty()) throw DomainError("band grid is empty");
    check_level(level);
    ConfidenceBand band;
    band.grid = grid;
    band.level = level;
    band.dof = dimension == BandDimension::contrast_rank ? contrast_rank(fit, grid, z_tilde)
                                                         : static_cast<int>(fit.dim());
    band.multiplier = scheffe_multiplier(level, band.dof);
    for (const auto& x : grid) {
        const auto ci = interval_from(logit_estimate(fit, x, z_tilde), band.multiplier);
        band.lower.push_back(ci.lower);
        band.upper.push_back(ci.upper);
        band.estimate.push_back(ci.center);
    }
    return band;
}

// True when the band contains `truth(grid[i])` at every grid point.
template <class TrueProbability>
bool band_covers(const ConfidenceBand& band, TrueProbability&& truth) {
    for (std::size_t i = 0; i < band.grid.size(); ++i) {
        const double p = truth(band.grid[i]);
        if (p < band.lower[i] || p > band.upper[i]) return false;
    }
    return true;
}

}  // namespace lago
