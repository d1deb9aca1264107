#pragma once

#include <cmath>
#include <random>
#include <string>

#include "lago/estimation.hpp"
#include "lago/model.hpp"

namespace lago::test {

inline ModelParams params(double b0, std::initializer_list<double> b1, std::initializer_list<double> b2 = {}) {
    return ModelParams(b0, make_vector(b1), make_vector(b2));
}

inline ModelParams odds_ratio_params(std::initializer_list<double> or1) {
    Vector b1 = make_vector(or1);
    for (Eigen::Index r = 0; r < b1.size(); ++r) b1[r] = std::log(b1[r]);
    return ModelParams(0.0, b1, Vector(0));
}

inline InterventionBox box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
    return InterventionBox(make_vector(lo), make_vector(hi));
}

inline ParticipantRecord record(int stage, std::string center, Arm arm, std::initializer_list<double> a,
                                std::initializer_list<double> z, int y, std::uint64_t w = 1) {
    ParticipantRecord r;
    r.stage = stage;
    r.center_id = std::move(center);
    r.arm = arm;
    r.actual = InterventionPackage(make_vector(a));
    r.covariates = CenterCovariates(make_vector(z));
    r.outcome = y;
    r.weight = w;
    return r;
}

// Random (p, q) dataset with Bernoulli outcomes under `truth`; aggregated per row.
inline StageDataset random_dataset(std::mt19937_64& rng, const ModelParams& truth, int rows, int max_weight = 3) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_int_distribution<int> w(1, max_weight);
    StageDataset d(truth.p(), truth.q());
    for (int i = 0; i < rows; ++i) {
        ParticipantRecord r;
        r.stage = 1 + i % 2;
        r.center_id = "c" + std::to_string(i / 4);
        r.arm = (i / 4) % 2 ? Arm::intervention : Arm::control;
        r.actual = InterventionPackage::zeros(truth.p());
        if (r.arm == Arm::intervention)
            for (Eigen::Index k = 0; k < truth.p(); ++k) r.actual[k] = 3.0 * u(rng);
        r.covariates = CenterCovariates::zeros(truth.q());
        for (Eigen::Index s = 0; s < truth.q(); ++s) r.covariates.values[s] = n01(rng);
        r.outcome = u(rng) < success_probability(truth, r.actual, r.covariates) ? 1 : 0;
        r.weight = static_cast<std::uint64_t>(w(rng));
        d.add(r);
    }
    return d;
}

}  // namespace lago::test
