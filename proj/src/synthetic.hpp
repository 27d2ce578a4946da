#pragma once

#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "data.hpp"
#include "rng.hpp"

namespace lfmm {

/// Scenario parameters for the benchmark generator. The time grid is fixed at
/// twenty locations (the length of the built-in truth vectors).
struct SyntheticConfig {
    int num_subjects = 50;
    int num_trials = 5;
    std::vector<int> levels = {2, 2, 3, 3, 3, 3, 3, 3, 3, 3};
    double sigma_eps_sq = 1.0;
    double sigma_us_sq = 0.1;
    double sigma_ua_sq = 2.0;

    static SyntheticConfig from_config(const Config& cfg);
    void validate() const;
};

/// Ground truth behind a generated dataset: the three unique coefficient
/// curves, the per-predictor cluster-count schedule, variances, and the
/// realized random-effect rows.
struct SyntheticTruth {
    std::vector<double> beta1, beta2, beta3;       // length 20 each
    std::vector<std::vector<int>> ell;             // [j][k] true counts
    double sigma_eps_sq = 1.0;
    double sigma_us_sq = 0.1;
    double sigma_ua_sq = 2.0;
    std::vector<std::vector<double>> u;            // [subject][k]
    std::vector<std::vector<int>> subject_levels;  // [subject][j], 1-based

    /// True fixed-effect value at location k (0-based) for a level tuple.
    double truth_at(int k, const std::vector<int>& levels) const;
};

/// Number of time locations the generator produces.
int synthetic_num_times();

/// The three built-in truth curves (shared with tests).
const std::vector<double>& synthetic_beta1();
const std::vector<double>& synthetic_beta2();
const std::vector<double>& synthetic_beta3();

/// Benchmark generator: the first predictor splits its levels from t = 8 on;
/// the third (when present, with three levels) separates level 3 over
/// t = 5..16; every other predictor is redundant. Covariate levels are
/// assigned uniformly per subject (redrawn until every level occurs), random
/// effects come from the smoothness-penalized prior, and responses add
/// Normal(0, sigma_eps_sq) noise.
std::pair<Dataset, SyntheticTruth> generate_synthetic(
    const SyntheticConfig& cfg, Rng& rng);

std::string truth_to_json(const SyntheticTruth& truth);
void write_truth(const SyntheticTruth& truth, const std::string& path);

}  // namespace lfmm
