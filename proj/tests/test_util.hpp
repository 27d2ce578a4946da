#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "data.hpp"

namespace lfmm_test {

/// Fully crossed dataset: one subject per covariate combination (so every
/// level appears at every time), each observing all times with `trials`
/// repeats. Responses are standard-normal noise around `level_effect` times
/// the first predictor's level.
inline lfmm::Dataset make_grid_dataset(const std::vector<int>& x_max,
                                       int num_times, int trials,
                                       unsigned seed,
                                       double level_effect = 0.0) {
    std::vector<std::vector<int>> combos{{}};
    for (int levels : x_max) {
        std::vector<std::vector<int>> next;
        for (const auto& c : combos)
            for (int v = 1; v <= levels; ++v) {
                next.push_back(c);
                next.back().push_back(v);
            }
        combos = std::move(next);
    }
    lfmm::Dataset data;
    data.num_times = num_times;
    data.num_predictors = static_cast<int>(x_max.size());
    data.x_max = x_max;
    std::mt19937_64 mt(seed);
    std::normal_distribution<double> gauss;
    for (int s = 0; s < static_cast<int>(combos.size()); ++s) {
        data.subject_ids.push_back("s" + std::to_string(s + 1));
        for (int trial = 1; trial <= trials; ++trial)
            for (int t = 0; t < num_times; ++t) {
                lfmm::Row row;
                row.subject = s;
                row.trial = trial;
                row.time = t;
                row.levels = combos[s];
                row.y = level_effect * combos[s][0] + gauss(mt);
                data.rows.push_back(row);
            }
    }
    data.finalize();
    return data;
}

/// Batch-means standard error of the mean of a (possibly autocorrelated)
/// scalar chain.
inline double batch_se(const std::vector<double>& chain) {
    int n = static_cast<int>(chain.size());
    int b = static_cast<int>(std::sqrt(static_cast<double>(n)));
    int nb = n / b;
    if (nb < 2) return 0.0;
    double grand = 0.0;
    std::vector<double> means(nb, 0.0);
    for (int i = 0; i < nb; ++i) {
        for (int k = 0; k < b; ++k) means[i] += chain[i * b + k];
        means[i] /= b;
        grand += means[i];
    }
    grand /= nb;
    double var = 0.0;
    for (double m : means) var += (m - grand) * (m - grand);
    var /= (nb - 1);
    return std::sqrt(var / nb);
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / v.size();
}

}  // namespace lfmm_test
