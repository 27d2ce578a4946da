#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "data.hpp"
#include "rng.hpp"
#include "samples_io.hpp"

namespace lfmm {

/// Random access to one draw's expanded fixed-effect surface: every level
/// tuple over the full covariate grid gets a coefficient. Tuples whose label
/// key is unoccupied in the draw fall back to the nearest observed
/// combination (Hamming distance on levels, first in lexicographic order on
/// ties).
class DrawEvaluator {
public:
    DrawEvaluator(const Draw& draw, const StoreMeta& meta);

    /// combo holds 1-based levels for every predictor.
    double beta_at(int k, const std::vector<int>& combo,
                   bool* fallback = nullptr) const;

private:
    const Draw* draw_;
    const StoreMeta* meta_;
    std::vector<LocalPartition> parts_;                      // per location
    std::vector<std::map<std::vector<int>, int>> key_cell_;  // label key -> cell
};

/// Equal-tailed interpolated quantile (the common linear "type 7" rule) of an
/// ascending-sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double p);

/// Entry (k, c) = fraction of draws whose location-k partition for the given
/// predictor has exactly c+1 clusters. Rows sum to one.
std::vector<std::vector<double>> cluster_count_probabilities(
    const SampleStore& store, int predictor);

struct CurveSummary {
    std::vector<double> mean, lower, upper;  // per location
};

/// Pointwise posterior mean and equal-tailed credible band of the expanded
/// coefficient curve at one level combination (1-based levels).
CurveSummary fixed_effect_summary(const SampleStore& store,
                                  const std::vector<int>& combo, double level);

/// A full set of curves over the complete covariate grid (lexicographic cell
/// order), e.g. posterior means or known truth.
struct CurveSet {
    std::vector<int> x_max;
    std::vector<std::vector<int>> cells;  // 1-based level tuples
    std::vector<std::vector<double>> f;   // [cell][t]
};

/// Posterior-mean curves over the full grid.
CurveSet expand_mean_curves(const SampleStore& store);

struct EffectDecomposition {
    std::vector<double> overall_mean;                            // [t]
    std::vector<std::vector<std::vector<double>>> main_effects;  // [j][lev][t]
    std::vector<std::pair<int, int>> pairs;                      // j1 < j2
    std::vector<std::vector<std::vector<std::vector<double>>>>
        interactions;  // [pair][lev1][lev2][t]
};

/// Equal-weight functional ANOVA over the full grid: overall mean, per-level
/// main effects (centered within predictor), and pairwise interactions.
EffectDecomposition anova_effects(const CurveSet& curves);

struct IntervalTest {
    int level_a = 0, level_b = 0;     // 1-based
    std::vector<double> reject_prob;  // per location
    std::vector<bool> reject;         // reject_prob > cut
};

/// Posterior probability that the main-effect curves of two levels differ by
/// more than delta(t), for every level pair of one predictor. `delta` has
/// either one entry (constant band) or one entry per location.
std::vector<IntervalTest> pairwise_interval_tests(
    const SampleStore& store, int predictor, const std::vector<double>& delta,
    double cut = 0.95);

struct GewekeResult {
    double z = 0.0;
    double p = 1.0;
};

/// Geweke convergence diagnostic comparing the first and last segments of a
/// scalar chain with batch-means spectral standard errors.
GewekeResult geweke_diagnostic(const std::vector<double>& chain,
                               double first_fraction = 0.1,
                               double last_fraction = 0.5,
                               int min_length = 100);

/// Scalar chains worth monitoring, labelled for the diagnostics table.
std::vector<std::pair<std::string, std::vector<double>>> monitored_scalars(
    const SampleStore& store);

struct PredictiveSummary {
    double rmse = 0.0;
    double coverage = 0.0;
    double mean_width = 0.0;
    std::vector<double> pred_mean, pred_lower, pred_upper;  // per held-out row
};

/// Posterior-predictive evaluation against held-out rows with true responses.
/// Known subjects reuse their sampled random-effect rows; unseen subjects get
/// rows drawn from the random-effects prior at each draw's variances.
PredictiveSummary posterior_predictive(const SampleStore& store,
                                       const Dataset& heldout, double level,
                                       Rng& rng);

}  // namespace lfmm
