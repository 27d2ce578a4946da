#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "config.hpp"
#include "data.hpp"

namespace lfmm {

/// Fixed prior constants and MCMC schedule settings.
struct Hyperparameters {
    double s_sigma = 1.0;            // half-Cauchy scale for all smoothness SDs
    double a_sigma = 1.0, b_sigma = 1.0;          // error variance Inv-Gamma
    double a_alpha = 1.0, b_alpha = 1.0;          // Gamma on chain concentrations
    double a_alpha_star = 1.0, b_alpha_star = 1.0;  // Gamma on fusion concentration
    double a_phi = 5.0, b_phi = 1.0;              // Gamma on partition-size decay
    // Proper diffuse prior at the first location; unset means data-driven
    // (mean of y, 1e4 * variance of y).
    std::optional<double> anchor_mean;
    std::optional<double> anchor_var;
    double mh_log_step = 0.5;        // log-random-walk step for scale parameters
    int iterations = 7500;
    int burn_in = 2500;
    int thin = 5;
    bool random_effects = true;

    int stored_draws() const { return (iterations - burn_in) / thin; }

    /// Throws std::invalid_argument on nonpositive scales or a bad schedule.
    void validate() const;

    static Hyperparameters from_config(const Config& cfg);
};

/// Covariate product space with per-predictor label alphabets.
struct CovariateSpace {
    int num_predictors = 0;       // p
    std::vector<int> x_max;       // levels per predictor, each >= 2
    std::vector<int> z_max;       // label alphabet sizes, 2 <= z_max <= x_max

    void validate() const;
    static CovariateSpace from_dataset(const Dataset& data, int z_max_cap = 0);
};

/// Two-layer clustering labels. First-layer labels are stored 0-based in
/// {0..z_max[j]-1}; second-layer labels 0-based in {0..l_k-1}, keyed by the
/// occupied first-layer label tuple. With a single predictor the second layer
/// is the identity and the map stays empty.
struct PartitionState {
    // first[j][k][level-1] = label of level `level` of predictor j at location k
    std::vector<std::vector<std::vector<int>>> first;
    // second[k]: occupied cell key (z_{1,k},..,z_{p,k}) -> fused label
    std::vector<std::map<std::vector<int>, int>> second;
};

/// Set partition of the observed covariate combinations at one location.
/// Cells are ordered by their lexicographically smallest member (combination
/// indices are themselves lex-sorted, so that is the smallest member index).
struct LocalPartition {
    std::vector<std::vector<int>> members;  // cell h -> sorted combo indices
    std::vector<int> cell_of_combo;         // combo index -> cell h

    int size() const { return static_cast<int>(members.size()); }  // m_k
};

/// fHMM transition structure plus second-layer fusion probabilities.
struct ChainParameters {
    std::vector<std::vector<double>> pi0;                // [j][label]
    std::vector<std::vector<std::vector<double>>> trans; // [j][from][to]
    std::vector<double> alpha;                           // [j]
    std::vector<double> phi;                             // [j]
    std::vector<std::vector<double>> pi_star;            // [k][label], length l_k
    double alpha_star = 1.0;
};

/// Core coefficients and variance components. beta[k][h] aligns with the
/// cells of the location-k partition in their deterministic order.
struct CoefficientState {
    std::vector<std::vector<double>> beta;   // [k][cell]
    double sigma_beta_sq = 1.0;
    double nu_beta = 1.0;
    std::vector<std::vector<double>> u;      // [subject][k]
    double sigma_us = 1.0;                   // random-effect smoothness SD
    double sigma_ua = 1.0;                   // random-effect amplitude SD
    double sigma_eps_sq = 1.0;
    double anchor_mean = 0.0;                // resolved diffuse prior at k = 1
    double anchor_var = 1.0e4;
};

/// Number of distinct labels in a label vector (l_{j,k} when applied to one
/// predictor's level labels at one location).
int distinct_count(const std::vector<int>& labels);

/// Second-layer alphabet size l_k = prod_j l_{j,k} at location k.
int fused_alphabet_size(const PartitionState& part, const CovariateSpace& space,
                        int k);

/// First-layer key of a covariate combination at location k.
std::vector<int> cell_key(const PartitionState& part, int k,
                          const std::vector<int>& combo_levels);

/// Compose both label layers into the induced set partition of the observed
/// combinations. Throws std::runtime_error if an occupied cell lacks a
/// second-layer label (p >= 2 only).
LocalPartition derive_partition(const PartitionState& part,
                                const CovariateSpace& space, int k,
                                const std::vector<std::vector<int>>& combos);

/// log P(l | phi) = -phi*l - log sum_{m=1..support} exp(-phi*m).
/// Throws std::invalid_argument when l is outside {1..support}.
double log_prior_partition_size(int l, double phi, int support);

/// Sum of every fHMM log-transition (and initial) term touching location k
/// for predictor j's level chains.
double log_prior_chain_segment(int j, int k, const PartitionState& part,
                               const CovariateSpace& space,
                               const ChainParameters& chains, int num_locations);

/// Symmetric tridiagonal matrix stored as main and first off-diagonal.
struct Tridiag {
    std::vector<double> diag;
    std::vector<double> off;  // length diag.size() - 1
};

/// First-difference penalty P_u = D^T D: tridiagonal, PSD, zero row sums.
Tridiag first_difference_penalty(int num_locations);

}  // namespace lfmm
