#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "collapsed.hpp"
#include "data.hpp"
#include "rng.hpp"
#include "samples_io.hpp"
#include "state.hpp"

namespace lfmm {

/// Everything a chain needs besides the data.
struct SamplerConfig {
    Hyperparameters hyper;
    int hamming_radius = 1;
    int z_max_cap = 0;  // 0 keeps the full per-predictor alphabet
    std::uint64_t seed = 1;
    bool progress = false;

    // Test hooks. prior_only drops every likelihood term so the chain targets
    // the prior; the update flags freeze parameter families so exactness
    // probes can pin them.
    bool prior_only = false;
    bool update_partitions = true;
    bool update_chain_params = true;  // pi0, transition rows, alpha
    bool update_phi = true;
    bool update_second_layer = true;  // pi_star, alpha_star
    bool update_variances = true;     // sigma_beta/nu_beta and sigma_eps

    static SamplerConfig from_config(const Config& cfg);
};

/// Number of label sequences within Hamming distance `radius` of a fixed
/// sequence of the given length over `alphabet` symbols (center included).
long long hamming_ball_size(int length, int radius, int alphabet);

/// Uniform draw from that ball.
std::vector<int> propose_hamming_ball(const std::vector<int>& current,
                                      int radius, int alphabet, Rng& rng);

/// Conjugate Dirichlet draw: Dir(alpha/m + counts).
std::vector<double> gibbs_update_dirichlet_row(
    double alpha, int m, const std::vector<long long>& counts, Rng& rng);

/// Scale-mixture update for a squared smoothness scale: draws
/// Inv-Gamma(1/2 + increments/2, 1/nu + sum_sq/2), then refreshes nu.
/// Returns (sigma_sq, nu).
std::pair<double, double> gibbs_update_sigma_beta(double increments,
                                                  double sum_sq, double nu,
                                                  double s_sigma, Rng& rng);

/// Error-variance draw: Inv-Gamma(a + n/2, b + rss/2).
double gibbs_update_sigma_eps(double a_sigma, double b_sigma, long long n_obs,
                              double rss, Rng& rng);

/// Log-random-walk Metropolis step for a positive scalar; returns the new
/// value and reports acceptance through `accepted` when given. A non-finite
/// log target at the proposal rejects.
double mh_update_log_scale(double current,
                           const std::function<double(double)>& log_target,
                           double step, Rng& rng, bool* accepted = nullptr);

/// Symmetric positive-definite tridiagonal Cholesky (L lower bidiagonal).
class TridiagChol {
public:
    TridiagChol(const std::vector<double>& diag, const std::vector<double>& off);
    std::vector<double> solve(const std::vector<double>& rhs) const;
    /// Draw from MVN(Q^{-1} b, Q^{-1}) for the factored precision Q.
    std::vector<double> sample(const std::vector<double>& b, Rng& rng) const;
    double log_det() const;  // of Q

private:
    std::vector<double> d_, e_;
};

/// One random-effects row draw: precision sigma_eps^{-2} diag(m) +
/// sigma_us^{-2} P + sigma_ua^{-2} I with banded factorization.
std::vector<double> gibbs_update_random_effects(
    const std::vector<long long>& obs_count_per_time,
    const std::vector<double>& residual_sum_per_time, double sigma_eps_sq,
    double sigma_us, double sigma_ua, const Tridiag& penalty, Rng& rng);

/// Exact log normalizer of the tilted label-chain prior for one predictor:
/// sum over all K-step label-vector paths of the fHMM mass times
/// exp(-phi * sum_k ell_k). Transfer-matrix computation over alphabet^levels
/// states; empty when the state space exceeds the exact-regime cap.
std::optional<double> log_tilt_normalizer(
    const std::vector<double>& pi0,
    const std::vector<std::vector<double>>& trans, double phi, int num_levels,
    int num_locations);

/// Whole-move acceptance bookkeeping.
struct MoveStats {
    long long proposed = 0;
    long long accepted = 0;
    double rate() const {
        return proposed ? static_cast<double>(accepted) / proposed : 0.0;
    }
};

/// One MCMC chain. State members are public so oracles and exactness tests
/// can pin or inspect them; library consumers drive it through run().
class Sampler {
public:
    Sampler(Dataset data, SamplerConfig cfg);

    /// Full schedule; stores every thin-th post-burn-in draw.
    SampleStore run();

    /// One full sweep in the fixed update order.
    void sweep();

    /// Replace responses with draws from p(y | current state).
    void regenerate_responses();

    Draw snapshot() const;
    StoreMeta meta() const;

    // -- update steps, exposed for targeted tests --
    void rebuild_combo_stats();
    void update_partition(int j, int k);
    void gibbs_beta(int k);
    void update_sigma_beta();
    void update_chain(int j);
    void update_pi_star(int k);
    void update_alpha_star();
    void update_phi_step(int j);
    void update_random_effects();
    void update_sigma_u(bool smoothness);
    void update_sigma_eps();

    std::vector<ClusterStats> cluster_stats(int k,
                                            const LocalPartition& part) const;
    LocationContext location_context(int k) const;
    /// Fixed-effect value at a row's (time, combination).
    double fixed_effect(const Row& row) const;
    /// Re-derives parts_[k]; used after direct state edits in tests.
    void refresh_partitions();

    const Dataset& data() const { return data_; }
    Dataset& mutable_data() { return data_; }

    // Model state (public by design; see class comment).
    CovariateSpace space;
    PartitionState part;
    ChainParameters chains;
    CoefficientState coef;
    std::vector<LocalPartition> parts;  // derived, one per location

    MoveStats acc_partition, acc_pi, acc_alpha, acc_alpha_star, acc_phi,
        acc_sigma_u;

    Rng& rng() { return rng_; }
    int num_locations() const { return K_; }

private:
    void init_state();
    double chain_log_z(int j) const;  // cached exact tilt normalizer

    Dataset data_;
    SamplerConfig cfg_;
    Rng rng_;
    int K_ = 0, p_ = 0;
    Tridiag penalty_;
    std::vector<double> laplacian_eig_;
    std::vector<std::vector<ClusterStats>> combo_stats_;  // [k][combo]
    double re_sum_sq_ = 0.0;   // sum over subjects of u'u
    double re_pen_sq_ = 0.0;   // sum over subjects of u'Pu
    mutable std::vector<std::optional<double>> z_cache_;  // per predictor
    bool warned_approx_ = false;
    int cur_iteration_ = 0;
};

}  // namespace lfmm
