#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rng.hpp"
#include "state.hpp"

namespace lfmm {

/// Per-cluster Gaussian prior (or posterior) moments.
struct Moments {
    double mean = 0.0;
    double var = 1.0;
};

/// Sufficient statistics of the main-effects residuals r = y - u falling in
/// one cluster at one location.
struct ClusterStats {
    long long n = 0;
    double sum = 0.0;
    double sumsq = 0.0;

    void add(double r) {
        ++n;
        sum += r;
        sumsq += r * r;
    }
};

/// Cluster labels expressed at the adjacent locations by a cluster's members.
struct NeighborSets {
    std::vector<int> pred;  // distinct cells at k-1, ascending
    std::vector<int> succ;  // distinct cells at k+1, ascending
};

/// prev/next may be null at the boundaries.
NeighborSets neighbor_sets(const LocalPartition& here, int h,
                           const LocalPartition* prev,
                           const LocalPartition* next);

/// Conditional smoothing prior N(mu_{k,h}, sigma^2_{k,h}): the average of the
/// coefficients expressed by the cluster's members at the adjacent locations,
/// with variance sigma_beta^2 / (n- + n+). Falls back to the diffuse anchor
/// when no neighbors exist.
Moments smoothing_prior_moments(const NeighborSets& nb,
                                const std::vector<double>* beta_prev,
                                const std::vector<double>* beta_next,
                                double sigma_beta_sq, double anchor_mean,
                                double anchor_var);

/// Conjugate normal update: var* = (n/s_eps + 1/var)^{-1},
/// mean* = var* (sum/s_eps + mean/var).
Moments posterior_moments(const Moments& prior, const ClusterStats& stats,
                          double sigma_eps_sq);

/// Closed-form log evidence of one cluster under its scalar smoothing prior:
/// -(n/2) log(2 pi s_eps) - log(sd) + log(sd*) - (sumsq/s_eps + mu^2/var -
/// mu*^2/var*)/2. Throws std::runtime_error on nonpositive variances.
double log_marginal_one_cluster(const Moments& prior, const ClusterStats& stats,
                                double sigma_eps_sq);

/// Sum of log_marginal_one_cluster over the clusters of a location.
double log_marginal_likelihood_location(const std::vector<Moments>& priors,
                                        const std::vector<ClusterStats>& stats,
                                        double sigma_eps_sq);

/// One draw from the scalar Gaussian full conditional.
double sample_core_coefficient(const Moments& prior, const ClusterStats& stats,
                               double sigma_eps_sq, Rng& rng);

/// Joint Gaussian over the coefficients of one location, assembled from unit
/// factors. Collects the log normalizing constant alongside the canonical
/// form (A, b), so both the exact evidence integral and the exact joint full
/// conditional come from the same object.
class LocationGaussian {
public:
    explicit LocationGaussian(int dim);

    /// Factor N(beta_i; mean, var).
    void add_point_factor(int i, double mean, double var);
    /// Factor N(value; average of beta over idx, var) viewed in beta.
    void add_average_factor(const std::vector<int>& idx, double value,
                            double var);
    /// Likelihood factor of a cluster's residual statistics.
    void add_data(int i, const ClusterStats& stats, double sigma_eps_sq);

    int dim() const { return static_cast<int>(b_.size()); }
    /// log of the integral of the factor product over beta.
    double log_evidence() const;
    std::vector<double> mean() const;
    Eigen::MatrixXd covariance() const;
    /// Draw from N(A^{-1} b, A^{-1}).
    std::vector<double> sample(Rng& rng) const;

private:
    Eigen::LLT<Eigen::MatrixXd> factorize() const;

    double log_const_ = 0.0;
    Eigen::MatrixXd A_;
    Eigen::VectorXd b_;
};

/// Everything the location-k evidence needs from the rest of the model.
struct LocationContext {
    int k = 0;                                  // 0-based location
    int num_locations = 1;                      // K
    const LocalPartition* prev = nullptr;       // partition at k-1
    const LocalPartition* next = nullptr;       // partition at k+1
    const std::vector<double>* beta_prev = nullptr;
    const std::vector<double>* beta_next = nullptr;
    double sigma_beta_sq = 1.0;
    double sigma_eps_sq = 1.0;
    double anchor_mean = 0.0;
    double anchor_var = 1.0e4;
};

/// Assemble the exact factor set for a candidate partition at location k:
/// per-cluster smoothing (or anchor) priors in the coefficients, the
/// conditional priors of the next location's coefficients (which tie together
/// the location-k coefficients their clusters average over), and the data.
LocationGaussian build_location_gaussian(const LocationContext& ctx,
                                         const LocalPartition& here,
                                         const std::vector<ClusterStats>& stats);

/// log evidence of the location under the exact factor set.
double log_location_evidence(const LocationContext& ctx,
                             const LocalPartition& here,
                             const std::vector<ClusterStats>& stats);

}  // namespace lfmm
