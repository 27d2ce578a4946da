#include "collapsed.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace lfmm {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

NeighborSets neighbor_sets(const LocalPartition& here, int h,
                           const LocalPartition* prev,
                           const LocalPartition* next) {
    NeighborSets nb;
    std::set<int> pred, succ;
    for (int c : here.members.at(h)) {
        if (prev) pred.insert(prev->cell_of_combo[c]);
        if (next) succ.insert(next->cell_of_combo[c]);
    }
    nb.pred.assign(pred.begin(), pred.end());
    nb.succ.assign(succ.begin(), succ.end());
    return nb;
}

Moments smoothing_prior_moments(const NeighborSets& nb,
                                const std::vector<double>* beta_prev,
                                const std::vector<double>* beta_next,
                                double sigma_beta_sq, double anchor_mean,
                                double anchor_var) {
    int n_minus = static_cast<int>(nb.pred.size());
    int n_plus = static_cast<int>(nb.succ.size());
    if (n_minus + n_plus == 0) return {anchor_mean, anchor_var};
    double s = 0.0;
    for (int h : nb.pred) s += (*beta_prev)[h];
    for (int h : nb.succ) s += (*beta_next)[h];
    return {s / (n_minus + n_plus), sigma_beta_sq / (n_minus + n_plus)};
}

Moments posterior_moments(const Moments& prior, const ClusterStats& stats,
                          double sigma_eps_sq) {
    double prec = stats.n / sigma_eps_sq + 1.0 / prior.var;
    double var = 1.0 / prec;
    double mean = var * (stats.sum / sigma_eps_sq + prior.mean / prior.var);
    return {mean, var};
}

double log_marginal_one_cluster(const Moments& prior, const ClusterStats& stats,
                                double sigma_eps_sq) {
    if (!(prior.var > 0.0) || !(sigma_eps_sq > 0.0))
        throw std::runtime_error("nonpositive variance in evidence computation");
    Moments post = posterior_moments(prior, stats, sigma_eps_sq);
    return -0.5 * stats.n * (kLog2Pi + std::log(sigma_eps_sq)) -
           0.5 * std::log(prior.var) + 0.5 * std::log(post.var) -
           0.5 * (stats.sumsq / sigma_eps_sq +
                  prior.mean * prior.mean / prior.var -
                  post.mean * post.mean / post.var);
}

double log_marginal_likelihood_location(const std::vector<Moments>& priors,
                                        const std::vector<ClusterStats>& stats,
                                        double sigma_eps_sq) {
    if (priors.size() != stats.size())
        throw std::invalid_argument("cluster moment/stat arity mismatch");
    double lp = 0.0;
    for (size_t h = 0; h < priors.size(); ++h)
        lp += log_marginal_one_cluster(priors[h], stats[h], sigma_eps_sq);
    return lp;
}

double sample_core_coefficient(const Moments& prior, const ClusterStats& stats,
                               double sigma_eps_sq, Rng& rng) {
    Moments post = posterior_moments(prior, stats, sigma_eps_sq);
    return rng.normal(post.mean, std::sqrt(post.var));
}

LocationGaussian::LocationGaussian(int dim)
    : A_(Eigen::MatrixXd::Zero(dim, dim)), b_(Eigen::VectorXd::Zero(dim)) {
    if (dim < 1) throw std::invalid_argument("empty location");
}

void LocationGaussian::add_point_factor(int i, double mean, double var) {
    if (!(var > 0.0)) throw std::runtime_error("nonpositive factor variance");
    log_const_ += -0.5 * (kLog2Pi + std::log(var)) - mean * mean / (2.0 * var);
    A_(i, i) += 1.0 / var;
    b_(i) += mean / var;
}

void LocationGaussian::add_average_factor(const std::vector<int>& idx,
                                          double value, double var) {
    if (!(var > 0.0)) throw std::runtime_error("nonpositive factor variance");
    if (idx.empty()) throw std::invalid_argument("empty average factor");
    double q = static_cast<double>(idx.size());
    log_const_ += -0.5 * (kLog2Pi + std::log(var)) - value * value / (2.0 * var);
    for (int a : idx) {
        for (int b : idx) A_(a, b) += 1.0 / (q * q * var);
        b_(a) += value / (q * var);
    }
}

void LocationGaussian::add_data(int i, const ClusterStats& stats,
                                double sigma_eps_sq) {
    if (!(sigma_eps_sq > 0.0))
        throw std::runtime_error("nonpositive error variance");
    if (stats.n == 0) return;
    log_const_ += -0.5 * stats.n * (kLog2Pi + std::log(sigma_eps_sq)) -
                  stats.sumsq / (2.0 * sigma_eps_sq);
    A_(i, i) += stats.n / sigma_eps_sq;
    b_(i) += stats.sum / sigma_eps_sq;
}

Eigen::LLT<Eigen::MatrixXd> LocationGaussian::factorize() const {
    Eigen::LLT<Eigen::MatrixXd> llt(A_);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("location precision matrix not positive definite");
    return llt;
}

double LocationGaussian::log_evidence() const {
    auto llt = factorize();
    double logdet = 0.0;
    const auto& L = llt.matrixLLT();
    for (int i = 0; i < A_.rows(); ++i) logdet += 2.0 * std::log(L(i, i));
    Eigen::VectorXd mu = llt.solve(b_);
    return log_const_ + 0.5 * A_.rows() * kLog2Pi - 0.5 * logdet +
           0.5 * b_.dot(mu);
}

std::vector<double> LocationGaussian::mean() const {
    Eigen::VectorXd mu = factorize().solve(b_);
    return {mu.data(), mu.data() + mu.size()};
}

Eigen::MatrixXd LocationGaussian::covariance() const {
    return factorize().solve(Eigen::MatrixXd::Identity(A_.rows(), A_.cols()));
}

std::vector<double> LocationGaussian::sample(Rng& rng) const {
    auto llt = factorize();
    Eigen::VectorXd mu = llt.solve(b_);
    Eigen::VectorXd z(A_.rows());
    for (int i = 0; i < z.size(); ++i) z(i) = rng.normal(0.0, 1.0);
    // L^T v = z gives Cov(v) = A^{-1}.
    Eigen::VectorXd v =
        llt.matrixU().solve(z);
    Eigen::VectorXd draw = mu + v;
    return {draw.data(), draw.data() + draw.size()};
}

LocationGaussian build_location_gaussian(const LocationContext& ctx,
                                         const LocalPartition& here,
                                         const std::vector<ClusterStats>& stats) {
    if (static_cast<int>(stats.size()) != here.size())
        throw std::invalid_argument("cluster stats arity mismatch");
    LocationGaussian g(here.size());
    for (int h = 0; h < here.size(); ++h) {
        if (ctx.k == 0) {
            g.add_point_factor(h, ctx.anchor_mean, ctx.anchor_var);
        } else {
            NeighborSets nb = neighbor_sets(here, h, ctx.prev, nullptr);
            double s = 0.0;
            for (int hp : nb.pred) s += (*ctx.beta_prev)[hp];
            double q = static_cast<double>(nb.pred.size());
            g.add_point_factor(h, s / q, ctx.sigma_beta_sq / q);
        }
        g.add_data(h, stats[h], ctx.sigma_eps_sq);
    }
    if (ctx.k + 1 < ctx.num_locations) {
        // Conditional priors of the next location's coefficients: each is a
        // normal around the average of the location-k coefficients expressed
        // by its members, so it couples those coefficients.
        for (int hn = 0; hn < ctx.next->size(); ++hn) {
            std::set<int> pred;
            for (int c : ctx.next->members[hn]) pred.insert(here.cell_of_combo[c]);
            std::vector<int> idx(pred.begin(), pred.end());
            g.add_average_factor(idx, (*ctx.beta_next)[hn],
                                 ctx.sigma_beta_sq / idx.size());
        }
    }
    return g;
}

double log_location_evidence(const LocationContext& ctx,
                             const LocalPartition& here,
                             const std::vector<ClusterStats>& stats) {
    return build_location_gaussian(ctx, here, stats).log_evidence();
}

}  // namespace lfmm
