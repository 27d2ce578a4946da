#include "sampler.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "densities.hpp"
#include "util.hpp"

namespace lfmm {

namespace {

long long choose(int n, int k) {
    if (k < 0 || k > n) return 0;
    long long c = 1;
    for (int i = 0; i < k; ++i) c = c * (n - i) / (i + 1);
    return c;
}

long long ipow(long long base, int exp) {
    long long v = 1;
    for (int i = 0; i < exp; ++i) v *= base;
    return v;
}

constexpr long long kExactTiltStateCap = 256;

}  // namespace

SamplerConfig SamplerConfig::from_config(const Config& cfg) {
    SamplerConfig sc;
    sc.hyper = Hyperparameters::from_config(cfg);
    sc.hamming_radius = cfg.get_int("hamming_radius", sc.hamming_radius);
    if (sc.hamming_radius < 1)
        throw std::invalid_argument("hamming_radius must be >= 1");
    sc.z_max_cap = cfg.get_int("z_max", 0);
    sc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
    sc.progress = cfg.get_bool("progress", false);
    return sc;
}

long long hamming_ball_size(int length, int radius, int alphabet) {
    radius = std::min(radius, length);
    long long total = 0;
    for (int d = 0; d <= radius; ++d)
        total += choose(length, d) * ipow(alphabet - 1, d);
    return total;
}

std::vector<int> propose_hamming_ball(const std::vector<int>& current,
                                      int radius, int alphabet, Rng& rng) {
    const int length = static_cast<int>(current.size());
    radius = std::min(radius, length);
    long long idx = static_cast<long long>(
        rng.uniform_int(hamming_ball_size(length, radius, alphabet)));
    std::vector<int> out = current;
    if (idx == 0) return out;  // the center
    --idx;
    for (int d = 1; d <= radius; ++d) {
        const long long alts = ipow(alphabet - 1, d);
        const long long block = choose(length, d) * alts;
        if (idx >= block) {
            idx -= block;
            continue;
        }
        long long subset_rank = idx / alts;
        long long offsets = idx % alts;
        // Unrank the position subset in lexicographic order.
        std::vector<int> pos;
        int remaining = d;
        for (int i = 0; i < length && remaining > 0; ++i) {
            long long c = choose(length - 1 - i, remaining - 1);
            if (subset_rank < c) {
                pos.push_back(i);
                --remaining;
            } else {
                subset_rank -= c;
            }
        }
        for (int t = d - 1; t >= 0; --t) {
            int step = static_cast<int>(offsets % (alphabet - 1));
            offsets /= (alphabet - 1);
            out[pos[t]] = (current[pos[t]] + 1 + step) % alphabet;
        }
        return out;
    }
    return out;
}

std::vector<double> gibbs_update_dirichlet_row(
    double alpha, int m, const std::vector<long long>& counts, Rng& rng) {
    std::vector<double> conc(m);
    for (int i = 0; i < m; ++i)
        conc[i] = alpha / m + (i < static_cast<int>(counts.size()) ? counts[i] : 0);
    return rng.dirichlet(conc);
}

std::pair<double, double> gibbs_update_sigma_beta(double increments,
                                                  double sum_sq, double nu,
                                                  double s_sigma, Rng& rng) {
    double sigma_sq = rng.inv_gamma(0.5 + increments / 2.0, 1.0 / nu + sum_sq / 2.0);
    double nu_new = rng.inv_gamma(1.0, 1.0 / (s_sigma * s_sigma) + 1.0 / sigma_sq);
    return {sigma_sq, nu_new};
}

double gibbs_update_sigma_eps(double a_sigma, double b_sigma, long long n_obs,
                              double rss, Rng& rng) {
    return rng.inv_gamma(a_sigma + n_obs / 2.0, b_sigma + rss / 2.0);
}

double mh_update_log_scale(double current,
                           const std::function<double(double)>& log_target,
                           double step, Rng& rng, bool* accepted) {
    double proposal = current * std::exp(step * rng.normal());
    bool acc = false;
    double lt_prop = log_target(proposal);
    if (std::isfinite(lt_prop)) {
        double logr = lt_prop - log_target(current) + std::log(proposal) -
                      std::log(current);
        acc = std::log(rng.uniform()) <= logr;
    }
    if (accepted) *accepted = acc;
    return acc ? proposal : current;
}

TridiagChol::TridiagChol(const std::vector<double>& diag,
                         const std::vector<double>& off) {
    const int n = static_cast<int>(diag.size());
    if (n == 0 || static_cast<int>(off.size()) != n - 1)
        throw std::invalid_argument("bad tridiagonal shape");
    d_.resize(n);
    e_.resize(n - 1);
    double v = diag[0];
    if (!(v > 0.0)) throw std::runtime_error("tridiagonal matrix not positive definite");
    d_[0] = std::sqrt(v);
    for (int i = 1; i < n; ++i) {
        e_[i - 1] = off[i - 1] / d_[i - 1];
        v = diag[i] - e_[i - 1] * e_[i - 1];
        if (!(v > 0.0))
            throw std::runtime_error("tridiagonal matrix not positive definite");
        d_[i] = std::sqrt(v);
    }
}

std::vector<double> TridiagChol::solve(const std::vector<double>& rhs) const {
    const int n = static_cast<int>(d_.size());
    std::vector<double> y(n), x(n);
    y[0] = rhs[0] / d_[0];
    for (int i = 1; i < n; ++i) y[i] = (rhs[i] - e_[i - 1] * y[i - 1]) / d_[i];
    x[n - 1] = y[n - 1] / d_[n - 1];
    for (int i = n - 2; i >= 0; --i) x[i] = (y[i] - e_[i] * x[i + 1]) / d_[i];
    return x;
}

std::vector<double> TridiagChol::sample(const std::vector<double>& b,
                                        Rng& rng) const {
    const int n = static_cast<int>(d_.size());
    std::vector<double> mu = solve(b);
    std::vector<double> z(n);
    for (int i = 0; i < n; ++i) z[i] = rng.normal();
    // Back-substitution L^T v = z gives Cov(v) = Q^{-1}.
    std::vector<double> v(n);
    v[n - 1] = z[n - 1] / d_[n - 1];
    for (int i = n - 2; i >= 0; --i) v[i] = (z[i] - e_[i] * v[i + 1]) / d_[i];
    for (int i = 0; i < n; ++i) mu[i] += v[i];
    return mu;
}

double TridiagChol::log_det() const {
    double s = 0.0;
    for (double d : d_) s += std::log(d);
    return 2.0 * s;
}

std::vector<double> gibbs_update_random_effects(
    const std::vector<long long>& obs_count_per_time,
    const std::vector<double>& residual_sum_per_time, double sigma_eps_sq,
    double sigma_us, double sigma_ua, const Tridiag& penalty, Rng& rng) {
    const int n = static_cast<int>(obs_count_per_time.size());
    const double inv_us = 1.0 / (sigma_us * sigma_us);
    const double inv_ua = 1.0 / (sigma_ua * sigma_ua);
    std::vector<double> diag(n), off(std::max(0, n - 1)), b(n);
    for (int t = 0; t < n; ++t) {
        diag[t] = obs_count_per_time[t] / sigma_eps_sq +
                  penalty.diag[t] * inv_us + inv_ua;
        b[t] = residual_sum_per_time[t] / sigma_eps_sq;
    }
    for (int t = 0; t + 1 < n; ++t) off[t] = penalty.off[t] * inv_us;
    return TridiagChol(diag, off).sample(b, rng);
}

std::optional<double> log_tilt_normalizer(
    const std::vector<double>& pi0,
    const std::vector<std::vector<double>>& trans, double phi, int num_levels,
    int num_locations) {
    const int z = static_cast<int>(pi0.size());
    long long states = 1;
    for (int i = 0; i < num_levels; ++i) {
        states *= z;
        if (states > kExactTiltStateCap) return std::nullopt;
    }
    const int s = static_cast<int>(states);
    // Per-state level digits and distinct-label counts. The tilt keeps the
    // exp(-phi) shared by every state factored out (restored at the end), so
    // fused paths survive arbitrarily large phi without underflow.
    std::vector<std::vector<int>> digit(s, std::vector<int>(num_levels));
    std::vector<double> tilt(s);
    for (int v = 0; v < s; ++v) {
        int rem = v;
        std::set<int> uniq;
        for (int lev = 0; lev < num_levels; ++lev) {
            digit[v][lev] = rem % z;
            uniq.insert(rem % z);
            rem /= z;
        }
        tilt[v] = std::exp(-phi * static_cast<double>(uniq.size() - 1));
    }
    std::vector<double> w(s);
    for (int v = 0; v < s; ++v) {
        double prod = tilt[v];
        for (int lev = 0; lev < num_levels; ++lev) prod *= pi0[digit[v][lev]];
        w[v] = prod;
    }
    double log_scale = 0.0;
    std::vector<double> w2(s);
    for (int step = 1; step < num_locations; ++step) {
        for (int v2 = 0; v2 < s; ++v2) {
            double acc = 0.0;
            for (int v = 0; v < s; ++v) {
                double prod = w[v];
                for (int lev = 0; lev < num_levels; ++lev)
                    prod *= trans[digit[v][lev]][digit[v2][lev]];
                acc += prod;
            }
            w2[v2] = acc * tilt[v2];
        }
        std::swap(w, w2);
        double m = *std::max_element(w.begin(), w.end());
        if (!(m > 0.0)) return -std::numeric_limits<double>::infinity();
        for (double& x : w) x /= m;
        log_scale += std::log(m);
    }
    double total = 0.0;
    for (double x : w) total += x;
    return log_scale + std::log(total) - phi * num_locations;
}

Sampler::Sampler(Dataset data, SamplerConfig cfg)
    : data_(std::move(data)), cfg_(std::move(cfg)), rng_(cfg_.seed) {
    cfg_.hyper.validate();
    space = CovariateSpace::from_dataset(data_, cfg_.z_max_cap);
    K_ = data_.num_times;
    p_ = space.num_predictors;
    penalty_ = first_difference_penalty(K_);
    laplacian_eig_.resize(K_);
    constexpr double pi = 3.14159265358979323846;
    for (int t = 0; t < K_; ++t)
        laplacian_eig_[t] = 2.0 - 2.0 * std::cos(pi * t / K_);
    z_cache_.assign(p_, std::nullopt);
    init_state();
}

void Sampler::init_state() {
    // Anchor defaults follow the responses unless pinned by configuration.
    double mean_y = 0.0;
    for (const auto& r : data_.rows) mean_y += r.y;
    mean_y /= data_.num_rows();
    double var_y = 0.0;
    for (const auto& r : data_.rows) var_y += (r.y - mean_y) * (r.y - mean_y);
    var_y = data_.num_rows() > 1 ? var_y / (data_.num_rows() - 1) : 0.0;
    coef.anchor_mean = cfg_.hyper.anchor_mean.value_or(mean_y);
    coef.anchor_var =
        cfg_.hyper.anchor_var.value_or(1.0e4 * (var_y > 0.0 ? var_y : 1.0));

    // Fully separated start: distinct labels per level (capped alphabets fold
    // the overflow onto the top label), injective second layer.
    part.first.assign(p_, {});
    for (int j = 0; j < p_; ++j) {
        part.first[j].assign(K_, std::vector<int>(space.x_max[j]));
        for (int k = 0; k < K_; ++k)
            for (int lev = 0; lev < space.x_max[j]; ++lev)
                part.first[j][k][lev] = std::min(lev, space.z_max[j] - 1);
    }
    part.second.assign(K_, {});
    if (p_ >= 2) {
        for (int k = 0; k < K_; ++k)
            for (const auto& combo : data_.combos) {
                auto key = cell_key(part, k, combo);
                part.second[k].try_emplace(
                    key, static_cast<int>(part.second[k].size()));
            }
    }
    parts.resize(K_);
    refresh_partitions();

    chains.pi0.assign(p_, {});
    chains.trans.assign(p_, {});
    chains.alpha.assign(p_, 1.0);
    chains.phi.assign(p_, cfg_.hyper.a_phi / cfg_.hyper.b_phi);
    for (int j = 0; j < p_; ++j) {
        int z = space.z_max[j];
        chains.pi0[j].assign(z, 1.0 / z);
        chains.trans[j].assign(z, std::vector<double>(z, 1.0 / z));
    }
    chains.pi_star.assign(K_, {});
    if (p_ >= 2)
        for (int k = 0; k < K_; ++k) {
            int lk = fused_alphabet_size(part, space, k);
            chains.pi_star[k].assign(lk, 1.0 / lk);
        }
    chains.alpha_star = 1.0;

    coef.sigma_beta_sq = 1.0;
    coef.nu_beta = 1.0;
    coef.sigma_us = 1.0;
    coef.sigma_ua = 1.0;
    coef.sigma_eps_sq = 1.0;
    coef.u.assign(data_.num_subjects(), std::vector<double>(K_, 0.0));

    rebuild_combo_stats();
    coef.beta.assign(K_, {});
    for (int k = 0; k < K_; ++k) {
        auto st = cluster_stats(k, parts[k]);
        double loc_sum = 0.0;
        long long loc_n = 0;
        for (const auto& s : st) {
            loc_sum += s.sum;
            loc_n += s.n;
        }
        double loc_mean = loc_n > 0 ? loc_sum / loc_n : coef.anchor_mean;
        coef.beta[k].resize(parts[k].size());
        for (int h = 0; h < parts[k].size(); ++h)
            coef.beta[k][h] = st[h].n > 0 ? st[h].sum / st[h].n : loc_mean;
    }

    bool needs_exact = cfg_.update_chain_params || cfg_.update_phi;
    if (needs_exact && !warned_approx_) {
        for (int j = 0; j < p_; ++j) {
            long long states = 1;
            bool exact = true;
            for (int i = 0; i < space.x_max[j] && exact; ++i) {
                states *= space.z_max[j];
                if (states > kExactTiltStateCap) exact = false;
            }
            if (!exact) {
                std::fprintf(stderr,
                             "note: predictor %d exceeds the exact label-prior "
                             "normalizer regime; transition and shrinkage "
                             "updates fall back to the uncorrected scheme\n",
                             j + 1);
                warned_approx_ = true;
            }
        }
    }
}

void Sampler::refresh_partitions() {
    for (int k = 0; k < K_; ++k)
        parts[k] = derive_partition(part, space, k, data_.combos);
}

void Sampler::rebuild_combo_stats() {
    combo_stats_.assign(K_,
                        std::vector<ClusterStats>(data_.combos.size()));
    if (cfg_.prior_only) return;
    for (const auto& r : data_.rows)
        combo_stats_[r.time][r.combo].add(r.y - coef.u[r.subject][r.time]);
}

std::vector<ClusterStats> Sampler::cluster_stats(
    int k, const LocalPartition& partition) const {
    std::vector<ClusterStats> out(partition.size());
    for (int h = 0; h < partition.size(); ++h)
        for (int c : partition.members[h]) {
            const ClusterStats& s = combo_stats_[k][c];
            out[h].n += s.n;
            out[h].sum += s.sum;
            out[h].sumsq += s.sumsq;
        }
    return out;
}

LocationContext Sampler::location_context(int k) const {
    LocationContext ctx;
    ctx.k = k;
    ctx.num_locations = K_;
    ctx.prev = k > 0 ? &parts[k - 1] : nullptr;
    ctx.next = k + 1 < K_ ? &parts[k + 1] : nullptr;
    ctx.beta_prev = k > 0 ? &coef.beta[k - 1] : nullptr;
    ctx.beta_next = k + 1 < K_ ? &coef.beta[k + 1] : nullptr;
    ctx.sigma_beta_sq = coef.sigma_beta_sq;
    ctx.sigma_eps_sq = coef.sigma_eps_sq;
    ctx.anchor_mean = coef.anchor_mean;
    ctx.anchor_var = coef.anchor_var;
    return ctx;
}

double Sampler::fixed_effect(const Row& row) const {
    return coef.beta[row.time][parts[row.time].cell_of_combo[row.combo]];
}

void Sampler::update_partition(int j, int k) {
    auto& labels = part.first[j][k];
    const std::vector<int> cur_labels = labels;
    const std::vector<int> prop =
        propose_hamming_ball(cur_labels, cfg_.hamming_radius, space.z_max[j], rng_);
    ++acc_partition.proposed;

    const int l_cur = distinct_count(cur_labels);
    const int l_prop = distinct_count(prop);
    const double phi = chains.phi[j];

    double logr = log_prior_partition_size(l_prop, phi, space.z_max[j]) -
                  log_prior_partition_size(l_cur, phi, space.z_max[j]);

    // Everything that reads the current labels, before mutating them.
    const double seg_cur = log_prior_chain_segment(j, k, part, space, chains, K_);
    const LocationContext ctx = location_context(k);
    const auto stats_cur = cluster_stats(k, parts[k]);
    const double logw_cur =
        build_location_gaussian(ctx, parts[k], stats_cur).log_evidence();
    const int lk_cur = p_ >= 2 ? fused_alphabet_size(part, space, k) : 0;
    const std::map<std::vector<int>, int> sec_cur = part.second[k];

    labels = prop;
    const double seg_prop = log_prior_chain_segment(j, k, part, space, chains, K_);
    logr += seg_prop - seg_cur;

    if (p_ >= 2) {
        const int lk_prop = fused_alphabet_size(part, space, k);
        std::set<std::vector<int>> new_keys;
        for (const auto& combo : data_.combos)
            new_keys.insert(cell_key(part, k, combo));
        std::map<std::vector<int>, int> sec_prop;
        int fresh_fwd = 0, fresh_rev = 0;
        if (lk_prop != lk_cur) {
            // The fused alphabet changes, so every occupied cell's label is
            // re-proposed uniformly over the new alphabet (the reverse move
            // does the same over the old one). Carrying labels across an
            // alphabet shrink instead would veto the move whenever a kept
            // label fell outside the smaller alphabet, freezing merges.
            for (const auto& key : new_keys)
                sec_prop[key] = static_cast<int>(rng_.uniform_int(lk_prop));
            fresh_fwd = static_cast<int>(new_keys.size());
            fresh_rev = static_cast<int>(sec_cur.size());
        } else {
            // Alphabet preserved: cells keep their labels; only newly
            // occupied keys draw fresh ones, and the reverse move refreshes
            // exactly the keys that vanish.
            for (const auto& key : new_keys) {
                auto it = sec_cur.find(key);
                if (it != sec_cur.end()) {
                    sec_prop[key] = it->second;
                } else {
                    sec_prop[key] = static_cast<int>(rng_.uniform_int(lk_prop));
                    ++fresh_fwd;
                }
            }
            for (const auto& [key, lab] : sec_cur)
                if (!new_keys.count(key)) ++fresh_rev;
        }

        std::vector<long long> counts_cur(lk_cur, 0), counts_prop(lk_prop, 0);
        for (const auto& [key, lab] : sec_cur) ++counts_cur[lab];
        for (const auto& [key, lab] : sec_prop) ++counts_prop[lab];
        logr += log_polya_sequence_mass(counts_prop, chains.alpha_star, lk_prop) -
                log_polya_sequence_mass(counts_cur, chains.alpha_star, lk_cur);
        logr += fresh_fwd * std::log(static_cast<double>(lk_prop)) -
                fresh_rev * std::log(static_cast<double>(lk_cur));
        part.second[k] = std::move(sec_prop);
    }

    LocalPartition cand = derive_partition(part, space, k, data_.combos);
    const auto stats_prop = cluster_stats(k, cand);
    LocationGaussian g_prop = build_location_gaussian(ctx, cand, stats_prop);
    logr += g_prop.log_evidence() - logw_cur;

    if (std::log(rng_.uniform()) <= logr) {
        parts[k] = std::move(cand);
        coef.beta[k] = g_prop.sample(rng_);
        ++acc_partition.accepted;
    } else {
        labels = cur_labels;
        part.second[k] = sec_cur;
    }
}

void Sampler::gibbs_beta(int k) {
    coef.beta[k] =
        build_location_gaussian(location_context(k), parts[k],
                                cluster_stats(k, parts[k]))
            .sample(rng_);
}

void Sampler::update_sigma_beta() {
    double increments = 0.0, sum_sq = 0.0;
    for (int k = 1; k < K_; ++k)
        for (int h = 0; h < parts[k].size(); ++h) {
            NeighborSets nb = neighbor_sets(parts[k], h, &parts[k - 1], nullptr);
            double mu = 0.0;
            for (int hp : nb.pred) mu += coef.beta[k - 1][hp];
            mu /= nb.pred.size();
            double d = coef.beta[k][h] - mu;
            increments += 1.0;
            sum_sq += nb.pred.size() * d * d;
        }
    auto [sigma_sq, nu] = gibbs_update_sigma_beta(increments, sum_sq,
                                                  coef.nu_beta,
                                                  cfg_.hyper.s_sigma, rng_);
    coef.sigma_beta_sq = sigma_sq;
    coef.nu_beta = nu;
}

double Sampler::chain_log_z(int j) const {
    if (!z_cache_[j]) {
        auto lz = log_tilt_normalizer(chains.pi0[j], chains.trans[j],
                                      chains.phi[j], space.x_max[j], K_);
        if (!lz) throw std::runtime_error("tilt normalizer out of exact regime");
        z_cache_[j] = *lz;
    }
    return *z_cache_[j];
}

void Sampler::update_chain(int j) {
    const int z = space.z_max[j];
    const bool exact =
        log_tilt_normalizer(chains.pi0[j], chains.trans[j], chains.phi[j],
                            space.x_max[j], 1)
            .has_value();

    std::vector<long long> init_counts(z, 0);
    for (int lev = 0; lev < space.x_max[j]; ++lev)
        ++init_counts[part.first[j][0][lev]];
    std::vector<std::vector<long long>> trans_counts(
        z, std::vector<long long>(z, 0));
    for (int k = 1; k < K_; ++k)
        for (int lev = 0; lev < space.x_max[j]; ++lev)
            ++trans_counts[part.first[j][k - 1][lev]][part.first[j][k][lev]];

    // Conjugate proposals, accepted against the exact tilted-prior normalizer
    // so the label-chain prior stays coherent with the size tilt.
    auto consider = [&](std::vector<double>& row,
                        const std::vector<long long>& counts,
                        bool is_initial) {
        auto prop = gibbs_update_dirichlet_row(chains.alpha[j], z, counts, rng_);
        ++acc_pi.proposed;
        if (!exact) {
            row = std::move(prop);
            ++acc_pi.accepted;
            return;
        }
        double z_cur = chain_log_z(j);
        std::optional<double> z_prop;
        if (is_initial) {
            z_prop = log_tilt_normalizer(prop, chains.trans[j], chains.phi[j],
                                         space.x_max[j], K_);
        } else {
            std::vector<double> saved = row;
            row = prop;
            z_prop = log_tilt_normalizer(chains.pi0[j], chains.trans[j],
                                         chains.phi[j], space.x_max[j], K_);
            row = std::move(saved);
        }
        if (std::log(rng_.uniform()) <= z_cur - *z_prop) {
            row = std::move(prop);
            z_cache_[j] = *z_prop;
            ++acc_pi.accepted;
        }
    };

    consider(chains.pi0[j], init_counts, true);
    for (int h = 0; h < z; ++h) consider(chains.trans[j][h], trans_counts[h], false);

    auto target = [&](double a) {
        double lp = log_gamma_pdf(a, cfg_.hyper.a_alpha, cfg_.hyper.b_alpha);
        lp += log_dirichlet_pdf(chains.pi0[j], a);
        for (int h = 0; h < z; ++h) lp += log_dirichlet_pdf(chains.trans[j][h], a);
        return lp;
    };
    bool accepted = false;
    chains.alpha[j] = mh_update_log_scale(chains.alpha[j], target,
                                          cfg_.hyper.mh_log_step, rng_, &accepted);
    ++acc_alpha.proposed;
    if (accepted) ++acc_alpha.accepted;
}

void Sampler::update_pi_star(int k) {
    if (p_ < 2) return;
    int lk = fused_alphabet_size(part, space, k);
    std::vector<long long> counts(lk, 0);
    for (const auto& [key, lab] : part.second[k]) ++counts[lab];
    chains.pi_star[k] =
        gibbs_update_dirichlet_row(chains.alpha_star, lk, counts, rng_);
}

void Sampler::update_alpha_star() {
    if (p_ < 2) return;
    auto target = [&](double a) {
        double lp =
            log_gamma_pdf(a, cfg_.hyper.a_alpha_star, cfg_.hyper.b_alpha_star);
        for (int k = 0; k < K_; ++k) lp += log_dirichlet_pdf(chains.pi_star[k], a);
        return lp;
    };
    bool accepted = false;
    chains.alpha_star = mh_update_log_scale(
        chains.alpha_star, target, cfg_.hyper.mh_log_step, rng_, &accepted);
    ++acc_alpha_star.proposed;
    if (accepted) ++acc_alpha_star.accepted;
}

void Sampler::update_phi_step(int j) {
    std::vector<int> ells(K_);
    for (int k = 0; k < K_; ++k) ells[k] = distinct_count(part.first[j][k]);
    const bool exact =
        log_tilt_normalizer(chains.pi0[j], chains.trans[j], chains.phi[j],
                            space.x_max[j], 1)
            .has_value();
    std::function<double(double)> target;
    if (exact) {
        target = [&](double f) {
            auto lz = log_tilt_normalizer(chains.pi0[j], chains.trans[j], f,
                                          space.x_max[j], K_);
            double lp = log_gamma_pdf(f, cfg_.hyper.a_phi, cfg_.hyper.b_phi) - *lz;
            for (int k = 0; k < K_; ++k) lp += -f * ells[k];
            return lp;
        };
    } else {
        target = [&](double f) {
            double lp = log_gamma_pdf(f, cfg_.hyper.a_phi, cfg_.hyper.b_phi);
            for (int k = 0; k < K_; ++k)
                lp += log_prior_partition_size(ells[k], f, space.z_max[j]);
            return lp;
        };
    }
    bool accepted = false;
    chains.phi[j] = mh_update_log_scale(chains.phi[j], target,
                                        cfg_.hyper.mh_log_step, rng_, &accepted);
    ++acc_phi.proposed;
    if (accepted) {
        ++acc_phi.accepted;
        z_cache_[j].reset();
    }
}

void Sampler::update_random_effects() {
    re_sum_sq_ = 0.0;
    re_pen_sq_ = 0.0;
    for (int i = 0; i < data_.num_subjects(); ++i) {
        std::vector<long long> m(K_, 0);
        std::vector<double> s(K_, 0.0);
        if (!cfg_.prior_only)
            for (int ridx : data_.rows_by_subject[i]) {
                const Row& r = data_.rows[ridx];
                ++m[r.time];
                s[r.time] += r.y - fixed_effect(r);
            }
        coef.u[i] = gibbs_update_random_effects(m, s, coef.sigma_eps_sq,
                                                coef.sigma_us, coef.sigma_ua,
                                                penalty_, rng_);
        for (int t = 0; t < K_; ++t) re_sum_sq_ += coef.u[i][t] * coef.u[i][t];
        for (int t = 0; t + 1 < K_; ++t) {
            double d = coef.u[i][t + 1] - coef.u[i][t];
            re_pen_sq_ += d * d;
        }
    }
}

void Sampler::update_sigma_u(bool smoothness) {
    const int n = data_.num_subjects();
    auto target = [&](double sd) {
        double s_us = smoothness ? sd : coef.sigma_us;
        double s_ua = smoothness ? coef.sigma_ua : sd;
        double inv_us = 1.0 / (s_us * s_us), inv_ua = 1.0 / (s_ua * s_ua);
        double logdet = 0.0;
        for (double lam : laplacian_eig_) logdet += std::log(lam * inv_us + inv_ua);
        return log_half_cauchy_pdf(sd, cfg_.hyper.s_sigma) + 0.5 * n * logdet -
               0.5 * (re_pen_sq_ * inv_us + re_sum_sq_ * inv_ua);
    };
    bool accepted = false;
    double& sd = smoothness ? coef.sigma_us : coef.sigma_ua;
    sd = mh_update_log_scale(sd, target, cfg_.hyper.mh_log_step, rng_, &accepted);
    ++acc_sigma_u.proposed;
    if (accepted) ++acc_sigma_u.accepted;
}

void Sampler::update_sigma_eps() {
    long long n = 0;
    double rss = 0.0;
    if (!cfg_.prior_only)
        for (const auto& r : data_.rows) {
            double d = r.y - fixed_effect(r) - coef.u[r.subject][r.time];
            rss += d * d;
            ++n;
        }
    coef.sigma_eps_sq =
        gibbs_update_sigma_eps(cfg_.hyper.a_sigma, cfg_.hyper.b_sigma, n, rss, rng_);
}

void Sampler::sweep() {
    ++cur_iteration_;
    rebuild_combo_stats();
    if (cfg_.update_partitions)
        for (int k = 0; k < K_; ++k)
            for (int j = 0; j < p_; ++j) update_partition(j, k);
    for (int k = 0; k < K_; ++k) gibbs_beta(k);
    if (cfg_.update_variances) update_sigma_beta();
    if (cfg_.update_chain_params)
        for (int j = 0; j < p_; ++j) update_chain(j);
    if (p_ >= 2 && cfg_.update_second_layer) {
        for (int k = 0; k < K_; ++k) update_pi_star(k);
        update_alpha_star();
    }
    if (cfg_.update_phi)
        for (int j = 0; j < p_; ++j) update_phi_step(j);
    if (cfg_.hyper.random_effects) {
        update_random_effects();
        update_sigma_u(true);
        update_sigma_u(false);
    }
    if (cfg_.update_variances) update_sigma_eps();
}

void Sampler::regenerate_responses() {
    double sd = std::sqrt(coef.sigma_eps_sq);
    for (auto& r : data_.rows)
        r.y = fixed_effect(r) + coef.u[r.subject][r.time] + rng_.normal(0.0, sd);
}

Draw Sampler::snapshot() const {
    Draw d;
    d.iteration = cur_iteration_;
    d.first = part.first;
    d.second.resize(K_);
    for (int k = 0; k < K_; ++k)
        d.second[k].assign(part.second[k].begin(), part.second[k].end());
    d.beta = coef.beta;
    d.ell.assign(p_, std::vector<int>(K_));
    for (int j = 0; j < p_; ++j)
        for (int k = 0; k < K_; ++k)
            d.ell[j][k] = distinct_count(part.first[j][k]);
    d.u = coef.u;
    d.pi0 = chains.pi0;
    d.trans = chains.trans;
    d.pi_star = chains.pi_star;
    d.alpha = chains.alpha;
    d.phi = chains.phi;
    d.alpha_star = chains.alpha_star;
    d.sigma_beta_sq = coef.sigma_beta_sq;
    d.nu_beta = coef.nu_beta;
    d.sigma_us = coef.sigma_us;
    d.sigma_ua = coef.sigma_ua;
    d.sigma_eps_sq = coef.sigma_eps_sq;
    return d;
}

StoreMeta Sampler::meta() const {
    StoreMeta m;
    m.seed = cfg_.seed;
    m.iterations = cfg_.hyper.iterations;
    m.burn_in = cfg_.hyper.burn_in;
    m.thin = cfg_.hyper.thin;
    m.num_locations = K_;
    m.num_predictors = p_;
    m.num_subjects = data_.num_subjects();
    m.x_max = space.x_max;
    m.z_max = space.z_max;
    m.combos = data_.combos;
    m.subjects = data_.subject_ids;
    m.random_effects = cfg_.hyper.random_effects;
    m.data_digest = dataset_digest(data_);
    return m;
}

SampleStore Sampler::run() {
    SampleStore store;
    store.meta = meta();
    store.draws.reserve(cfg_.hyper.stored_draws());
    const int total = cfg_.hyper.iterations;
    const int tick = std::max(1, total / 10);
    for (int it = 1; it <= total; ++it) {
        try {
            sweep();
        } catch (const std::exception& e) {
            throw std::runtime_error("iteration " + std::to_string(it) + ": " +
                                     e.what());
        }
        if (it > cfg_.hyper.burn_in &&
            (it - cfg_.hyper.burn_in) % cfg_.hyper.thin == 0)
            store.draws.push_back(snapshot());
        if (cfg_.progress && (it % tick == 0 || it == total))
            std::fprintf(stderr,
                         "iteration %d/%d | accept: partition %.2f, rows %.2f, "
                         "alpha %.2f, phi %.2f, sigma_u %.2f\n",
                         it, total, acc_partition.rate(), acc_pi.rate(),
                         acc_alpha.rate(), acc_phi.rate(), acc_sigma_u.rate());
    }
    return store;
}

}  // namespace lfmm
