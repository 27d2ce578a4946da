#include "state.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace lfmm {

void Hyperparameters::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument(std::string(name) + " must be positive");
    };
    positive(s_sigma, "s_sigma");
    positive(a_sigma, "a_sigma");
    positive(b_sigma, "b_sigma");
    positive(a_alpha, "a_alpha");
    positive(b_alpha, "b_alpha");
    positive(a_alpha_star, "a_alpha_star");
    positive(b_alpha_star, "b_alpha_star");
    positive(a_phi, "a_phi");
    positive(b_phi, "b_phi");
    positive(mh_log_step, "mh_log_step");
    if (anchor_var && !(*anchor_var > 0.0))
        throw std::invalid_argument("anchor_var must be positive");
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (burn_in < 0 || burn_in >= iterations)
        throw std::invalid_argument("burn-in must lie in [0, iterations)");
    if (thin < 1) throw std::invalid_argument("thin must be >= 1");
    if ((iterations - burn_in) % thin != 0)
        throw std::invalid_argument(
            "iterations - burn-in must be a multiple of thin");
}

Hyperparameters Hyperparameters::from_config(const Config& cfg) {
    Hyperparameters h;
    h.s_sigma = cfg.get_double("s_sigma", h.s_sigma);
    h.a_sigma = cfg.get_double("a_sigma", h.a_sigma);
    h.b_sigma = cfg.get_double("b_sigma", h.b_sigma);
    h.a_alpha = cfg.get_double("a_alpha", h.a_alpha);
    h.b_alpha = cfg.get_double("b_alpha", h.b_alpha);
    h.a_alpha_star = cfg.get_double("a_alpha_star", h.a_alpha_star);
    h.b_alpha_star = cfg.get_double("b_alpha_star", h.b_alpha_star);
    h.a_phi = cfg.get_double("a_phi", h.a_phi);
    h.b_phi = cfg.get_double("b_phi", h.b_phi);
    if (cfg.has("anchor_mean")) h.anchor_mean = cfg.get_double("anchor_mean", 0.0);
    if (cfg.has("anchor_var")) h.anchor_var = cfg.get_double("anchor_var", 0.0);
    h.mh_log_step = cfg.get_double("mh_log_step", h.mh_log_step);
    h.iterations = cfg.get_int("iterations", h.iterations);
    h.burn_in = cfg.get_int("burnin", h.burn_in);
    h.thin = cfg.get_int("thin", h.thin);
    h.random_effects = cfg.get_bool("random_effects", h.random_effects);
    h.validate();
    return h;
}

void CovariateSpace::validate() const {
    if (num_predictors < 1)
        throw std::invalid_argument("at least one predictor is required");
    if (static_cast<int>(x_max.size()) != num_predictors ||
        static_cast<int>(z_max.size()) != num_predictors)
        throw std::invalid_argument("covariate space arrays disagree with p");
    for (int j = 0; j < num_predictors; ++j) {
        if (x_max[j] < 2)
            throw std::invalid_argument("predictor x" + std::to_string(j + 1) +
                                        " needs at least two levels");
        if (z_max[j] < 2 || z_max[j] > x_max[j])
            throw std::invalid_argument("label alphabet for x" +
                                        std::to_string(j + 1) +
                                        " must lie in [2, x_max]");
    }
}

CovariateSpace CovariateSpace::from_dataset(const Dataset& data, int z_max_cap) {
    CovariateSpace space;
    space.num_predictors = data.num_predictors;
    space.x_max = data.x_max;
    space.z_max = data.x_max;
    if (z_max_cap > 0)
        for (auto& z : space.z_max) z = std::min(z, z_max_cap);
    space.validate();
    return space;
}

int distinct_count(const std::vector<int>& labels) {
    std::set<int> s(labels.begin(), labels.end());
    return static_cast<int>(s.size());
}

int fused_alphabet_size(const PartitionState& part, const CovariateSpace& space,
                        int k) {
    int l = 1;
    for (int j = 0; j < space.num_predictors; ++j)
        l *= distinct_count(part.first[j][k]);
    return l;
}

std::vector<int> cell_key(const PartitionState& part, int k,
                          const std::vector<int>& combo_levels) {
    std::vector<int> key(combo_levels.size());
    for (size_t j = 0; j < combo_levels.size(); ++j)
        key[j] = part.first[j][k][combo_levels[j] - 1];
    return key;
}

LocalPartition derive_partition(const PartitionState& part,
                                const CovariateSpace& space, int k,
                                const std::vector<std::vector<int>>& combos) {
    const bool fused_layer = space.num_predictors >= 2;
    // Composed label per combo; combos are lex-sorted so the first combo seen
    // with a given label is the cell's lexicographically smallest member.
    std::map<std::vector<int>, int> label_to_cell;  // (key or fused label) -> h
    LocalPartition out;
    out.cell_of_combo.resize(combos.size());
    for (int c = 0; c < static_cast<int>(combos.size()); ++c) {
        std::vector<int> key = cell_key(part, k, combos[c]);
        std::vector<int> composed;
        if (fused_layer) {
            auto it = part.second[k].find(key);
            if (it == part.second[k].end())
                throw std::runtime_error(
                    "occupied core cell has no fused label at location " +
                    std::to_string(k + 1));
            composed = {it->second};
        } else {
            composed = key;
        }
        auto [it, fresh] =
            label_to_cell.try_emplace(composed, static_cast<int>(out.members.size()));
        if (fresh) out.members.emplace_back();
        out.members[it->second].push_back(c);
        out.cell_of_combo[c] = it->second;
    }
    return out;
}

double log_prior_partition_size(int l, double phi, int support) {
    if (support < 1) throw std::invalid_argument("partition-size support empty");
    if (l < 1 || l > support)
        throw std::invalid_argument("partition size " + std::to_string(l) +
                                    " outside {1.." + std::to_string(support) + "}");
    // log sum_{m=1..support} exp(-phi m), stabilized by the largest term.
    double amax = std::max(-phi, -phi * support);
    double s = 0.0;
    for (int m = 1; m <= support; ++m) s += std::exp(-phi * m - amax);
    return -phi * l - (amax + std::log(s));
}

double log_prior_chain_segment(int j, int k, const PartitionState& part,
                               const CovariateSpace& space,
                               const ChainParameters& chains, int num_locations) {
    double lp = 0.0;
    for (int lev = 0; lev < space.x_max[j]; ++lev) {
        int here = part.first[j][k][lev];
        if (k == 0) {
            lp += std::log(chains.pi0[j][here]);
        } else {
            int prev = part.first[j][k - 1][lev];
            lp += std::log(chains.trans[j][prev][here]);
        }
        if (k + 1 < num_locations) {
            int next = part.first[j][k + 1][lev];
            lp += std::log(chains.trans[j][here][next]);
        }
    }
    return lp;
}

Tridiag first_difference_penalty(int num_locations) {
    Tridiag p;
    p.diag.assign(num_locations, 2.0);
    if (!p.diag.empty()) {
        p.diag.front() = 1.0;
        p.diag.back() = 1.0;
    }
    if (num_locations == 1) p.diag[0] = 0.0;
    p.off.assign(std::max(0, num_locations - 1), -1.0);
    return p;
}

}  // namespace lfmm
