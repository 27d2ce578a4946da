#include "synthetic.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "sampler.hpp"
#include "state.hpp"

namespace lfmm {

namespace {

constexpr int kNumTimes = 20;

const std::vector<double> kBeta1 = {5,    5, 5,    5,   6, 7.25, 8.5,
                                    9,    9.25, 9.5, 9.5, 9.25, 9,
                                    8.5,  7.25, 6,   5,   5,    5, 5};
const std::vector<double> kBeta2 = {5,    5, 5,    5,   4, 2.75, 1.5,
                                    1,    0.75, 0.5, 0.5, 0.75, 1,
                                    1.5,  2.75, 4,   5,   5,    5, 5};
const std::vector<double> kBeta3 = {5,    5,     5,     5,    6,    7.25, 8.5,
                                    10.5, 12,    13.25, 13.75, 13.75, 13.5,
                                    13,   12.5,  12,    11.25, 10.5,  9.5, 8.5};

bool first_split(int k) { return k + 1 >= 8; }
bool third_split(int k) { return k + 1 >= 5 && k + 1 <= 16; }

}  // namespace

int synthetic_num_times() { return kNumTimes; }
const std::vector<double>& synthetic_beta1() { return kBeta1; }
const std::vector<double>& synthetic_beta2() { return kBeta2; }
const std::vector<double>& synthetic_beta3() { return kBeta3; }

SyntheticConfig SyntheticConfig::from_config(const Config& cfg) {
    SyntheticConfig sc;
    sc.num_subjects = cfg.get_int("sim_num_subjects", sc.num_subjects);
    sc.num_trials = cfg.get_int("sim_num_trials", sc.num_trials);
    sc.levels = cfg.get_int_list("sim_levels", sc.levels);
    sc.sigma_eps_sq = cfg.get_double("sim_sigma_eps_sq", sc.sigma_eps_sq);
    sc.sigma_us_sq = cfg.get_double("sim_sigma_us_sq", sc.sigma_us_sq);
    sc.sigma_ua_sq = cfg.get_double("sim_sigma_ua_sq", sc.sigma_ua_sq);
    sc.validate();
    return sc;
}

void SyntheticConfig::validate() const {
    if (num_subjects < 1)
        throw std::invalid_argument("sim_num_subjects must be positive");
    if (num_trials < 1)
        throw std::invalid_argument("sim_num_trials must be positive");
    if (levels.empty())
        throw std::invalid_argument("sim_levels must name at least one predictor");
    for (int m : levels)
        if (m < 2)
            throw std::invalid_argument(
                "every predictor needs at least two levels");
        else if (m > num_subjects)
            throw std::invalid_argument(
                "more levels than subjects: coverage is impossible");
    if (sigma_eps_sq < 0 || sigma_us_sq < 0 || sigma_ua_sq < 0)
        throw std::invalid_argument("variances must be nonnegative");
    if ((sigma_us_sq == 0) != (sigma_ua_sq == 0))
        throw std::invalid_argument(
            "random-effect variances must be both zero or both positive");
}

double SyntheticTruth::truth_at(int k, const std::vector<int>& levels) const {
    if (first_split(k) && levels[0] == 2) return beta3[k];
    if (third_split(k) && levels.size() >= 3 && levels[2] == 3) return beta2[k];
    return beta1[k];
}

std::pair<Dataset, SyntheticTruth> generate_synthetic(
    const SyntheticConfig& cfg, Rng& rng) {
    cfg.validate();
    const int p = static_cast<int>(cfg.levels.size());
    const int n = cfg.num_subjects;

    SyntheticTruth truth;
    truth.beta1 = kBeta1;
    truth.beta2 = kBeta2;
    truth.beta3 = kBeta3;
    truth.sigma_eps_sq = cfg.sigma_eps_sq;
    truth.sigma_us_sq = cfg.sigma_us_sq;
    truth.sigma_ua_sq = cfg.sigma_ua_sq;
    truth.ell.assign(p, std::vector<int>(kNumTimes, 1));
    for (int k = 0; k < kNumTimes; ++k) {
        if (first_split(k)) truth.ell[0][k] = 2;
        if (p >= 3 && cfg.levels[2] >= 3 && third_split(k)) truth.ell[2][k] = 2;
    }

    // Uniform per-subject levels, redrawn until every level of every
    // predictor occurs (the fitting contract needs full level coverage).
    for (;;) {
        truth.subject_levels.assign(n, std::vector<int>(p));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < p; ++j)
                truth.subject_levels[i][j] =
                    1 + static_cast<int>(rng.uniform_int(cfg.levels[j]));
        bool covered = true;
        for (int j = 0; j < p && covered; ++j) {
            std::vector<char> seen(cfg.levels[j], 0);
            for (int i = 0; i < n; ++i) seen[truth.subject_levels[i][j] - 1] = 1;
            for (char s : seen) covered = covered && s;
        }
        if (covered) break;
    }

    truth.u.assign(n, std::vector<double>(kNumTimes, 0.0));
    if (truth.sigma_us_sq > 0.0) {
        const Tridiag penalty = first_difference_penalty(kNumTimes);
        const std::vector<long long> zeros(kNumTimes, 0);
        const std::vector<double> zero_b(kNumTimes, 0.0);
        for (int i = 0; i < n; ++i)
            truth.u[i] = gibbs_update_random_effects(
                zeros, zero_b, 1.0, std::sqrt(truth.sigma_us_sq),
                std::sqrt(truth.sigma_ua_sq), penalty, rng);
    }

    Dataset data;
    data.num_predictors = p;
    const double noise_sd = std::sqrt(cfg.sigma_eps_sq);
    for (int i = 0; i < n; ++i) {
        data.subject_ids.push_back("s" + std::to_string(i + 1));
        for (int t = 0; t < kNumTimes; ++t)
            for (int trial = 1; trial <= cfg.num_trials; ++trial) {
                Row r;
                r.subject = i;
                r.trial = trial;
                r.time = t;
                r.levels = truth.subject_levels[i];
                r.y = truth.truth_at(t, r.levels) + truth.u[i][t];
                if (noise_sd > 0.0) r.y += rng.normal(0.0, noise_sd);
                data.rows.push_back(std::move(r));
            }
    }
    data.finalize();
    return {std::move(data), std::move(truth)};
}

std::string truth_to_json(const SyntheticTruth& truth) {
    nlohmann::ordered_json j;
    j["beta1"] = truth.beta1;
    j["beta2"] = truth.beta2;
    j["beta3"] = truth.beta3;
    j["ell"] = truth.ell;
    j["sigma_eps_sq"] = truth.sigma_eps_sq;
    j["sigma_us_sq"] = truth.sigma_us_sq;
    j["sigma_ua_sq"] = truth.sigma_ua_sq;
    j["subject_levels"] = truth.subject_levels;
    j["u"] = truth.u;
    return j.dump() + "\n";
}

void write_truth(const SyntheticTruth& truth, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open truth file '" + path + "' for writing");
    out << truth_to_json(truth);
    if (!out) throw IoError("failed writing truth file '" + path + "'");
}

}  // namespace lfmm
