// Command-line driver for the lfmm shared library. Everything model-related
// goes through the C API in lfmm.h; this file only handles flags, config-text
// merging, and process exit codes.

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "lfmm.h"

namespace {

std::string read_file_or_die(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::fprintf(stderr, "error: cannot open '%s'\n", path.c_str());
        std::exit(2);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

/// First token of a config line (the key), or empty for blanks/comments.
std::string line_key(const std::string& line) {
    std::string body = line.substr(0, line.find('#'));
    std::size_t eq = body.find('=');
    if (eq == std::string::npos) return "";
    return trim(body.substr(0, eq));
}

/// Replace (or append) `key = value` in flat config text.
void set_key(std::string& text, const std::string& key,
             const std::string& value) {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line))
        if (line_key(line) != key) out += line + "\n";
    out += key + " = " + value + "\n";
    text = std::move(out);
}

std::optional<std::string> get_key(const std::string& text,
                                   const std::string& key) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line_key(line) != key) continue;
        std::string body = line.substr(0, line.find('#'));
        return trim(body.substr(body.find('=') + 1));
    }
    return std::nullopt;
}

int fail_with(lfmm_status status, const std::string& message) {
    std::fprintf(stderr, "error: %s\n", message.c_str());
    return status == LFMM_ERR_IO ? 2 : 1;
}

int fail_with(lfmm_status status) {
    return fail_with(status, lfmm_last_error());
}

std::string chain_path(const std::string& path, int chain) {
    std::size_t slash = path.find_last_of('/');
    std::size_t dot = path.find_last_of('.');
    std::string suffix = "_chain" + std::to_string(chain);
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path + suffix;
    return path.substr(0, dot) + suffix + path.substr(dot);
}

struct DatasetHandle {
    lfmm_dataset* ptr = nullptr;
    ~DatasetHandle() { lfmm_dataset_free(ptr); }
};

struct SamplesHandle {
    lfmm_samples* ptr = nullptr;
    ~SamplesHandle() { lfmm_samples_free(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Longitudinal functional mixed models with time-varying "
                 "local level fusion"};
    app.require_subcommand(1);

    // ---- simulate ----
    auto* sim = app.add_subcommand(
        "simulate", "Generate a benchmark dataset (and optional truth file)");
    std::string sim_config, sim_out, sim_truth;
    unsigned long long sim_seed = 1;
    sim->add_option("--config", sim_config, "Config file with sim_* keys")
        ->check(CLI::ExistingFile);
    sim->add_option("--seed", sim_seed, "Generator seed (default 1)");
    sim->add_option("--out", sim_out, "Output dataset CSV path")->required();
    sim->add_option("--truth-out", sim_truth, "Ground-truth JSON path");

    // ---- fit ----
    auto* fit = app.add_subcommand("fit", "Run MCMC on a dataset");
    std::string fit_data, fit_config, fit_out;
    unsigned long long fit_seed = 0;
    int fit_chains = 0, fit_iterations = 0, fit_burnin = -1, fit_thin = 0;
    bool fit_no_re = false;
    fit->add_option("--data", fit_data, "Input dataset CSV")
        ->required()
        ->check(CLI::ExistingFile);
    fit->add_option("--config", fit_config, "Config file")
        ->check(CLI::ExistingFile);
    auto* fit_seed_opt = fit->add_option("--seed", fit_seed, "Chain seed");
    auto* fit_chains_opt =
        fit->add_option("--chains", fit_chains, "Number of independent chains");
    auto* fit_iter_opt =
        fit->add_option("--iterations", fit_iterations, "Total MCMC sweeps");
    auto* fit_burn_opt =
        fit->add_option("--burnin", fit_burnin, "Discarded initial sweeps");
    auto* fit_thin_opt =
        fit->add_option("--thin", fit_thin, "Keep every thin-th sweep");
    fit->add_flag("--no-random-effects", fit_no_re,
                  "Drop subject-level random effects");
    fit->add_option("--out", fit_out, "Output sample-stream path")->required();

    // ---- summarize ----
    auto* summ = app.add_subcommand(
        "summarize", "Turn a sample stream into summary tables");
    std::string summ_samples, summ_out;
    int summ_predictor = 0;
    std::vector<int> summ_combo;
    double summ_level = 0.95, summ_delta = -1.0, summ_cut = 0.95;
    bool summ_anova = false;
    summ->add_option("--samples", summ_samples, "Sample-stream file")
        ->required()
        ->check(CLI::ExistingFile);
    summ->add_option("--out", summ_out, "Output CSV path")->required();
    summ->add_option("--predictor", summ_predictor,
                     "Predictor index (1-based) for cluster or interval tables");
    summ->add_option("--combo", summ_combo,
                     "Level combination x1,..,xp for a fixed-effect table")
        ->delimiter(',');
    summ->add_option("--level", summ_level,
                     "Credibility level (default 0.95)");
    summ->add_flag("--anova", summ_anova, "Write the ANOVA effect table");
    summ->add_option("--delta", summ_delta,
                     "Interval-null half width; with --predictor, writes the "
                     "interval-test table");
    summ->add_option("--cut", summ_cut,
                     "Rejection threshold on the posterior probability "
                     "(default 0.95)");

    // ---- diagnose ----
    auto* diag = app.add_subcommand(
        "diagnose", "Geweke diagnostics for monitored scalar chains");
    std::string diag_samples, diag_out;
    diag->add_option("--samples", diag_samples, "Sample-stream file")
        ->required()
        ->check(CLI::ExistingFile);
    diag->add_option("--out", diag_out, "Output CSV path")->required();

    // ---- predict ----
    auto* pred = app.add_subcommand(
        "predict", "Posterior-predictive evaluation on held-out rows");
    std::string pred_samples, pred_data, pred_out;
    double pred_level = 0.95;
    unsigned long long pred_seed = 1;
    pred->add_option("--samples", pred_samples, "Sample-stream file")
        ->required()
        ->check(CLI::ExistingFile);
    pred->add_option("--data", pred_data, "Held-out dataset CSV")
        ->required()
        ->check(CLI::ExistingFile);
    pred->add_option("--out", pred_out, "Optional per-row prediction table");
    pred->add_option("--level", pred_level,
                     "Predictive interval level (default 0.95)");
    pred->add_option("--seed", pred_seed, "Predictive noise seed (default 1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (sim->parsed()) {
        std::string cfg =
            sim_config.empty() ? std::string() : read_file_or_die(sim_config);
        lfmm_status s = lfmm_simulate(cfg.c_str(), sim_seed, sim_out.c_str(),
                                      sim_truth.empty() ? nullptr
                                                        : sim_truth.c_str());
        if (s != LFMM_OK) return fail_with(s);
        std::printf("wrote %s\n", sim_out.c_str());
        if (!sim_truth.empty()) std::printf("wrote %s\n", sim_truth.c_str());
        return 0;
    }

    if (fit->parsed()) {
        std::string cfg =
            fit_config.empty() ? std::string() : read_file_or_die(fit_config);
        if (*fit_iter_opt) set_key(cfg, "iterations",
                                   std::to_string(fit_iterations));
        if (*fit_burn_opt) set_key(cfg, "burnin", std::to_string(fit_burnin));
        if (*fit_thin_opt) set_key(cfg, "thin", std::to_string(fit_thin));
        if (fit_no_re) set_key(cfg, "random_effects", "false");

        unsigned long long base_seed = 1;
        if (*fit_seed_opt)
            base_seed = fit_seed;
        else if (auto v = get_key(cfg, "seed"))
            base_seed = std::stoull(*v);
        int chains = 1;
        if (*fit_chains_opt)
            chains = fit_chains;
        else if (auto v = get_key(cfg, "chains"))
            chains = std::stoi(*v);
        if (chains < 1) {
            std::fprintf(stderr, "error: --chains must be at least 1\n");
            return 2;
        }

        DatasetHandle data;
        lfmm_status s = lfmm_dataset_open(fit_data.c_str(), 1, &data.ptr);
        if (s != LFMM_OK) return fail_with(s);

        if (chains == 1) {
            int draws = 0;
            s = lfmm_fit(data.ptr, cfg.c_str(), base_seed, fit_out.c_str(),
                         &draws);
            if (s != LFMM_OK) return fail_with(s);
            std::printf("stored %d draws in %s\n", draws, fit_out.c_str());
            return 0;
        }

        struct ChainResult {
            lfmm_status status = LFMM_OK;
            std::string message, path;
            int draws = 0;
        };
        std::vector<ChainResult> results(chains);
        std::vector<std::thread> workers;
        for (int c = 0; c < chains; ++c) {
            results[c].path = chain_path(fit_out, c + 1);
            workers.emplace_back([&, c] {
                unsigned long long seed = lfmm_derive_seed(base_seed, c + 1);
                results[c].status = lfmm_fit(data.ptr, cfg.c_str(), seed,
                                             results[c].path.c_str(),
                                             &results[c].draws);
                if (results[c].status != LFMM_OK)
                    results[c].message = lfmm_last_error();
            });
        }
        for (auto& w : workers) w.join();
        for (int c = 0; c < chains; ++c) {
            if (results[c].status != LFMM_OK)
                return fail_with(results[c].status,
                                 "chain " + std::to_string(c + 1) + ": " +
                                     results[c].message);
            std::printf("chain %d: stored %d draws in %s\n", c + 1,
                        results[c].draws, results[c].path.c_str());
        }
        return 0;
    }

    if (summ->parsed()) {
        SamplesHandle samples;
        lfmm_status s = lfmm_samples_open(summ_samples.c_str(), &samples.ptr);
        if (s != LFMM_OK) return fail_with(s);
        if (!summ_combo.empty()) {
            s = lfmm_summarize_fixed_effect(
                samples.ptr, summ_combo.data(),
                static_cast<int>(summ_combo.size()), summ_level,
                summ_out.c_str());
        } else if (summ_anova) {
            s = lfmm_summarize_anova(samples.ptr, summ_out.c_str());
        } else if (summ_delta >= 0.0) {
            if (summ_predictor < 1) {
                std::fprintf(stderr,
                             "error: --delta needs --predictor to test\n");
                return 2;
            }
            s = lfmm_interval_tests(samples.ptr, summ_predictor, summ_delta,
                                    summ_cut, summ_out.c_str());
        } else if (summ_predictor >= 1) {
            s = lfmm_summarize_clusters(samples.ptr, summ_predictor,
                                        summ_out.c_str());
        } else {
            std::fprintf(stderr,
                         "error: choose a summary: --predictor, --combo, "
                         "--anova, or --predictor with --delta\n");
            return 2;
        }
        if (s != LFMM_OK) return fail_with(s);
        std::printf("wrote %s\n", summ_out.c_str());
        return 0;
    }

    if (diag->parsed()) {
        SamplesHandle samples;
        lfmm_status s = lfmm_samples_open(diag_samples.c_str(), &samples.ptr);
        if (s != LFMM_OK) return fail_with(s);
        s = lfmm_diagnose(samples.ptr, diag_out.c_str());
        if (s != LFMM_OK) return fail_with(s);
        std::printf("wrote %s\n", diag_out.c_str());
        return 0;
    }

    if (pred->parsed()) {
        SamplesHandle samples;
        lfmm_status s = lfmm_samples_open(pred_samples.c_str(), &samples.ptr);
        if (s != LFMM_OK) return fail_with(s);
        DatasetHandle heldout;
        s = lfmm_dataset_open(pred_data.c_str(), 0, &heldout.ptr);
        if (s != LFMM_OK) return fail_with(s);
        double rmse = 0, coverage = 0, width = 0;
        s = lfmm_predict(samples.ptr, heldout.ptr, pred_level, pred_seed,
                         pred_out.empty() ? nullptr : pred_out.c_str(), &rmse,
                         &coverage, &width);
        if (s != LFMM_OK) return fail_with(s);
        std::printf("rmse %.6f\ncoverage %.6f\nmean_width %.6f\n", rmse,
                    coverage, width);
        if (!pred_out.empty()) std::printf("wrote %s\n", pred_out.c_str());
        return 0;
    }

    return 2;
}
