#include "lfmm.h"

#include <exception>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "data.hpp"
#include "posterior.hpp"
#include "rng.hpp"
#include "sampler.hpp"
#include "samples_io.hpp"
#include "synthetic.hpp"
#include "util.hpp"

using namespace lfmm;

struct lfmm_dataset {
    Dataset data;
};

struct lfmm_samples {
    SampleStore store;
};

namespace {

thread_local std::string g_last_error = "no error";

lfmm_status fail(lfmm_status code, const std::string& message) {
    g_last_error = message;
    return code;
}

/// Runs `body`, translating exceptions to status codes.
template <typename F>
lfmm_status guarded(F&& body) {
    try {
        body();
        return LFMM_OK;
    } catch (const IoError& e) {
        return fail(LFMM_ERR_IO, e.what());
    } catch (const ParseError& e) {
        return fail(LFMM_ERR_PARSE, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(LFMM_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::exception& e) {
        return fail(LFMM_ERR_STATE, e.what());
    } catch (...) {
        return fail(LFMM_ERR_STATE, "unknown failure");
    }
}

lfmm_status require(bool ok, const char* message) {
    return ok ? LFMM_OK : fail(LFMM_ERR_INVALID_ARGUMENT, message);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw IoError("failed writing '" + path + "'");
}

/// quantity,k,combination,mean,lower,upper rows; numbers via shortest
/// round-trip formatting so outputs are byte-stable.
class SummaryTable {
public:
    void add(const std::string& quantity, const std::string& k,
             const std::string& combo, double mean, const std::string& lower,
             const std::string& upper) {
        rows_ += quantity + "," + k + "," + combo + "," + format_double(mean) +
                 "," + lower + "," + upper + "\n";
    }
    void add(const std::string& quantity, int k, const std::string& combo,
             double mean, double lower, double upper) {
        add(quantity, std::to_string(k), combo, mean, format_double(lower),
            format_double(upper));
    }
    std::string text() const {
        return "quantity,k,combination,mean,lower,upper\n" + rows_;
    }

private:
    std::string rows_;
};

std::string join_levels(const std::vector<int>& combo) {
    std::string s;
    for (std::size_t j = 0; j < combo.size(); ++j) {
        if (j) s += '-';
        s += std::to_string(combo[j]);
    }
    return s;
}

}  // namespace

extern "C" {

const char* lfmm_last_error(void) { return g_last_error.c_str(); }

lfmm_status lfmm_dataset_open(const char* path, int require_coverage,
                              lfmm_dataset** out) {
    if (auto s = require(path && out, "path and out must be non-NULL"))
        return s;
    *out = nullptr;
    return guarded([&] {
        auto handle = new lfmm_dataset{load_dataset(path, require_coverage != 0)};
        *out = handle;
    });
}

void lfmm_dataset_free(lfmm_dataset* data) { delete data; }

lfmm_status lfmm_dataset_info(const lfmm_dataset* data, int* num_rows,
                              int* num_subjects, int* num_times,
                              int* num_predictors) {
    if (auto s = require(data != nullptr, "dataset handle is NULL")) return s;
    if (num_rows) *num_rows = data->data.num_rows();
    if (num_subjects) *num_subjects = data->data.num_subjects();
    if (num_times) *num_times = data->data.num_times;
    if (num_predictors) *num_predictors = data->data.num_predictors;
    return LFMM_OK;
}

lfmm_status lfmm_dataset_write(const lfmm_dataset* data, const char* path) {
    if (auto s = require(data && path, "dataset handle and path must be non-NULL"))
        return s;
    return guarded([&] { write_dataset(data->data, path); });
}

lfmm_status lfmm_simulate(const char* config_text, unsigned long long seed,
                          const char* data_path, const char* truth_path) {
    if (auto s = require(config_text && data_path,
                         "config text and data path must be non-NULL"))
        return s;
    return guarded([&] {
        Config cfg = Config::parse(config_text);
        SyntheticConfig sc = SyntheticConfig::from_config(cfg);
        Rng rng(seed);
        auto [data, truth] = generate_synthetic(sc, rng);
        write_dataset(data, data_path);
        if (truth_path) write_truth(truth, truth_path);
    });
}

lfmm_status lfmm_fit(const lfmm_dataset* data, const char* config_text,
                     unsigned long long seed, const char* samples_path,
                     int* stored_draws) {
    if (auto s = require(data && config_text && samples_path,
                         "dataset, config, and output path must be non-NULL"))
        return s;
    return guarded([&] {
        Config cfg = Config::parse(config_text);
        SamplerConfig sc = SamplerConfig::from_config(cfg);
        sc.seed = seed;
        Sampler sampler(data->data, sc);
        SampleStore store = sampler.run();
        write_samples(store, samples_path);
        if (stored_draws) *stored_draws = static_cast<int>(store.draws.size());
    });
}

lfmm_status lfmm_samples_open(const char* path, lfmm_samples** out) {
    if (auto s = require(path && out, "path and out must be non-NULL"))
        return s;
    *out = nullptr;
    return guarded([&] { *out = new lfmm_samples{read_samples(path)}; });
}

void lfmm_samples_free(lfmm_samples* samples) { delete samples; }

lfmm_status lfmm_samples_info(const lfmm_samples* samples, int* num_draws,
                              int* num_locations, int* num_predictors,
                              int* num_subjects) {
    if (auto s = require(samples != nullptr, "samples handle is NULL")) return s;
    if (num_draws) *num_draws = static_cast<int>(samples->store.draws.size());
    if (num_locations) *num_locations = samples->store.meta.num_locations;
    if (num_predictors) *num_predictors = samples->store.meta.num_predictors;
    if (num_subjects) *num_subjects = samples->store.meta.num_subjects;
    return LFMM_OK;
}

lfmm_status lfmm_summarize_clusters(const lfmm_samples* samples, int predictor,
                                    const char* out_path) {
    if (auto s = require(samples && out_path,
                         "samples handle and output path must be non-NULL"))
        return s;
    return guarded([&] {
        auto probs = cluster_count_probabilities(samples->store, predictor - 1);
        SummaryTable table;
        std::string q = "cluster_count_prob_x" + std::to_string(predictor);
        for (std::size_t k = 0; k < probs.size(); ++k)
            for (std::size_t c = 0; c < probs[k].size(); ++c)
                table.add(q, std::to_string(k + 1), std::to_string(c + 1),
                          probs[k][c], "", "");
        write_text(out_path, table.text());
    });
}

lfmm_status lfmm_summarize_fixed_effect(const lfmm_samples* samples,
                                        const int* combo, int combo_len,
                                        double level, const char* out_path) {
    if (auto s = require(samples && combo && out_path,
                         "samples, combination, and path must be non-NULL"))
        return s;
    return guarded([&] {
        std::vector<int> levels(combo, combo + combo_len);
        CurveSummary cs = fixed_effect_summary(samples->store, levels, level);
        SummaryTable table;
        std::string id = join_levels(levels);
        for (std::size_t k = 0; k < cs.mean.size(); ++k)
            table.add("fixed_effect", static_cast<int>(k + 1), id, cs.mean[k],
                      cs.lower[k], cs.upper[k]);
        write_text(out_path, table.text());
    });
}

lfmm_status lfmm_summarize_anova(const lfmm_samples* samples,
                                 const char* out_path) {
    if (auto s = require(samples && out_path,
                         "samples handle and output path must be non-NULL"))
        return s;
    return guarded([&] {
        CurveSet mean_curves = expand_mean_curves(samples->store);
        EffectDecomposition dec = anova_effects(mean_curves);
        SummaryTable table;
        for (std::size_t k = 0; k < dec.overall_mean.size(); ++k)
            table.add("overall_mean", std::to_string(k + 1), "",
                      dec.overall_mean[k], "", "");
        for (std::size_t j = 0; j < dec.main_effects.size(); ++j)
            for (std::size_t lev = 0; lev < dec.main_effects[j].size(); ++lev) {
                std::string q = "main_x" + std::to_string(j + 1);
                std::string combo = std::to_string(lev + 1);
                for (std::size_t k = 0; k < dec.main_effects[j][lev].size(); ++k)
                    table.add(q, std::to_string(k + 1), combo,
                              dec.main_effects[j][lev][k], "", "");
            }
        for (std::size_t pidx = 0; pidx < dec.pairs.size(); ++pidx) {
            auto [j1, j2] = dec.pairs[pidx];
            std::string q = "interaction_x" + std::to_string(j1 + 1) + "_x" +
                            std::to_string(j2 + 1);
            const auto& inter = dec.interactions[pidx];
            for (std::size_t l1 = 0; l1 < inter.size(); ++l1)
                for (std::size_t l2 = 0; l2 < inter[l1].size(); ++l2) {
                    std::string combo = std::to_string(l1 + 1) + "-" +
                                        std::to_string(l2 + 1);
                    for (std::size_t k = 0; k < inter[l1][l2].size(); ++k)
                        table.add(q, std::to_string(k + 1), combo,
                                  inter[l1][l2][k], "", "");
                }
        }
        write_text(out_path, table.text());
    });
}

lfmm_status lfmm_interval_tests(const lfmm_samples* samples, int predictor,
                                double delta, double cut,
                                const char* out_path) {
    if (auto s = require(samples && out_path,
                         "samples handle and output path must be non-NULL"))
        return s;
    return guarded([&] {
        auto tests = pairwise_interval_tests(samples->store, predictor - 1,
                                             {delta}, cut);
        SummaryTable table;
        std::string q = "interval_test_x" + std::to_string(predictor);
        for (const auto& t : tests) {
            std::string combo = std::to_string(t.level_a) + "v" +
                                std::to_string(t.level_b);
            for (std::size_t k = 0; k < t.reject_prob.size(); ++k)
                table.add(q, std::to_string(k + 1), combo, t.reject_prob[k],
                          "", t.reject[k] ? "reject" : "keep");
        }
        write_text(out_path, table.text());
    });
}

lfmm_status lfmm_diagnose(const lfmm_samples* samples, const char* out_path) {
    if (auto s = require(samples && out_path,
                         "samples handle and output path must be non-NULL"))
        return s;
    return guarded([&] {
        auto chains = monitored_scalars(samples->store);
        // The reporting surface accepts short exploratory runs; ten draws is
        // the smallest chain the segment/batch construction still supports.
        constexpr int kDiagMinDraws = 10;
        std::string text = "quantity,z,p\n";
        for (const auto& [name, chain] : chains) {
            GewekeResult g = geweke_diagnostic(chain, 0.1, 0.5, kDiagMinDraws);
            text += name + "," + format_double(g.z) + "," + format_double(g.p) +
                    "\n";
        }
        write_text(out_path, text);
    });
}

lfmm_status lfmm_predict(const lfmm_samples* samples,
                         const lfmm_dataset* heldout, double level,
                         unsigned long long seed, const char* out_path,
                         double* rmse, double* coverage, double* mean_width) {
    if (auto s = require(samples && heldout,
                         "samples and held-out handles must be non-NULL"))
        return s;
    return guarded([&] {
        Rng rng(seed);
        PredictiveSummary ps =
            posterior_predictive(samples->store, heldout->data, level, rng);
        if (out_path) {
            SummaryTable table;
            for (std::size_t r = 0; r < ps.pred_mean.size(); ++r) {
                const Row& row = heldout->data.rows[r];
                std::string combo =
                    heldout->data.subject_ids[row.subject] + ":" +
                    join_levels(row.levels);
                table.add("prediction", static_cast<int>(row.time + 1), combo,
                          ps.pred_mean[r], ps.pred_lower[r], ps.pred_upper[r]);
            }
            write_text(out_path, table.text());
        }
        if (rmse) *rmse = ps.rmse;
        if (coverage) *coverage = ps.coverage;
        if (mean_width) *mean_width = ps.mean_width;
    });
}

unsigned long long lfmm_derive_seed(unsigned long long base,
                                    unsigned long long index) {
    return Rng::derive_seed(base, index);
}

}  // extern "C"
