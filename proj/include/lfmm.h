/* lfmm -- longitudinal functional mixed models with hidden Markov tensor
 * partitions.
 *
 * C interface to the shared library. All functions return a status code;
 * lfmm_last_error() describes the most recent failure on the calling thread.
 * Handles are opaque and must be released with the matching _free call.
 * Indices crossing this boundary are 1-based (predictors, levels, times).
 */
#ifndef LFMM_H
#define LFMM_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lfmm_status {
    LFMM_OK = 0,
    LFMM_ERR_INVALID_ARGUMENT = 1, /* bad inputs or out-of-range arguments */
    LFMM_ERR_PARSE = 2,            /* malformed file or config content */
    LFMM_ERR_IO = 3,               /* file open/write failure */
    LFMM_ERR_STATE = 4             /* numerical or internal state failure */
} lfmm_status;

/* Message for the most recent error on this thread; never NULL. */
const char* lfmm_last_error(void);

typedef struct lfmm_dataset lfmm_dataset;
typedef struct lfmm_samples lfmm_samples;

/* ---- datasets ---------------------------------------------------------- */

/* Load a long-format CSV (header subject,trial,time,y,x1..xp). With
 * require_coverage nonzero, every level of every predictor must be observed
 * at every time index (required for fitting; pass 0 for held-out grids). */
lfmm_status lfmm_dataset_open(const char* path, int require_coverage,
                              lfmm_dataset** out);
void lfmm_dataset_free(lfmm_dataset* data);

lfmm_status lfmm_dataset_info(const lfmm_dataset* data, int* num_rows,
                              int* num_subjects, int* num_times,
                              int* num_predictors);

lfmm_status lfmm_dataset_write(const lfmm_dataset* data, const char* path);

/* ---- synthetic data ---------------------------------------------------- */

/* Generate the benchmark scenario controlled by sim_* config keys; writes
 * the dataset CSV and, when truth_path is non-NULL, the ground truth JSON. */
lfmm_status lfmm_simulate(const char* config_text, unsigned long long seed,
                          const char* data_path, const char* truth_path);

/* ---- fitting ----------------------------------------------------------- */

/* Run one MCMC chain on the dataset with the given flat key/value config
 * text and seed; writes the sample stream to samples_path. stored_draws
 * (optional) receives the number of retained draws. */
lfmm_status lfmm_fit(const lfmm_dataset* data, const char* config_text,
                     unsigned long long seed, const char* samples_path,
                     int* stored_draws);

/* ---- samples ----------------------------------------------------------- */

lfmm_status lfmm_samples_open(const char* path, lfmm_samples** out);
void lfmm_samples_free(lfmm_samples* samples);

lfmm_status lfmm_samples_info(const lfmm_samples* samples, int* num_draws,
                              int* num_locations, int* num_predictors,
                              int* num_subjects);

/* ---- summaries (CSV tables: quantity,k,combination,mean,lower,upper) --- */

/* Per-location cluster-count probabilities for one predictor (1-based). */
lfmm_status lfmm_summarize_clusters(const lfmm_samples* samples, int predictor,
                                    const char* out_path);

/* Pointwise mean and credible band of the coefficient curve at one level
 * combination (array of 1-based levels, one per predictor). */
lfmm_status lfmm_summarize_fixed_effect(const lfmm_samples* samples,
                                        const int* combo, int combo_len,
                                        double level, const char* out_path);

/* Equal-weight functional ANOVA of the posterior-mean surface: overall mean,
 * per-level main effects, pairwise interactions. */
lfmm_status lfmm_summarize_anova(const lfmm_samples* samples,
                                 const char* out_path);

/* Posterior probabilities that two levels' main effects differ by more than
 * delta, for every level pair of one predictor (1-based). */
lfmm_status lfmm_interval_tests(const lfmm_samples* samples, int predictor,
                                double delta, double cut,
                                const char* out_path);

/* ---- diagnostics and prediction ---------------------------------------- */

/* Geweke z and p per monitored scalar chain (CSV: quantity,z,p). */
lfmm_status lfmm_diagnose(const lfmm_samples* samples, const char* out_path);

/* Posterior-predictive evaluation against held-out rows with true responses.
 * Writes a per-row table and reports RMSE of the predictive mean, empirical
 * coverage, and mean interval width through the optional out-params. */
lfmm_status lfmm_predict(const lfmm_samples* samples,
                         const lfmm_dataset* heldout, double level,
                         unsigned long long seed, const char* out_path,
                         double* rmse, double* coverage, double* mean_width);

/* Derive the seed for chain `index` from a base seed (stable mixing). */
unsigned long long lfmm_derive_seed(unsigned long long base,
                                    unsigned long long index);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LFMM_H */
