#pragma once

#include <map>
#include <string>
#include <vector>

#include "config.hpp"

namespace lfmm {

/// One longitudinal observation. Times are stored 0-based internally;
/// covariate levels keep their external 1-based coding.
struct Row {
    int subject = 0;          // index into Dataset::subject_ids
    int trial = 0;            // 1-based repeat index within subject
    int time = 0;             // 0-based time index (external t = time + 1)
    double y = 0.0;
    std::vector<int> levels;  // x_1..x_p, each in 1..x_max[j]
    int combo = 0;            // index into Dataset::combos
};

/// Long-format longitudinal dataset with derived index structures.
struct Dataset {
    std::vector<std::string> subject_ids;  // order of first appearance
    int num_times = 0;                     // T
    int num_predictors = 0;                // p
    std::vector<int> x_max;                // levels per predictor
    std::vector<Row> rows;

    // Observed covariate combinations, sorted lexicographically.
    std::vector<std::vector<int>> combos;
    std::map<std::vector<int>, int> combo_index;

    // rows_at[time][combo] -> row indices; rows_by_subject[i] -> row indices.
    std::vector<std::vector<std::vector<int>>> rows_at;
    std::vector<std::vector<int>> rows_by_subject;

    int num_subjects() const { return static_cast<int>(subject_ids.size()); }
    int num_rows() const { return static_cast<int>(rows.size()); }

    /// Rebuild combos and index structures from `rows`; then check invariants:
    /// positive levels, duplicate (subject,trial,time) keys, finite responses,
    /// and every level of every predictor observed at every time index.
    /// Throws ParseError (with row numbers when known) on violation.
    /// `require_coverage = false` skips the per-level coverage check (for
    /// held-out prediction grids, which need not support a fit).
    void finalize(bool require_coverage = true);
};

/// Strict CSV reader for the long format `subject,trial,time,y,x1..xp`.
/// Any malformed line yields ParseError naming the 1-based file line.
Dataset load_dataset(const std::string& path, bool require_coverage = true);
Dataset parse_dataset_csv(const std::string& text, const std::string& origin,
                          bool require_coverage = true);

/// Inverse of load_dataset; output is byte-stable for a fixed Dataset.
void write_dataset(const Dataset& data, const std::string& path);
std::string dataset_to_csv(const Dataset& data);

/// Fingerprint of the dataset content (used to tie sample streams to data).
std::uint64_t dataset_digest(const Dataset& data);

}  // namespace lfmm
