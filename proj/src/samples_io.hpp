#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "data.hpp"
#include "state.hpp"

namespace lfmm {

/// One stored posterior draw. Labels are serialized 1-based but held 0-based
/// here, mirroring PartitionState.
struct Draw {
    int iteration = 0;
    std::vector<std::vector<std::vector<int>>> first;  // [j][k][level]
    // [k] -> sorted (occupied cell key, fused label); empty when p == 1
    std::vector<std::vector<std::pair<std::vector<int>, int>>> second;
    std::vector<std::vector<double>> beta;      // [k][cell]
    std::vector<std::vector<int>> ell;          // [j][k]
    std::vector<std::vector<double>> u;         // [subject][k]
    std::vector<std::vector<double>> pi0;       // [j][label]
    std::vector<std::vector<std::vector<double>>> trans;  // [j][from][to]
    std::vector<std::vector<double>> pi_star;   // [k][label]
    std::vector<double> alpha;                  // [j]
    std::vector<double> phi;                    // [j]
    double alpha_star = 1.0;
    double sigma_beta_sq = 1.0;
    double nu_beta = 1.0;
    double sigma_us = 1.0;
    double sigma_ua = 1.0;
    double sigma_eps_sq = 1.0;
};

/// Provenance and shape information shared by all draws of one chain.
struct StoreMeta {
    std::uint64_t seed = 0;
    int iterations = 0, burn_in = 0, thin = 0;
    int num_locations = 0, num_predictors = 0, num_subjects = 0;
    std::vector<int> x_max, z_max;
    std::vector<std::vector<int>> combos;   // observed combinations, lex order
    std::vector<std::string> subjects;
    bool random_effects = true;
    std::uint64_t data_digest = 0;
};

struct SampleStore {
    StoreMeta meta;
    std::vector<Draw> draws;
};

/// Line-delimited stream: one header record, then one record per draw.
/// Byte-stable for fixed content.
std::string samples_to_text(const SampleStore& store);
void write_samples(const SampleStore& store, const std::string& path);
SampleStore parse_samples_text(const std::string& text,
                               const std::string& origin);
SampleStore read_samples(const std::string& path);

/// Rebuild the location-k set partition of the observed combinations from a
/// draw's labels (same ordering convention as the sampler).
LocalPartition draw_partition(const Draw& draw, const StoreMeta& meta, int k);

/// Expanded coefficient beta_{k, combo} for an observed combination.
double expanded_coefficient(const Draw& draw, const LocalPartition& part,
                            int k, int combo);

}  // namespace lfmm
