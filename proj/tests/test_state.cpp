#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "state.hpp"

using namespace lfmm;

namespace {

// Partition state with p predictors over K locations, all labels zero.
PartitionState make_state(const CovariateSpace& space, int num_locations) {
    PartitionState part;
    part.first.resize(space.num_predictors);
    for (int j = 0; j < space.num_predictors; ++j)
        part.first[j].assign(num_locations, std::vector<int>(space.x_max[j], 0));
    part.second.resize(num_locations);
    return part;
}

std::vector<std::vector<int>> all_combos(const std::vector<int>& x_max) {
    std::vector<std::vector<int>> combos{{}};
    for (int levels : x_max) {
        std::vector<std::vector<int>> next;
        for (const auto& c : combos)
            for (int v = 1; v <= levels; ++v) {
                next.push_back(c);
                next.back().push_back(v);
            }
        combos = std::move(next);
    }
    return combos;
}

}  // namespace

TEST_CASE("hyperparameter validation") {
    Hyperparameters h;
    CHECK_NOTHROW(h.validate());
    CHECK(h.stored_draws() == 1000);  // (7500 - 2500) / 5

    Hyperparameters bad = h;
    bad.s_sigma = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = h;
    bad.a_phi = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = h;
    bad.burn_in = bad.iterations;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = h;
    bad.thin = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = h;
    bad.iterations = 11;
    bad.burn_in = 4;
    bad.thin = 3;  // 7 stored iterations not divisible by 3
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = h;
    bad.anchor_var = -2.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("hyperparameters read from config text") {
    Config cfg = Config::parse(
        "s_sigma = 2.0\n"
        "# comment line\n"
        "iterations = 100\n"
        "burnin = 40\n"
        "thin = 3\n"
        "a_phi = 7\n"
        "random_effects = false\n"
        "anchor_mean = 1.5\n"
        "anchor_var = 9.0\n");
    Hyperparameters h = Hyperparameters::from_config(cfg);
    CHECK(h.s_sigma == 2.0);
    CHECK(h.iterations == 100);
    CHECK(h.burn_in == 40);
    CHECK(h.thin == 3);
    CHECK(h.a_phi == 7.0);
    CHECK(h.random_effects == false);
    REQUIRE(h.anchor_mean.has_value());
    CHECK(*h.anchor_mean == 1.5);
    REQUIRE(h.anchor_var.has_value());
    CHECK(*h.anchor_var == 9.0);
    CHECK(h.stored_draws() == 20);
}

TEST_CASE("covariate space validation") {
    CovariateSpace space;
    space.num_predictors = 2;
    space.x_max = {2, 3};
    space.z_max = {2, 3};
    CHECK_NOTHROW(space.validate());

    CovariateSpace bad = space;
    bad.z_max = {2, 4};  // exceeds x_max
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = space;
    bad.z_max = {1, 3};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = space;
    bad.x_max = {1, 3};
    bad.z_max = {1, 3};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = space;
    bad.x_max = {2};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("distinct label counting") {
    CHECK(distinct_count({0, 0, 0}) == 1);
    CHECK(distinct_count({0, 1, 0}) == 2);
    CHECK(distinct_count({2, 1, 0}) == 3);
    CHECK(distinct_count({5}) == 1);
}

TEST_CASE("identical labels fuse every combination into one cell") {
    CovariateSpace space;
    space.num_predictors = 2;
    space.x_max = {2, 2};
    space.z_max = {2, 2};
    PartitionState part = make_state(space, 1);
    part.second[0][{0, 0}] = 0;
    auto combos = all_combos(space.x_max);
    LocalPartition rho = derive_partition(part, space, 0, combos);
    CHECK(rho.size() == 1);
    CHECK(rho.members[0] == std::vector<int>{0, 1, 2, 3});
    for (int c : rho.cell_of_combo) CHECK(c == 0);
}

TEST_CASE("second layer fuses the two mixed cells") {
    // First layer separates both binary predictors; the fused layer merges
    // core cells (1,2) and (2,1), leaving three clusters.
    CovariateSpace space;
    space.num_predictors = 2;
    space.x_max = {2, 2};
    space.z_max = {2, 2};
    PartitionState part = make_state(space, 1);
    part.first[0][0] = {0, 1};
    part.first[1][0] = {0, 1};
    part.second[0][{0, 0}] = 0;
    part.second[0][{0, 1}] = 1;
    part.second[0][{1, 0}] = 1;
    part.second[0][{1, 1}] = 2;
    auto combos = all_combos(space.x_max);  // (1,1),(1,2),(2,1),(2,2)
    LocalPartition rho = derive_partition(part, space, 0, combos);
    REQUIRE(rho.size() == 3);
    CHECK(rho.members[0] == std::vector<int>{0});
    CHECK(rho.members[1] == std::vector<int>{1, 2});
    CHECK(rho.members[2] == std::vector<int>{3});
    CHECK(rho.cell_of_combo == std::vector<int>{0, 1, 1, 2});
}

TEST_CASE("injective labels keep every combination separate") {
    CovariateSpace space;
    space.num_predictors = 2;
    space.x_max = {2, 2};
    space.z_max = {2, 2};
    PartitionState part = make_state(space, 1);
    part.first[0][0] = {0, 1};
    part.first[1][0] = {0, 1};
    int next = 0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) part.second[0][{a, b}] = next++;
    auto combos = all_combos(space.x_max);
    LocalPartition rho = derive_partition(part, space, 0, combos);
    CHECK(rho.size() == 4);
    for (int c = 0; c < 4; ++c) CHECK(rho.cell_of_combo[c] == c);
}

TEST_CASE("missing fused label for an occupied cell is an error") {
    CovariateSpace space;
    space.num_predictors = 2;
    space.x_max = {2, 2};
    space.z_max = {2, 2};
    PartitionState part = make_state(space, 1);
    part.first[0][0] = {0, 1};
    part.second[0][{0, 0}] = 0;  // key (1,0) never given a label
    auto combos = all_combos(space.x_max);
    CHECK_THROWS_AS(derive_partition(part, space, 0, combos), std::runtime_error);
}

TEST_CASE("single predictor needs no second layer") {
    CovariateSpace space;
    space.num_predictors = 1;
    space.x_max = {3};
    space.z_max = {3};
    PartitionState part = make_state(space, 1);
    part.first[0][0] = {0, 1, 0};
    auto combos = all_combos(space.x_max);
    LocalPartition rho = derive_partition(part, space, 0, combos);
    REQUIRE(rho.size() == 2);
    CHECK(rho.members[0] == std::vector<int>{0, 2});
    CHECK(rho.members[1] == std::vector<int>{1});
}

TEST_CASE("relabeling the first layer leaves the partition unchanged") {
    CovariateSpace space;
    space.num_predictors = 2;
    space.x_max = {3, 3};
    space.z_max = {3, 3};
    auto combos = all_combos(space.x_max);
    std::mt19937_64 mt(99);
    std::uniform_int_distribution<int> lab(0, 2);
    for (int trial = 0; trial < 200; ++trial) {
        PartitionState part = make_state(space, 1);
        for (int j = 0; j < 2; ++j)
            for (int lev = 0; lev < 3; ++lev) part.first[j][0][lev] = lab(mt);
        // label occupied cells with arbitrary fused labels
        for (const auto& combo : combos) {
            auto key = cell_key(part, 0, combo);
            if (!part.second[0].count(key))
                part.second[0][key] = static_cast<int>(part.second[0].size() % 4);
        }
        LocalPartition before = derive_partition(part, space, 0, combos);

        // permute predictor 0's alphabet and re-key the second layer
        std::vector<int> perm{1, 2, 0};
        PartitionState relabeled = part;
        for (int lev = 0; lev < 3; ++lev)
            relabeled.first[0][0][lev] = perm[part.first[0][0][lev]];
        relabeled.second[0].clear();
        for (const auto& [key, z] : part.second[0])
            relabeled.second[0][{perm[key[0]], key[1]}] = z;

        LocalPartition after = derive_partition(relabeled, space, 0, combos);
        CHECK(before.members == after.members);
        CHECK(before.cell_of_combo == after.cell_of_combo);
    }
}

TEST_CASE("fused alphabet size multiplies the per-predictor counts") {
    CovariateSpace space;
    space.num_predictors = 2;
    space.x_max = {3, 2};
    space.z_max = {3, 2};
    PartitionState part = make_state(space, 1);
    part.first[0][0] = {0, 1, 0};  // two distinct labels
    part.first[1][0] = {1, 1};     // one distinct label
    CHECK(fused_alphabet_size(part, space, 0) == 2);
    part.first[1][0] = {0, 1};
    CHECK(fused_alphabet_size(part, space, 0) == 4);
}

TEST_CASE("partition-size prior: uniform at zero decay") {
    for (int l = 1; l <= 5; ++l)
        CHECK(log_prior_partition_size(l, 0.0, 5) ==
              doctest::Approx(std::log(0.2)).epsilon(1e-14));
}

TEST_CASE("partition-size prior: large decay concentrates on one cluster") {
    double p1 = std::exp(log_prior_partition_size(1, 50.0, 5));
    CHECK(p1 > 0.999999);
    CHECK(std::exp(log_prior_partition_size(2, 50.0, 5)) < 1e-6);
}

TEST_CASE("partition-size prior: binary support at unit decay") {
    double p1 = std::exp(log_prior_partition_size(1, 1.0, 2));
    CHECK(p1 == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-9));
    CHECK(p1 == doctest::Approx(0.73106).epsilon(1e-4));
}

TEST_CASE("partition-size prior normalizes for random decay rates") {
    std::mt19937_64 mt(3);
    std::uniform_real_distribution<double> phis(0.0, 5.0);
    std::uniform_int_distribution<int> supports(1, 8);
    for (int trial = 0; trial < 500; ++trial) {
        double phi = phis(mt);
        int support = supports(mt);
        double total = 0.0;
        for (int l = 1; l <= support; ++l)
            total += std::exp(log_prior_partition_size(l, phi, support));
        CHECK(std::abs(total - 1.0) <= 1e-12);
    }
}

TEST_CASE("partition-size prior rejects out-of-range sizes") {
    CHECK_THROWS_AS(log_prior_partition_size(0, 1.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(log_prior_partition_size(4, 1.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(log_prior_partition_size(1, 1.0, 0), std::invalid_argument);
}

namespace {

ChainParameters uniform_chains(const CovariateSpace& space, int num_locations) {
    ChainParameters chains;
    chains.pi0.resize(space.num_predictors);
    chains.trans.resize(space.num_predictors);
    chains.alpha.assign(space.num_predictors, 1.0);
    chains.phi.assign(space.num_predictors, 1.0);
    for (int j = 0; j < space.num_predictors; ++j) {
        int z = space.z_max[j];
        chains.pi0[j].assign(z, 1.0 / z);
        chains.trans[j].assign(z, std::vector<double>(z, 1.0 / z));
    }
    chains.pi_star.assign(num_locations, {1.0});
    return chains;
}

}  // namespace

TEST_CASE("chain segment log-probability with uniform rows") {
    CovariateSpace space;
    space.num_predictors = 1;
    space.x_max = {3};
    space.z_max = {3};
    PartitionState part = make_state(space, 3);
    ChainParameters chains = uniform_chains(space, 3);
    // interior location: three levels, incoming + outgoing terms each
    double lp = log_prior_chain_segment(0, 1, part, space, chains, 3);
    CHECK(lp == doctest::Approx(6.0 * std::log(1.0 / 3.0)).epsilon(1e-12));
    // first location: initial terms plus outgoing transitions
    lp = log_prior_chain_segment(0, 0, part, space, chains, 3);
    CHECK(lp == doctest::Approx(6.0 * std::log(1.0 / 3.0)).epsilon(1e-12));
    // last location: incoming only
    lp = log_prior_chain_segment(0, 2, part, space, chains, 3);
    CHECK(lp == doctest::Approx(3.0 * std::log(1.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("chain segment with a single location uses only initial terms") {
    CovariateSpace space;
    space.num_predictors = 1;
    space.x_max = {2};
    space.z_max = {2};
    PartitionState part = make_state(space, 1);
    ChainParameters chains = uniform_chains(space, 1);
    chains.pi0[0] = {0.25, 0.75};
    part.first[0][0] = {0, 1};
    double lp = log_prior_chain_segment(0, 0, part, space, chains, 1);
    CHECK(lp == doctest::Approx(std::log(0.25) + std::log(0.75)).epsilon(1e-12));
}

TEST_CASE("deterministic transitions along the realized path give log 1") {
    CovariateSpace space;
    space.num_predictors = 1;
    space.x_max = {2};
    space.z_max = {2};
    PartitionState part = make_state(space, 3);  // all labels 0
    ChainParameters chains = uniform_chains(space, 3);
    chains.trans[0] = {{1.0, 0.0}, {0.0, 1.0}};
    double lp = log_prior_chain_segment(0, 1, part, space, chains, 3);
    CHECK(lp == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("first-difference penalty shape and quadratic form") {
    Tridiag p = first_difference_penalty(5);
    REQUIRE(p.diag.size() == 5);
    REQUIRE(p.off.size() == 4);
    CHECK(p.diag == std::vector<double>{1, 2, 2, 2, 1});
    for (double o : p.off) CHECK(o == -1.0);
    // row sums vanish
    for (int t = 0; t < 5; ++t) {
        double row = p.diag[t];
        if (t > 0) row += p.off[t - 1];
        if (t < 4) row += p.off[t];
        CHECK(row == doctest::Approx(0.0));
    }
    // v' P v equals the sum of squared first differences (so P is PSD)
    std::mt19937_64 mt(11);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(5);
        for (double& x : v) x = gauss(mt);
        double quad = 0.0;
        for (int t = 0; t < 5; ++t) quad += p.diag[t] * v[t] * v[t];
        for (int t = 0; t + 1 < 5; ++t) quad += 2.0 * p.off[t] * v[t] * v[t + 1];
        double diffs = 0.0;
        for (int t = 0; t + 1 < 5; ++t)
            diffs += (v[t + 1] - v[t]) * (v[t + 1] - v[t]);
        CHECK(quad == doctest::Approx(diffs).epsilon(1e-10));
        CHECK(quad >= -1e-12);
    }
    // degenerate single-location case is the zero matrix
    Tridiag p1 = first_difference_penalty(1);
    CHECK(p1.diag == std::vector<double>{0.0});
    CHECK(p1.off.empty());
}
