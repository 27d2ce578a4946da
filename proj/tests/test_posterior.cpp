#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "posterior.hpp"
#include "sampler.hpp"
#include "test_util.hpp"

using namespace lfmm;
using lfmm_test::make_grid_dataset;

namespace {

// Hand-built single-predictor store over K locations with two levels.
// Each draw is described by its label pair and per-cell coefficients.
struct P1DrawSpec {
    std::vector<std::vector<int>> first;    // [k][level], 0-based labels
    std::vector<std::vector<double>> beta;  // [k][cell]
};

SampleStore make_store_p1(int K, const std::vector<P1DrawSpec>& specs,
                          double sigma_eps_sq = 1.0,
                          bool random_effects = true,
                          std::vector<std::vector<double>> u_row = {}) {
    SampleStore store;
    store.meta.seed = 1;
    store.meta.iterations = static_cast<int>(specs.size());
    store.meta.burn_in = 0;
    store.meta.thin = 1;
    store.meta.num_locations = K;
    store.meta.num_predictors = 1;
    store.meta.num_subjects = 1;
    store.meta.x_max = {2};
    store.meta.z_max = {2};
    store.meta.combos = {{1}, {2}};
    store.meta.subjects = {"s1"};
    store.meta.random_effects = random_effects;
    int it = 0;
    for (const auto& spec : specs) {
        Draw d;
        d.iteration = ++it;
        d.first = {spec.first};
        d.second.resize(K);
        d.beta = spec.beta;
        d.ell.resize(1);
        for (int k = 0; k < K; ++k)
            d.ell[0].push_back(distinct_count(spec.first[k]));
        d.u = u_row.empty()
                  ? std::vector<std::vector<double>>{std::vector<double>(K, 0.0)}
                  : u_row;
        d.pi0 = {{0.5, 0.5}};
        d.trans = {{{0.5, 0.5}, {0.5, 0.5}}};
        d.pi_star.assign(K, {1.0});
        d.alpha = {1.0};
        d.phi = {1.0};
        d.sigma_eps_sq = sigma_eps_sq;
        d.sigma_us = 1e-9;
        d.sigma_ua = 1e-9;
        store.draws.push_back(std::move(d));
    }
    return store;
}

// Two predictors, two levels each, only the diagonal combinations observed.
SampleStore make_store_p2_sparse(double beta_cell0, double beta_cell1) {
    SampleStore store;
    store.meta.seed = 1;
    store.meta.iterations = 1;
    store.meta.burn_in = 0;
    store.meta.thin = 1;
    store.meta.num_locations = 1;
    store.meta.num_predictors = 2;
    store.meta.num_subjects = 1;
    store.meta.x_max = {2, 2};
    store.meta.z_max = {2, 2};
    store.meta.combos = {{1, 1}, {2, 2}};
    store.meta.subjects = {"s1"};
    store.meta.random_effects = false;

    Draw d;
    d.iteration = 1;
    d.first = {{{0, 1}}, {{0, 1}}};  // both predictors split their levels
    d.second.resize(1);
    d.second[0] = {{std::vector<int>{0, 0}, 0}, {std::vector<int>{1, 1}, 1}};
    d.beta = {{beta_cell0, beta_cell1}};
    d.ell = {{2}, {2}};
    d.u = {{0.0}};
    d.pi0 = {{0.5, 0.5}, {0.5, 0.5}};
    d.trans = {{{0.5, 0.5}, {0.5, 0.5}}, {{0.5, 0.5}, {0.5, 0.5}}};
    d.pi_star = {{0.25, 0.25, 0.25, 0.25}};
    d.alpha = {1.0, 1.0};
    d.phi = {1.0, 1.0};
    store.draws.push_back(std::move(d));
    return store;
}

SampleStore run_small_fit(const std::vector<int>& x_max, int K,
                          unsigned data_seed, std::uint64_t chain_seed,
                          bool random_effects = true) {
    Dataset data = make_grid_dataset(x_max, K, 2, data_seed, 0.6);
    SamplerConfig cfg;
    cfg.hyper.iterations = 60;
    cfg.hyper.burn_in = 20;
    cfg.hyper.thin = 2;
    cfg.hyper.random_effects = random_effects;
    cfg.seed = chain_seed;
    Sampler s(data, cfg);
    return s.run();
}

}  // namespace

TEST_CASE("interpolated quantiles") {
    CHECK_THROWS_AS(quantile_sorted({}, 0.5), std::invalid_argument);
    CHECK(quantile_sorted({5.0}, 0.0) == 5.0);
    CHECK(quantile_sorted({5.0}, 1.0) == 5.0);
    std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    CHECK(quantile_sorted(v, 0.0) == 1.0);
    CHECK(quantile_sorted(v, 1.0) == 4.0);
    CHECK(quantile_sorted(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile_sorted({10.0, 20.0, 30.0}, 0.25) == doctest::Approx(15.0));
    CHECK(quantile_sorted({10.0, 20.0, 30.0}, 0.75) == doctest::Approx(25.0));
}

TEST_CASE("cluster-count probabilities tabulate the stored sizes") {
    std::vector<P1DrawSpec> specs{
        {{{0, 0}, {0, 1}}, {{1.0}, {1.0, 2.0}}},
        {{{0, 1}, {0, 1}}, {{1.0, 2.0}, {1.0, 2.0}}},
        {{{0, 0}, {0, 0}}, {{1.0}, {1.0}}},
    };
    SampleStore store = make_store_p1(2, specs);
    auto probs = cluster_count_probabilities(store, 0);
    REQUIRE(probs.size() == 2);
    REQUIRE(probs[0].size() == 2);
    CHECK(probs[0][0] == doctest::Approx(2.0 / 3));
    CHECK(probs[0][1] == doctest::Approx(1.0 / 3));
    CHECK(probs[1][0] == doctest::Approx(1.0 / 3));
    CHECK(probs[1][1] == doctest::Approx(2.0 / 3));
    for (const auto& row : probs) {
        double total = 0.0;
        for (double p : row) total += p;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    }

    SampleStore empty = store;
    empty.draws.clear();
    CHECK_THROWS_AS(cluster_count_probabilities(empty, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(cluster_count_probabilities(store, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(cluster_count_probabilities(store, -1),
                    std::invalid_argument);
}

TEST_CASE("fixed-effect summary of a single draw is degenerate") {
    std::vector<P1DrawSpec> specs{
        {{{0, 1}, {0, 1}}, {{1.5, 3.0}, {2.5, 4.0}}}};
    SampleStore store = make_store_p1(2, specs);
    CurveSummary s1 = fixed_effect_summary(store, {1}, 0.95);
    CHECK(s1.mean == std::vector<double>{1.5, 2.5});
    CHECK(s1.lower == s1.mean);
    CHECK(s1.upper == s1.mean);
    CurveSummary s2 = fixed_effect_summary(store, {2}, 0.95);
    CHECK(s2.mean == std::vector<double>{3.0, 4.0});
}

TEST_CASE("fixed-effect summary of constant draws is constant") {
    std::vector<P1DrawSpec> specs(3, {{{0, 0}}, {{2.0}}});
    SampleStore store = make_store_p1(1, specs);
    CurveSummary s = fixed_effect_summary(store, {2}, 0.9);
    CHECK(s.mean == std::vector<double>{2.0});
    CHECK(s.lower == std::vector<double>{2.0});
    CHECK(s.upper == std::vector<double>{2.0});
}

TEST_CASE("fixed-effect summary validates its arguments") {
    std::vector<P1DrawSpec> specs{{{{0, 0}}, {{2.0}}}};
    SampleStore store = make_store_p1(1, specs);
    CHECK_THROWS_AS(fixed_effect_summary(store, {1}, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(fixed_effect_summary(store, {1}, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(fixed_effect_summary(store, {1, 2}, 0.95),
                    std::invalid_argument);
    CHECK_THROWS_AS(fixed_effect_summary(store, {3}, 0.95),
                    std::invalid_argument);
    CHECK_THROWS_AS(fixed_effect_summary(store, {0}, 0.95),
                    std::invalid_argument);
}

TEST_CASE("quantile bounds bracket the mean path on a real fit") {
    SampleStore store = run_small_fit({2, 2}, 3, 211, 3);
    for (const auto& combo :
         std::vector<std::vector<int>>{{1, 1}, {1, 2}, {2, 1}, {2, 2}}) {
        CurveSummary s = fixed_effect_summary(store, combo, 0.9);
        for (int k = 0; k < 3; ++k) {
            CHECK(s.lower[k] <= s.mean[k] + 1e-12);
            CHECK(s.mean[k] <= s.upper[k] + 1e-12);
        }
    }
}

TEST_CASE("unoccupied label keys fall back to the nearest observed cell") {
    SampleStore store = make_store_p2_sparse(1.0, 9.0);
    const Draw& d = store.draws[0];
    DrawEvaluator eval(d, store.meta);
    bool fb = false;
    CHECK(eval.beta_at(0, {1, 1}, &fb) == doctest::Approx(1.0));
    CHECK_FALSE(fb);
    CHECK(eval.beta_at(0, {2, 2}, &fb) == doctest::Approx(9.0));
    CHECK_FALSE(fb);
    // (1,2) composes key (0,1), which no observed combination occupies:
    // nearest observed combos are both at Hamming distance 1; the lex-first
    // of them is (1,1).
    CHECK(eval.beta_at(0, {1, 2}, &fb) == doctest::Approx(1.0));
    CHECK(fb);
    CHECK(eval.beta_at(0, {2, 1}, &fb) == doctest::Approx(1.0));
    CHECK(fb);
}

TEST_CASE("coinciding label keys resolve without fallback") {
    SampleStore store = make_store_p2_sparse(4.0, 7.0);
    Draw& d = store.draws[0];
    // fuse the second predictor so (1,2) shares the key of observed (1,1)
    d.first[1][0] = {0, 0};
    d.second[0] = {{std::vector<int>{0, 0}, 0}, {std::vector<int>{1, 0}, 1}};
    DrawEvaluator eval(d, store.meta);
    bool fb = true;
    CHECK(eval.beta_at(0, {1, 2}, &fb) == doctest::Approx(4.0));
    CHECK_FALSE(fb);
}

TEST_CASE("mean curves cover the full grid in lexicographic order") {
    SampleStore store = make_store_p2_sparse(1.0, 9.0);
    CurveSet curves = expand_mean_curves(store);
    REQUIRE(curves.cells.size() == 4);
    CHECK(curves.cells[0] == std::vector<int>{1, 1});
    CHECK(curves.cells[1] == std::vector<int>{1, 2});
    CHECK(curves.cells[2] == std::vector<int>{2, 1});
    CHECK(curves.cells[3] == std::vector<int>{2, 2});
    CHECK(curves.f[0][0] == doctest::Approx(1.0));
    CHECK(curves.f[1][0] == doctest::Approx(1.0));  // fallback to (1,1)
    CHECK(curves.f[2][0] == doctest::Approx(1.0));
    CHECK(curves.f[3][0] == doctest::Approx(9.0));
}

TEST_CASE("a constant surface has null main effects and interactions") {
    SampleStore store = make_store_p2_sparse(3.3, 3.3);
    EffectDecomposition dec = anova_effects(expand_mean_curves(store));
    REQUIRE(dec.overall_mean.size() == 1);
    CHECK(dec.overall_mean[0] == doctest::Approx(3.3).epsilon(1e-14));
    for (const auto& levels : dec.main_effects)
        for (const auto& curve : levels)
            for (double v : curve) CHECK(std::abs(v) <= 1e-13);
    for (const auto& pair_block : dec.interactions)
        for (const auto& lev1 : pair_block)
            for (const auto& curve : lev1)
                for (double v : curve) CHECK(std::abs(v) <= 1e-13);
}

TEST_CASE("main effects are centered and p=2 reconstruction is exact") {
    SampleStore store = run_small_fit({2, 3}, 3, 223, 5);
    CurveSet curves = expand_mean_curves(store);
    EffectDecomposition dec = anova_effects(curves);
    const int K = 3;
    // centering within each predictor
    for (size_t j = 0; j < dec.main_effects.size(); ++j)
        for (int k = 0; k < K; ++k) {
            double total = 0.0;
            for (const auto& lev : dec.main_effects[j]) total += lev[k];
            CHECK(std::abs(total) <= 1e-12);
        }
    // exact reconstruction of every cell from the decomposition
    REQUIRE(dec.pairs.size() == 1);
    CHECK(dec.pairs[0] == std::pair<int, int>{0, 1});
    for (size_t cell = 0; cell < curves.cells.size(); ++cell) {
        int l1 = curves.cells[cell][0] - 1, l2 = curves.cells[cell][1] - 1;
        for (int k = 0; k < K; ++k) {
            double rebuilt = dec.overall_mean[k] + dec.main_effects[0][l1][k] +
                             dec.main_effects[1][l2][k] +
                             dec.interactions[0][l1][l2][k];
            CHECK(std::abs(rebuilt - curves.f[cell][k]) < 1e-12);
        }
    }
}

TEST_CASE("interval tests separate distant levels and spare close ones") {
    // Two draws: one with a 10-unit gap, one with a 0.2-unit gap.
    std::vector<P1DrawSpec> specs{
        {{{0, 1}}, {{0.0, 10.0}}},
        {{{0, 1}}, {{0.0, 0.2}}},
    };
    SampleStore store = make_store_p1(1, specs);
    auto tests = pairwise_interval_tests(store, 0, {0.5});
    REQUIRE(tests.size() == 1);
    CHECK(tests[0].level_a == 1);
    CHECK(tests[0].level_b == 2);
    CHECK(tests[0].reject_prob[0] == doctest::Approx(0.5));
    CHECK_FALSE(tests[0].reject[0]);  // 0.5 < default cut 0.95

    auto lenient = pairwise_interval_tests(store, 0, {0.5}, 0.4);
    CHECK(lenient[0].reject[0]);

    auto wide = pairwise_interval_tests(store, 0, {100.0});
    CHECK(wide[0].reject_prob[0] == doctest::Approx(0.0));
    CHECK_FALSE(wide[0].reject[0]);
}

TEST_CASE("identical level curves never reject") {
    std::vector<P1DrawSpec> specs(4, {{{0, 0}}, {{2.0}}});
    SampleStore store = make_store_p1(1, specs);
    auto tests = pairwise_interval_tests(store, 0, {0.5});
    CHECK(tests[0].reject_prob[0] == doctest::Approx(0.0));
}

TEST_CASE("interval tests validate their inputs") {
    std::vector<P1DrawSpec> specs{{{{0, 1}}, {{0.0, 1.0}}}};
    SampleStore store = make_store_p1(1, specs);
    CHECK_THROWS_AS(pairwise_interval_tests(store, 0, {-0.1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(pairwise_interval_tests(store, 0, {0.1, 0.2}),
                    std::invalid_argument);  // K = 1 but two thresholds
    CHECK_THROWS_AS(pairwise_interval_tests(store, 2, {0.1}),
                    std::invalid_argument);

    SampleStore single = store;
    single.meta.x_max = {1};
    CHECK_THROWS_AS(pairwise_interval_tests(single, 0, {0.1}),
                    std::invalid_argument);
}

TEST_CASE("Geweke diagnostic on degenerate chains") {
    std::vector<double> constant(200, 1.7);
    GewekeResult r = geweke_diagnostic(constant);
    CHECK(r.z == 0.0);
    CHECK(r.p == 1.0);

    std::vector<double> tooShort(99, 0.0);
    CHECK_THROWS_AS(geweke_diagnostic(tooShort), std::invalid_argument);
    CHECK_THROWS_AS(geweke_diagnostic(constant, 0.6, 0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(geweke_diagnostic(constant, 0.0, 0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(geweke_diagnostic(constant, 0.1, 0.0),
                    std::invalid_argument);
}

TEST_CASE("Geweke p-value is the two-sided normal tail of z") {
    std::mt19937_64 mt(401);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> chain(500);
        double drift = 0.002 * trial;
        for (int i = 0; i < 500; ++i) chain[i] = gauss(mt) + drift * i;
        GewekeResult r = geweke_diagnostic(chain);
        CHECK(r.p ==
              doctest::Approx(std::erfc(std::abs(r.z) / std::sqrt(2.0)))
                  .epsilon(1e-12));
        if (trial >= 10) CHECK(r.z < 0.0);  // upward drift: early mean smaller
    }
    // the reference magnitude: a z of -0.236 corresponds to p near 0.81
    std::vector<double> probe(300);
    for (int i = 0; i < 300; ++i) probe[i] = gauss(mt);
    (void)probe;
    CHECK(std::erfc(0.236 / std::sqrt(2.0)) == doctest::Approx(0.81).epsilon(0.01));
}

TEST_CASE("Geweke statistic is calibrated under the i.i.d. null") {
    std::mt19937_64 mt(409);
    std::normal_distribution<double> gauss;
    int inside = 0;
    const int reps = 1000;
    for (int rep = 0; rep < reps; ++rep) {
        std::vector<double> chain(400);
        for (double& v : chain) v = gauss(mt);
        GewekeResult r = geweke_diagnostic(chain);
        if (std::abs(r.z) < 1.96) ++inside;
    }
    CHECK(inside >= static_cast<int>(0.90 * reps));
}

TEST_CASE("monitored scalars cover the variance and chain parameters") {
    SampleStore store = run_small_fit({2, 2}, 3, 227, 7, true);
    auto scalars = monitored_scalars(store);
    std::map<std::string, size_t> len;
    for (const auto& [name, chain] : scalars) len[name] = chain.size();
    for (const char* name :
         {"sigma_eps_sq", "sigma_beta_sq", "sigma_us", "sigma_ua", "alpha_1",
          "alpha_2", "phi_1", "phi_2", "mean_ell_1", "mean_ell_2",
          "alpha_star"}) {
        REQUIRE_MESSAGE(len.count(name) == 1, name);
        CHECK(len[name] == store.draws.size());
    }

    SampleStore fixed = run_small_fit({2}, 3, 229, 9, false);
    auto fixed_scalars = monitored_scalars(fixed);
    std::map<std::string, size_t> fixed_len;
    for (const auto& [name, chain] : fixed_scalars)
        fixed_len[name] = chain.size();
    CHECK(fixed_len.count("sigma_us") == 0);
    CHECK(fixed_len.count("sigma_ua") == 0);
    CHECK(fixed_len.count("alpha_star") == 0);
    CHECK(fixed_len.count("sigma_eps_sq") == 1);
    CHECK(fixed_len.count("mean_ell_1") == 1);
}

namespace {

Dataset make_heldout(const std::vector<std::string>& subjects,
                     const std::vector<std::tuple<int, int, std::vector<int>, double>>&
                         rows) {  // (subject index, time, levels, y)
    Dataset d;
    d.subject_ids = subjects;
    d.num_predictors = static_cast<int>(std::get<2>(rows[0]).size());
    d.x_max.assign(d.num_predictors, 2);
    int max_t = 0;
    for (const auto& spec : rows) max_t = std::max(max_t, std::get<1>(spec));
    d.num_times = max_t + 1;
    int trial = 0;
    for (const auto& spec : rows) {
        Row row;
        row.subject = std::get<0>(spec);
        row.trial = ++trial;  // distinct trials avoid duplicate keys
        row.time = std::get<1>(spec);
        row.levels = std::get<2>(spec);
        row.y = std::get<3>(spec);
        d.rows.push_back(row);
    }
    d.finalize(false);
    return d;
}

}  // namespace

TEST_CASE("predictive summary is exact in the zero-noise limit") {
    std::vector<P1DrawSpec> specs(
        40, {{{0, 1}, {0, 1}}, {{1.0, 5.0}, {2.0, 6.0}}});
    std::vector<std::vector<double>> u{{0.5, -0.5}};
    SampleStore store = make_store_p1(2, specs, 1e-18, true, u);

    Dataset heldout = make_heldout(
        {"s1", "sX"},
        {{0, 0, {1}, 1.5}, {0, 1, {2}, 5.5}, {1, 0, {2}, 5.0}});
    Rng rng(431);
    PredictiveSummary s = posterior_predictive(store, heldout, 0.95, rng);
    REQUIRE(s.pred_mean.size() == 3);
    CHECK(s.pred_mean[0] == doctest::Approx(1.5).epsilon(1e-6));
    CHECK(s.pred_mean[1] == doctest::Approx(5.5).epsilon(1e-6));
    CHECK(s.pred_mean[2] == doctest::Approx(5.0).epsilon(1e-6));
    CHECK(s.rmse <= 1e-6);
    CHECK(s.coverage == doctest::Approx(1.0));
    CHECK(s.mean_width <= 1e-6);
    for (int r = 0; r < 3; ++r) {
        CHECK(s.pred_lower[r] <= s.pred_mean[r]);
        CHECK(s.pred_mean[r] <= s.pred_upper[r]);
    }
}

TEST_CASE("predictive evaluation validates its inputs") {
    std::vector<P1DrawSpec> specs{{{{0, 1}}, {{1.0, 5.0}}}};
    SampleStore store = make_store_p1(1, specs);
    Dataset heldout = make_heldout({"s1"}, {{0, 0, {1}, 1.0}});
    Rng rng(433);
    CHECK_THROWS_AS(posterior_predictive(store, heldout, 1.5, rng),
                    std::invalid_argument);

    Dataset deep = make_heldout({"s1"}, {{0, 1, {1}, 1.0}});  // t=2 of a K=1 fit
    CHECK_THROWS_AS(posterior_predictive(store, deep, 0.95, rng),
                    std::invalid_argument);

    Dataset wrong_p = make_heldout({"s1"}, {{0, 0, {1, 1}, 1.0}});
    CHECK_THROWS_AS(posterior_predictive(store, wrong_p, 0.95, rng),
                    std::invalid_argument);
}
