#include "posterior.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <stdexcept>

#include "sampler.hpp"

namespace lfmm {

namespace {

std::vector<std::vector<int>> full_grid(const std::vector<int>& x_max) {
    std::vector<std::vector<int>> cells{{}};
    for (int m : x_max) {
        std::vector<std::vector<int>> next;
        next.reserve(cells.size() * m);
        for (const auto& c : cells)
            for (int lev = 1; lev <= m; ++lev) {
                auto e = c;
                e.push_back(lev);
                next.push_back(std::move(e));
            }
        cells = std::move(next);
    }
    return cells;
}

void require_draws(const SampleStore& store) {
    if (store.draws.empty())
        throw std::invalid_argument("sample store holds no draws");
}

void require_predictor(const SampleStore& store, int predictor) {
    if (predictor < 0 || predictor >= store.meta.num_predictors)
        throw std::invalid_argument("predictor index out of range");
}

}  // namespace

DrawEvaluator::DrawEvaluator(const Draw& draw, const StoreMeta& meta)
    : draw_(&draw), meta_(&meta) {
    const int K = meta.num_locations;
    parts_.reserve(K);
    key_cell_.assign(K, {});
    const int p = meta.num_predictors;
    for (int k = 0; k < K; ++k) {
        parts_.push_back(draw_partition(draw, meta, k));
        for (int c = 0; c < static_cast<int>(meta.combos.size()); ++c) {
            std::vector<int> key(p);
            for (int j = 0; j < p; ++j)
                key[j] = draw.first[j][k][meta.combos[c][j] - 1];
            key_cell_[k].emplace(std::move(key), parts_[k].cell_of_combo[c]);
        }
    }
}

double DrawEvaluator::beta_at(int k, const std::vector<int>& combo,
                              bool* fallback) const {
    const int p = meta_->num_predictors;
    std::vector<int> key(p);
    for (int j = 0; j < p; ++j) {
        int lev = combo[j];
        if (lev < 1 || lev > meta_->x_max[j])
            throw std::invalid_argument("covariate level out of range");
        key[j] = draw_->first[j][k][lev - 1];
    }
    auto it = key_cell_[k].find(key);
    if (it != key_cell_[k].end()) {
        if (fallback) *fallback = false;
        return draw_->beta[k][it->second];
    }
    // Unoccupied label key: substitute the nearest observed combination.
    int best = 0, best_dist = p + 1;
    for (int c = 0; c < static_cast<int>(meta_->combos.size()); ++c) {
        int dist = 0;
        for (int j = 0; j < p; ++j) dist += meta_->combos[c][j] != combo[j];
        if (dist < best_dist) {
            best_dist = dist;
            best = c;
        }
    }
    if (fallback) *fallback = true;
    return draw_->beta[k][parts_[k].cell_of_combo[best]];
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
    if (p <= 0.0) return sorted.front();
    if (p >= 1.0) return sorted.back();
    const double h = (sorted.size() - 1) * p;
    const std::size_t i = static_cast<std::size_t>(h);
    if (i + 1 >= sorted.size()) return sorted.back();
    return sorted[i] + (h - i) * (sorted[i + 1] - sorted[i]);
}

std::vector<std::vector<double>> cluster_count_probabilities(
    const SampleStore& store, int predictor) {
    require_draws(store);
    require_predictor(store, predictor);
    const int K = store.meta.num_locations;
    const int cmax = store.meta.x_max[predictor];
    std::vector<std::vector<double>> out(K, std::vector<double>(cmax, 0.0));
    for (const auto& d : store.draws)
        for (int k = 0; k < K; ++k) {
            int ell = d.ell[predictor][k];
            if (ell < 1 || ell > cmax)
                throw std::runtime_error("stored cluster count out of range");
            out[k][ell - 1] += 1.0;
        }
    for (auto& row : out)
        for (double& v : row) v /= store.draws.size();
    return out;
}

CurveSummary fixed_effect_summary(const SampleStore& store,
                                  const std::vector<int>& combo,
                                  double level) {
    require_draws(store);
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("credibility level must lie in (0, 1)");
    if (static_cast<int>(combo.size()) != store.meta.num_predictors)
        throw std::invalid_argument("combination arity mismatch");
    const int K = store.meta.num_locations;
    const std::size_t n = store.draws.size();
    std::vector<std::vector<double>> values(K, std::vector<double>(n));
    bool any_fallback = false;
    for (std::size_t m = 0; m < n; ++m) {
        DrawEvaluator eval(store.draws[m], store.meta);
        for (int k = 0; k < K; ++k) {
            bool fb = false;
            values[k][m] = eval.beta_at(k, combo, &fb);
            any_fallback |= fb;
        }
    }
    if (any_fallback)
        std::fprintf(stderr,
                     "warning: combination not observed in the fitting data; "
                     "expanded through the nearest observed combination\n");
    CurveSummary s;
    s.mean.resize(K);
    s.lower.resize(K);
    s.upper.resize(K);
    const double tail = (1.0 - level) / 2.0;
    for (int k = 0; k < K; ++k) {
        double acc = 0.0;
        for (double v : values[k]) acc += v;
        s.mean[k] = acc / n;
        std::sort(values[k].begin(), values[k].end());
        s.lower[k] = quantile_sorted(values[k], tail);
        s.upper[k] = quantile_sorted(values[k], 1.0 - tail);
    }
    return s;
}

CurveSet expand_mean_curves(const SampleStore& store) {
    require_draws(store);
    CurveSet cs;
    cs.x_max = store.meta.x_max;
    cs.cells = full_grid(cs.x_max);
    const int K = store.meta.num_locations;
    cs.f.assign(cs.cells.size(), std::vector<double>(K, 0.0));
    long long fallback_cells = 0;
    for (const auto& d : store.draws) {
        DrawEvaluator eval(d, store.meta);
        for (std::size_t c = 0; c < cs.cells.size(); ++c)
            for (int k = 0; k < K; ++k) {
                bool fb = false;
                cs.f[c][k] += eval.beta_at(k, cs.cells[c], &fb);
                fallback_cells += fb;
            }
    }
    for (auto& row : cs.f)
        for (double& v : row) v /= store.draws.size();
    if (fallback_cells > 0)
        std::fprintf(stderr,
                     "warning: %lld grid evaluations fell back to the nearest "
                     "observed combination\n",
                     fallback_cells);
    return cs;
}

EffectDecomposition anova_effects(const CurveSet& curves) {
    const int p = static_cast<int>(curves.x_max.size());
    const int K =
        curves.f.empty() ? 0 : static_cast<int>(curves.f.front().size());
    const double ncells = static_cast<double>(curves.cells.size());
    EffectDecomposition dec;
    dec.overall_mean.assign(K, 0.0);
    for (const auto& row : curves.f)
        for (int t = 0; t < K; ++t) dec.overall_mean[t] += row[t];
    for (double& v : dec.overall_mean) v /= ncells;

    dec.main_effects.resize(p);
    for (int j = 0; j < p; ++j) {
        dec.main_effects[j].assign(curves.x_max[j], std::vector<double>(K, 0.0));
        std::vector<long long> counts(curves.x_max[j], 0);
        for (std::size_t c = 0; c < curves.cells.size(); ++c) {
            int lev = curves.cells[c][j] - 1;
            ++counts[lev];
            for (int t = 0; t < K; ++t)
                dec.main_effects[j][lev][t] += curves.f[c][t];
        }
        for (int lev = 0; lev < curves.x_max[j]; ++lev)
            for (int t = 0; t < K; ++t)
                dec.main_effects[j][lev][t] =
                    dec.main_effects[j][lev][t] / counts[lev] -
                    dec.overall_mean[t];
    }

    for (int j1 = 0; j1 < p; ++j1)
        for (int j2 = j1 + 1; j2 < p; ++j2) {
            dec.pairs.emplace_back(j1, j2);
            std::vector<std::vector<std::vector<double>>> inter(
                curves.x_max[j1],
                std::vector<std::vector<double>>(curves.x_max[j2],
                                                 std::vector<double>(K, 0.0)));
            std::vector<std::vector<long long>> counts(
                curves.x_max[j1], std::vector<long long>(curves.x_max[j2], 0));
            for (std::size_t c = 0; c < curves.cells.size(); ++c) {
                int l1 = curves.cells[c][j1] - 1, l2 = curves.cells[c][j2] - 1;
                ++counts[l1][l2];
                for (int t = 0; t < K; ++t) inter[l1][l2][t] += curves.f[c][t];
            }
            for (int l1 = 0; l1 < curves.x_max[j1]; ++l1)
                for (int l2 = 0; l2 < curves.x_max[j2]; ++l2)
                    for (int t = 0; t < K; ++t)
                        inter[l1][l2][t] =
                            inter[l1][l2][t] / counts[l1][l2] -
                            dec.main_effects[j1][l1][t] -
                            dec.main_effects[j2][l2][t] - dec.overall_mean[t];
            dec.interactions.push_back(std::move(inter));
        }
    return dec;
}

std::vector<IntervalTest> pairwise_interval_tests(
    const SampleStore& store, int predictor, const std::vector<double>& delta,
    double cut) {
    require_draws(store);
    require_predictor(store, predictor);
    const int K = store.meta.num_locations;
    const int nlev = store.meta.x_max[predictor];
    if (nlev < 2)
        throw std::invalid_argument(
            "interval tests need a predictor with at least two levels");
    if (delta.size() != 1 && static_cast<int>(delta.size()) != K)
        throw std::invalid_argument(
            "threshold must be a scalar or one value per location");
    for (double d : delta)
        if (!(d >= 0.0))
            throw std::invalid_argument("thresholds must be nonnegative");

    auto grid = full_grid(store.meta.x_max);
    std::vector<IntervalTest> tests;
    for (int a = 1; a <= nlev; ++a)
        for (int b = a + 1; b <= nlev; ++b) {
            IntervalTest t;
            t.level_a = a;
            t.level_b = b;
            t.reject_prob.assign(K, 0.0);
            tests.push_back(std::move(t));
        }

    std::vector<std::vector<double>> slice(nlev, std::vector<double>(K));
    for (const auto& d : store.draws) {
        DrawEvaluator eval(d, store.meta);
        for (auto& row : slice) std::fill(row.begin(), row.end(), 0.0);
        std::vector<long long> counts(nlev, 0);
        for (const auto& cell : grid) {
            int lev = cell[predictor] - 1;
            ++counts[lev];
            for (int k = 0; k < K; ++k) slice[lev][k] += eval.beta_at(k, cell);
        }
        for (int lev = 0; lev < nlev; ++lev)
            for (int k = 0; k < K; ++k) slice[lev][k] /= counts[lev];
        std::size_t idx = 0;
        for (int a = 0; a < nlev; ++a)
            for (int b = a + 1; b < nlev; ++b, ++idx)
                for (int k = 0; k < K; ++k) {
                    double band = delta.size() == 1 ? delta[0] : delta[k];
                    if (std::fabs(slice[a][k] - slice[b][k]) > band)
                        tests[idx].reject_prob[k] += 1.0;
                }
    }
    for (auto& t : tests) {
        t.reject.resize(K);
        for (int k = 0; k < K; ++k) {
            t.reject_prob[k] /= store.draws.size();
            t.reject[k] = t.reject_prob[k] > cut;
        }
    }
    return tests;
}

namespace {

double batch_means_se_sq(const std::vector<double>& seg) {
    const int len = static_cast<int>(seg.size());
    const int b = std::max(1, static_cast<int>(std::floor(std::sqrt(len))));
    const int nb = len / b;
    const int used = nb * b;
    double mean = 0.0;
    for (int i = 0; i < used; ++i) mean += seg[i];
    mean /= used;
    if (nb < 2) return 0.0;
    double var_bm = 0.0;
    for (int g = 0; g < nb; ++g) {
        double bm = 0.0;
        for (int i = 0; i < b; ++i) bm += seg[g * b + i];
        bm /= b;
        var_bm += (bm - mean) * (bm - mean);
    }
    var_bm /= nb - 1;
    return b * var_bm / used;
}

}  // namespace

GewekeResult geweke_diagnostic(const std::vector<double>& chain,
                               double first_fraction, double last_fraction,
                               int min_length) {
    const int n = static_cast<int>(chain.size());
    if (n < min_length)
        throw std::invalid_argument("chain too short for the Geweke diagnostic");
    if (!(first_fraction > 0.0) || !(last_fraction > 0.0) ||
        first_fraction + last_fraction > 1.0)
        throw std::invalid_argument("segment fractions must be positive and "
                                    "non-overlapping");
    const int na = std::max(2, static_cast<int>(std::floor(first_fraction * n)));
    const int nb = std::max(2, static_cast<int>(std::floor(last_fraction * n)));
    std::vector<double> a(chain.begin(), chain.begin() + na);
    std::vector<double> b(chain.end() - nb, chain.end());
    double mean_a = 0.0, mean_b = 0.0;
    for (double v : a) mean_a += v;
    for (double v : b) mean_b += v;
    mean_a /= na;
    mean_b /= nb;
    GewekeResult r;
    // Exactly constant segments carry no sampling noise; the general path
    // below would divide roundoff by roundoff and report an arbitrary z.
    auto is_constant = [](const std::vector<double>& v) {
        for (double x : v)
            if (x != v.front()) return false;
        return true;
    };
    const bool degenerate = is_constant(a) && is_constant(b);
    const double diff = degenerate ? a.front() - b.front() : mean_a - mean_b;
    const double se =
        degenerate ? 0.0
                   : std::sqrt(batch_means_se_sq(a) + batch_means_se_sq(b));
    if (diff == 0.0)
        r.z = 0.0;
    else if (se == 0.0)
        r.z = diff > 0 ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
    else
        r.z = diff / se;
    r.p = std::isinf(r.z) ? 0.0 : std::erfc(std::fabs(r.z) / std::sqrt(2.0));
    return r;
}

std::vector<std::pair<std::string, std::vector<double>>> monitored_scalars(
    const SampleStore& store) {
    std::vector<std::pair<std::string, std::vector<double>>> out;
    const auto& draws = store.draws;
    auto add = [&](const std::string& name, auto getter) {
        std::vector<double> chain;
        chain.reserve(draws.size());
        for (const auto& d : draws) chain.push_back(getter(d));
        out.emplace_back(name, std::move(chain));
    };
    add("sigma_eps_sq", [](const Draw& d) { return d.sigma_eps_sq; });
    add("sigma_beta_sq", [](const Draw& d) { return d.sigma_beta_sq; });
    if (store.meta.random_effects) {
        add("sigma_us", [](const Draw& d) { return d.sigma_us; });
        add("sigma_ua", [](const Draw& d) { return d.sigma_ua; });
    }
    for (int j = 0; j < store.meta.num_predictors; ++j) {
        add("alpha_" + std::to_string(j + 1),
            [j](const Draw& d) { return d.alpha[j]; });
        add("phi_" + std::to_string(j + 1),
            [j](const Draw& d) { return d.phi[j]; });
        add("mean_ell_" + std::to_string(j + 1), [j](const Draw& d) {
            double s = 0.0;
            for (int e : d.ell[j]) s += e;
            return s / d.ell[j].size();
        });
    }
    if (store.meta.num_predictors >= 2)
        add("alpha_star", [](const Draw& d) { return d.alpha_star; });
    return out;
}

PredictiveSummary posterior_predictive(const SampleStore& store,
                                       const Dataset& heldout, double level,
                                       Rng& rng) {
    require_draws(store);
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("credibility level must lie in (0, 1)");
    if (heldout.num_predictors != store.meta.num_predictors)
        throw std::invalid_argument("held-out predictor arity mismatch");
    if (heldout.num_times > store.meta.num_locations)
        throw std::invalid_argument("held-out time index beyond the fit grid");

    std::map<std::string, int> known;
    for (int i = 0; i < static_cast<int>(store.meta.subjects.size()); ++i)
        known[store.meta.subjects[i]] = i;
    // Stable indices for subjects absent from the fit.
    std::map<std::string, int> fresh;
    for (const auto& id : heldout.subject_ids)
        if (!known.count(id)) fresh.emplace(id, static_cast<int>(fresh.size()));

    const int K = store.meta.num_locations;
    const Tridiag penalty = first_difference_penalty(K);
    const std::size_t nrows = heldout.rows.size();
    const std::size_t ndraws = store.draws.size();
    std::vector<std::vector<double>> preds(nrows, std::vector<double>(ndraws));

    for (std::size_t m = 0; m < ndraws; ++m) {
        const Draw& d = store.draws[m];
        DrawEvaluator eval(d, store.meta);
        std::vector<std::vector<double>> fresh_u(fresh.size());
        if (store.meta.random_effects)
            for (auto& [id, idx] : fresh) {
                std::vector<long long> zeros(K, 0);
                std::vector<double> b(K, 0.0);
                fresh_u[idx] = gibbs_update_random_effects(
                    zeros, b, 1.0, d.sigma_us, d.sigma_ua, penalty, rng);
            }
        for (std::size_t r = 0; r < nrows; ++r) {
            const Row& row = heldout.rows[r];
            double f = eval.beta_at(row.time, row.levels);
            double u = 0.0;
            if (store.meta.random_effects) {
                const std::string& id = heldout.subject_ids[row.subject];
                auto it = known.find(id);
                u = it != known.end() ? d.u[it->second][row.time]
                                      : fresh_u[fresh.at(id)][row.time];
            }
            preds[r][m] =
                f + u + rng.normal(0.0, std::sqrt(d.sigma_eps_sq));
        }
    }

    PredictiveSummary s;
    s.pred_mean.resize(nrows);
    s.pred_lower.resize(nrows);
    s.pred_upper.resize(nrows);
    const double tail = (1.0 - level) / 2.0;
    double sq = 0.0;
    long long covered = 0;
    double width = 0.0;
    for (std::size_t r = 0; r < nrows; ++r) {
        auto& v = preds[r];
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= ndraws;
        std::sort(v.begin(), v.end());
        double lo = quantile_sorted(v, tail);
        double hi = quantile_sorted(v, 1.0 - tail);
        s.pred_mean[r] = mean;
        s.pred_lower[r] = lo;
        s.pred_upper[r] = hi;
        double y = heldout.rows[r].y;
        sq += (y - mean) * (y - mean);
        covered += (y >= lo && y <= hi);
        width += hi - lo;
    }
    s.rmse = std::sqrt(sq / nrows);
    s.coverage = static_cast<double>(covered) / nrows;
    s.mean_width = width / nrows;
    return s;
}

}  // namespace lfmm
