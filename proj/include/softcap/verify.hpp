// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "softcap/absorption.hpp"
#include "softcap/engine.hpp"
#include "softcap/models.hpp"
#include "softcap/report.hpp"

namespace softcap {

/// The geometric-decay constant p = 1 - epsilon^(K-1) from the extinction
/// proof: an excursion below K starting at z <= K-1 continues (avoids
/// absorption) with probability at most p.
struct EpsilonK {
    double epsilon = 0.0;
    std::int64_t k = 0;
    double p = 0.0;
};

inline EpsilonK make_epsilon_k(double epsilon, std::int64_t K) {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) {
        throw std::invalid_argument("EpsilonK: epsilon must lie in (0,1]");
    }
    if (K < 1) throw std::invalid_argument("EpsilonK: K must be >= 1");
    EpsilonK e;
    e.epsilon = epsilon;
    e.k = K;
    e.p = 1.0 - std::pow(epsilon, static_cast<double>(K - 1));
    return e;
}

inline EpsilonK epsilon_k_for(const Model& model) {
    return make_epsilon_k(model.death_floor(), model.capacity());
}

namespace detail {

inline double binomial_stderr(double phat, std::int64_t n) {
    if (n <= 0) return 0.0;
    return std::sqrt(std::max(0.0, phat * (1.0 - phat)) / static_cast<double>(n));
}

inline bool unit_step(const Model& model) {
    return model.max_up_jump() == 1 && model.max_down_jump() == 1;
}

// Drift >= 0 at every size strictly below K (submartingale below the
// capacity), checked analytically over the finite range.
inline bool below_submartingale(const Model& model) {
    for (std::int64_t z = 1; z < model.capacity(); ++z) {
        std::int64_t k_hi = model.size_only() ? 1 : 64;
        for (std::int64_t k = 1; k <= k_hi; ++k) {
            if (model.drift({z, k}) < -1e-12) return false;
        }
    }
    return true;
}

}  // namespace detail

/// Analytic scan of the two standing assumptions: non-positive drift at and
/// above K, and a uniform death-risk floor at every reachable state.  The
/// counterexample declares no floor; its report is violated by
/// construction, with the scanned minimum as evidence.
inline std::vector<BoundReport> check_assumptions(const Model& model, std::int64_t K,
                                                  std::int64_t z_max,
                                                  std::int64_t k_max = 64) {
    if (z_max < K) throw std::invalid_argument("check_assumptions: z_max must be >= K");
    std::vector<BoundReport> out;

    const std::int64_t visit_depth = model.size_only() ? 1 : k_max;

    {
        BoundReport r;
        r.name = "eq1_drift_above_K";
        double worst = -std::numeric_limits<double>::infinity();
        std::int64_t states = 0;
        for (std::int64_t z = K; z <= z_max; ++z) {
            for (std::int64_t k = 1; k <= (z == 1 ? visit_depth : 1); ++k) {
                worst = std::max(worst, model.drift({z, k}));
                ++states;
            }
        }
        r.theoretical = 0.0;
        r.empirical = worst;
        r.std_error = 0.0;
        r.n = states;
        r.verdict = upper_bound_verdict(worst, 0.0, 0.0, 1e-12);
        r.note = "max analytic drift over K <= z <= " + std::to_string(z_max);
        out.push_back(std::move(r));
    }

    {
        BoundReport r;
        r.name = "eq2_death_floor";
        double least = std::numeric_limits<double>::infinity();
        std::int64_t states = 0;
        for (std::int64_t z = 1; z <= z_max; ++z) {
            for (std::int64_t k = 1; k <= (z == 1 ? visit_depth : 1); ++k) {
                const ChangePMF pmf = model.conditional_law({z, k});
                double death = 0.0;
                for (const auto& a : pmf.atoms) {
                    if (a.change == -1) death = a.prob;
                }
                least = std::min(least, death);
                ++states;
            }
        }
        r.empirical = least;
        r.std_error = 0.0;
        r.n = states;
        if (model.has_death_floor()) {
            r.theoretical = model.death_floor();
            r.verdict = lower_bound_verdict(least, r.theoretical, 0.0, 1e-12);
            r.note = "min analytic P(change = -1) vs declared floor";
        } else {
            r.theoretical = 0.0;
            r.verdict = Verdict::violated;
            r.note = "no uniform floor declared; death risk at size 1 decays to 0 in the "
                     "visit count (min over " + std::to_string(k_max) + " visits shown)";
        }
        out.push_back(std::move(r));
    }
    return out;
}

/// Extinction-certainty report from an existing ensemble.  Censored
/// replicates count as surviving, never as extinct.  For laws with a
/// declared death floor the target frequency is 1 (Theorem); for the
/// counterexample it is 1 minus the closed-form survival product, checked
/// two-sided.
inline BoundReport estimate_extinction(const EnsembleSummary& summary, const Model& model) {
    BoundReport r;
    r.name = "extinction_certainty";
    r.n = summary.reps;
    r.empirical = summary.extinction_frequency();
    r.std_error = detail::binomial_stderr(r.empirical, summary.reps);
    if (model.kind() == ModelKind::counterexample) {
        const double survival =
            summary.z0 >= 1 ? counterexample_survival(model.spec().decay_base) : 0.0;
        r.theoretical = 1.0 - survival;
        r.verdict = agreement_verdict(r.empirical, r.theoretical, r.std_error);
        r.note = "two-sided vs closed-form survival product";
    } else {
        r.theoretical = 1.0;
        r.verdict = lower_bound_verdict(r.empirical, 1.0, r.std_error);
        r.note = "censored replicates counted as surviving (" +
                 std::to_string(summary.n_censored) + " censored)";
    }
    return r;
}

inline BoundReport estimate_extinction(const Model& model, std::int64_t z0, std::int64_t reps,
                                       std::int64_t budget, std::uint64_t seed,
                                       std::int64_t parallelism = 1) {
    EnsembleConfig cfg;
    cfg.reps = reps;
    cfg.step_budget = budget;
    cfg.master_seed = seed;
    cfg.parallelism = parallelism;
    cfg.capacity = model.capacity();
    cfg.z0 = z0;
    return estimate_extinction(run_ensemble(model, cfg), model);
}

/// Maximal-inequality checks on above-K excursion peaks.  For each x, the
/// asserted bound anchors Doob at the realized entry size: P(max >= x) <=
/// E[Z_mu]/x.  The (K-1)/x variant presumes entry at K-1 and is reported
/// alongside without being asserted.
inline std::vector<BoundReport> check_doob_above(const EnsembleSummary& summary,
                                                 std::int64_t K,
                                                 const std::vector<std::int64_t>& x_list) {
    std::vector<BoundReport> out;
    const auto n = static_cast<std::int64_t>(summary.n_above_complete);
    for (const std::int64_t x : x_list) {
        if (x < K) throw std::invalid_argument("check_doob_above: x must be >= K");
        double freq = std::numeric_limits<double>::quiet_NaN();
        double se = 0.0;
        if (n > 0) {
            freq = static_cast<double>(summary.maxima_tail_count(x)) / static_cast<double>(n);
            se = detail::binomial_stderr(freq, n);
        }
        BoundReport anchored;
        anchored.name = "doob_anchored_x" + std::to_string(x);
        anchored.theoretical = summary.entry_size_mean() / static_cast<double>(x);
        anchored.empirical = freq;
        anchored.std_error = se;
        anchored.n = n;
        anchored.verdict = upper_bound_verdict(freq, anchored.theoretical, se);
        anchored.note = "P(excursion max >= x) vs mean entry size / x";
        out.push_back(std::move(anchored));

        BoundReport km1;
        km1.name = "doob_km1_x" + std::to_string(x);
        km1.theoretical = static_cast<double>(K - 1) / static_cast<double>(x);
        km1.empirical = freq;
        km1.std_error = se;
        km1.n = n;
        km1.verdict = upper_bound_verdict(freq, km1.theoretical, se);
        km1.note = "(K-1)/x presumes entry at K-1; informational, not asserted";
        out.push_back(std::move(km1));
    }
    return out;
}

/// Per-excursion absorption probability from level K-1 against the 1/K
/// bound.  Asserted only for unit-step laws that are submartingales below
/// K; otherwise the numbers are reported as inconclusive.
inline BoundReport check_hit_zero(const EnsembleSummary& summary, const Model& model,
                                  std::int64_t K) {
    BoundReport r;
    r.name = "hit_zero_per_excursion";
    r.theoretical = 1.0 / static_cast<double>(K);
    const auto n = static_cast<std::int64_t>(summary.n_below_from_km1);
    r.n = n;
    if (n > 0) {
        r.empirical = static_cast<double>(summary.n_below_from_km1_hit_zero) /
                      static_cast<double>(n);
        r.std_error = detail::binomial_stderr(r.empirical, n);
    } else {
        r.empirical = std::numeric_limits<double>::quiet_NaN();
    }
    const bool asserted = detail::unit_step(model) && detail::below_submartingale(model);
    if (asserted) {
        r.verdict = upper_bound_verdict(r.empirical, r.theoretical, r.std_error);
        r.note = "below-K excursions starting at K-1 that end in absorption";
    } else {
        r.verdict = Verdict::inconclusive;
        r.note = "below-K submartingale / unit-step condition not established; "
                 "bound not asserted";
    }
    return r;
}

/// Geometric decay of excursion counts: P(at least k above-K excursions)
/// <= p^k over extinct replicates, plus the companion claim that extinction
/// takes at least K below-K excursions on average.
inline std::vector<BoundReport> check_excursion_geometry(const EnsembleSummary& summary,
                                                         const Model& model,
                                                         const EpsilonK& eps_k,
                                                         std::int64_t k_hi = 5) {
    if (eps_k.k != summary.capacity) {
        throw std::invalid_argument("check_excursion_geometry: EpsilonK.K != ensemble K");
    }
    std::vector<BoundReport> out;
    const std::int64_t n = summary.n_extinct;
    for (std::int64_t k = 1; k <= k_hi; ++k) {
        BoundReport r;
        r.name = "above_tail_k" + std::to_string(k);
        r.theoretical = std::pow(eps_k.p, static_cast<double>(k));
        if (n > 0) {
            r.empirical =
                static_cast<double>(summary.above_count_tail(k)) / static_cast<double>(n);
            r.std_error = detail::binomial_stderr(r.empirical, n);
        } else {
            r.empirical = std::numeric_limits<double>::quiet_NaN();
        }
        r.n = n;
        r.verdict = upper_bound_verdict(r.empirical, r.theoretical, r.std_error);
        r.note = "P(# above-K excursions >= k) over extinct replicates, p = 1 - eps^(K-1)";
        out.push_back(std::move(r));
    }

    BoundReport mean_below;
    mean_below.name = "mean_below_excursions";
    mean_below.theoretical = static_cast<double>(eps_k.k);
    mean_below.empirical = summary.below_count_mean();
    mean_below.std_error = summary.below_count_stderr();
    mean_below.n = n;
    const bool asserted = detail::unit_step(model) && detail::below_submartingale(model);
    if (asserted) {
        mean_below.verdict =
            lower_bound_verdict(mean_below.empirical, mean_below.theoretical,
                                mean_below.std_error);
        mean_below.note = "extinction takes on average at least K excursions";
    } else {
        mean_below.verdict = Verdict::inconclusive;
        mean_below.note = "below-K submartingale / unit-step condition not established; "
                          "bound not asserted";
    }
    out.push_back(std::move(mean_below));
    return out;
}

/// Expected duration of above-K excursions under uniformly negative drift:
/// per excursion at most (Z_mu - K + 1)/delta, with the aggregate K/delta
/// figure read the same way and flagged as such.
inline std::vector<BoundReport> check_return_time(const EnsembleSummary& summary,
                                                  const Model& model, std::int64_t K,
                                                  double delta, std::int64_t c_max) {
    if (!(delta > 0.0)) throw std::invalid_argument("check_return_time: delta must be > 0");
    if (std::max(model.max_up_jump(), model.max_down_jump()) > c_max) {
        throw std::invalid_argument("check_return_time: model jumps exceed c_max");
    }
    bool drift_ok = true;
    for (std::int64_t z = K; z <= model.spec().validation_z_max(); ++z) {
        if (model.drift({z, 1}) > -delta + 1e-12) drift_ok = false;
    }

    const auto n = static_cast<std::int64_t>(summary.n_above_complete);
    const double emp = summary.above_duration_mean();
    const double se = summary.above_duration_stderr();

    std::vector<BoundReport> out;
    BoundReport per;
    per.name = "return_time_per_excursion";
    per.theoretical = (summary.entry_size_mean() - static_cast<double>(K) + 1.0) / delta;
    per.empirical = emp;
    per.std_error = se;
    per.n = n;
    if (drift_ok) {
        per.verdict = upper_bound_verdict(emp, per.theoretical, se);
        per.note = "mean above-K excursion duration vs (mean entry - K + 1)/delta";
    } else {
        per.verdict = Verdict::inconclusive;
        per.note = "drift above K not uniformly <= -delta (checked K.." +
                   std::to_string(model.spec().validation_z_max()) + "); bound not asserted";
    }
    out.push_back(std::move(per));

    BoundReport agg;
    agg.name = "return_time_aggregate";
    agg.theoretical = static_cast<double>(K) / delta;
    agg.empirical = emp;
    agg.std_error = se;
    agg.n = n;
    if (drift_ok) {
        agg.verdict = upper_bound_verdict(emp, agg.theoretical, se);
    } else {
        agg.verdict = Verdict::inconclusive;
    }
    agg.note = "K/delta read as the expected duration of each above-capacity excursion";
    out.push_back(std::move(agg));
    return out;
}

struct ScalingRow {
    std::int64_t k = 0;
    std::int64_t z0 = 0;
    double mean_time = std::numeric_limits<double>::quiet_NaN();
    double std_error = std::numeric_limits<double>::quiet_NaN();
    std::int64_t n_extinct = 0;
    std::int64_t n_censored = 0;
    double oracle_mean = std::numeric_limits<double>::quiet_NaN();
};

struct ScalingTable {
    std::vector<ScalingRow> rows;
    bool has_fit = false;
    double log_slope = std::numeric_limits<double>::quiet_NaN();
    double log_intercept = std::numeric_limits<double>::quiet_NaN();
    std::string growth = "n/a";  // "exponential" | "non_exponential" | "n/a"
};

inline std::string scaling_csv(const ScalingTable& t) {
    std::string out = "K,z0,mean_time,stderr,n_extinct,n_censored,oracle_mean\n";
    for (const auto& r : t.rows) {
        out += std::to_string(r.k) + ',' + std::to_string(r.z0) + ',' +
               format_double(r.mean_time) + ',' + format_double(r.std_error) + ',' +
               std::to_string(r.n_extinct) + ',' + std::to_string(r.n_censored) + ',' +
               format_double(r.oracle_mean) + '\n';
    }
    return out;
}

/// Mean extinction time as the capacity grows, for one spec family with K
/// overridden per row.  Each row carries the exact-oracle mean when the
/// family's state space is effectively bounded (otherwise NaN).  With at
/// least two usable rows the table reports a least-squares slope of
/// log(mean time) against K; with at least three it classifies the growth
/// by comparing that fit against one in log K.
inline ScalingTable scan_capacity(const ModelSpec& family,
                                  const std::vector<std::int64_t>& k_list, std::int64_t reps,
                                  std::int64_t budget, std::uint64_t seed,
                                  std::int64_t parallelism = 1, std::int64_t z0_offset = -1) {
    if (k_list.empty()) throw std::invalid_argument("scan_capacity: empty K list");
    ScalingTable table;
    for (const std::int64_t K : k_list) {
        ModelSpec spec = family;
        spec.capacity = K;
        spec.z_max = 0;  // revalidate against 4K per row
        const Model model = build_model(spec);

        EnsembleConfig cfg;
        cfg.reps = reps;
        cfg.step_budget = budget;
        cfg.master_seed = seed;
        cfg.parallelism = parallelism;
        cfg.capacity = K;
        cfg.z0 = std::max<std::int64_t>(1, K + z0_offset);
        const EnsembleSummary summary = run_ensemble(model, cfg);

        ScalingRow row;
        row.k = K;
        row.z0 = cfg.z0;
        row.n_extinct = summary.n_extinct;
        row.n_censored = summary.n_censored;
        row.mean_time = summary.extinction_time_mean();
        row.std_error = summary.extinction_time_stderr();
        if (model.size_only()) {
            try {
                const std::int64_t cap = std::min<std::int64_t>(10000, K + 200);
                const ExactSolution sol = exact_absorption(model, cap);
                if (sol.certified(cfg.z0)) {
                    row.oracle_mean = sol.expected_steps[static_cast<std::size_t>(cfg.z0)];
                }
            } catch (const std::exception&) {
                // Not effectively bounded; the row keeps a NaN oracle.
            }
        }
        table.rows.push_back(row);
    }

    // Least-squares fit of log(mean) over rows with a usable mean.
    std::vector<double> xs, ys;
    for (const auto& r : table.rows) {
        if (std::isfinite(r.mean_time) && r.mean_time > 0.0) {
            xs.push_back(static_cast<double>(r.k));
            ys.push_back(std::log(r.mean_time));
        }
    }
    if (xs.size() >= 2) {
        auto fit = [](const std::vector<double>& x, const std::vector<double>& y,
                      double& slope, double& intercept) {
            const auto n = static_cast<double>(x.size());
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                sx += x[i];
                sy += y[i];
                sxx += x[i] * x[i];
                sxy += x[i] * y[i];
            }
            slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            intercept = (sy - slope * sx) / n;
        };
        table.has_fit = true;
        fit(xs, ys, table.log_slope, table.log_intercept);
        if (xs.size() >= 3) {
            auto sse = [&](const std::vector<double>& x) {
                double slope, intercept, s = 0.0;
                fit(x, ys, slope, intercept);
                for (std::size_t i = 0; i < x.size(); ++i) {
                    const double r = ys[i] - (slope * x[i] + intercept);
                    s += r * r;
                }
                return s;
            };
            std::vector<double> log_xs(xs.size());
            std::transform(xs.begin(), xs.end(), log_xs.begin(),
                           [](double v) { return std::log(v); });
            const bool exponential = table.log_slope > 0.0 && sse(xs) <= sse(log_xs);
            table.growth = exponential ? "exponential" : "non_exponential";
        }
    }
    return table;
}

}  // namespace softcap
