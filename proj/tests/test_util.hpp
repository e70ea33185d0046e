// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "softcap/engine.hpp"
#include "softcap/excursions.hpp"
#include "softcap/models.hpp"
#include "softcap/process.hpp"
#include "softcap/rng.hpp"

namespace testutil {

using namespace softcap;

// One representative valid spec per kind.
inline std::vector<ModelSpec> catalog() {
    std::vector<ModelSpec> out;
    {
        ModelSpec s;
        s.kind = ModelKind::ratio_birth_death;
        s.capacity = 6;
        out.push_back(s);
    }
    {
        ModelSpec s;
        s.kind = ModelKind::biased_walk;
        s.capacity = 5;
        s.delta = 0.3;
        out.push_back(s);
    }
    {
        ModelSpec s;
        s.kind = ModelKind::moran_toy;
        s.capacity = 4;
        s.offspring_pmf = {{0, 0.6}, {2, 0.3}, {3, 0.1}};  // drift -0.1
        out.push_back(s);
    }
    {
        ModelSpec s;
        s.kind = ModelKind::cell_cycle;
        s.capacity = 2;
        s.p_die = {0.4, 0.5, 0.6, 0.7};
        out.push_back(s);
    }
    {
        ModelSpec s;
        s.kind = ModelKind::symmetric_walk;
        s.capacity = 5;
        out.push_back(s);
    }
    {
        ModelSpec s;
        s.kind = ModelKind::counterexample;
        s.capacity = 2;
        s.decay_base = 0.5;
        out.push_back(s);
    }
    return out;
}

inline std::int64_t rand_range(PhiloxRng& rng, std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng.next_u64() %
                                          static_cast<std::uint64_t>(hi - lo + 1));
}

// Random valid spec drawn from parameterized families.
inline ModelSpec random_spec(PhiloxRng& rng) {
    ModelSpec s;
    switch (rand_range(rng, 0, 5)) {
        case 0:
            s.kind = ModelKind::ratio_birth_death;
            s.capacity = rand_range(rng, 1, 12);
            break;
        case 1:
            s.kind = ModelKind::biased_walk;
            s.capacity = rand_range(rng, 1, 12);
            s.delta = 0.1 + 0.1 * static_cast<double>(rand_range(rng, 0, 8));
            break;
        case 2: {
            s.kind = ModelKind::moran_toy;
            s.capacity = rand_range(rng, 1, 8);
            switch (rand_range(rng, 0, 2)) {
                case 0: s.offspring_pmf = {{0, 0.5}, {2, 0.5}}; break;
                case 1: s.offspring_pmf = {{0, 0.7}, {3, 0.3}}; break;
                default: s.offspring_pmf = {{0, 0.6}, {2, 0.3}, {3, 0.1}}; break;
            }
            break;
        }
        case 3: {
            s.kind = ModelKind::cell_cycle;
            switch (rand_range(rng, 0, 2)) {
                case 0:
                    s.capacity = 1;
                    s.p_die = {0.55};
                    break;
                case 1:
                    s.capacity = 2;
                    s.p_die = {0.4, 0.5, 0.6, 0.7};
                    break;
                default:
                    s.capacity = 3;
                    s.p_die = {0.3, 0.3, 0.9};
                    break;
            }
            break;
        }
        case 4:
            s.kind = ModelKind::symmetric_walk;
            s.capacity = rand_range(rng, 2, 12);
            break;
        default:
            s.kind = ModelKind::counterexample;
            s.capacity = 2;
            s.decay_base = 0.3 + 0.1 * static_cast<double>(rand_range(rng, 0, 5));
            break;
    }
    return s;
}

// Excursion counters re-derived from full traces via the post-hoc
// decomposition, for cross-checking the engine's streaming tracker.
struct TraceAggregate {
    std::int64_t n_extinct = 0;
    std::int64_t n_censored = 0;
    std::uint64_t sum_extinct_steps = 0;
    std::uint64_t n_below_complete = 0;
    std::uint64_t n_below_from_km1 = 0;
    std::uint64_t n_below_from_km1_hit_zero = 0;
    std::uint64_t sum_below_extinct = 0;
    std::uint64_t n_above_started = 0;
    std::uint64_t n_above_complete = 0;
    std::uint64_t sum_entry_size = 0;
    std::uint64_t sum_above_duration = 0;
    std::vector<std::uint64_t> maxima_hist = std::vector<std::uint64_t>(4096, 0);
    std::vector<std::uint64_t> above_count_extinct_hist = std::vector<std::uint64_t>(256, 0);
};

inline void accumulate(TraceAggregate& agg, const Trace& t, std::int64_t K) {
    const ExcursionDecomposition d = decompose(t, K);
    const ExcursionStats s = excursion_stats(t, K);
    const bool extinct = t.status == TraceStatus::extinct;
    if (extinct) {
        ++agg.n_extinct;
        agg.sum_extinct_steps += static_cast<std::uint64_t>(t.steps_used);
        agg.sum_below_extinct += static_cast<std::uint64_t>(s.n_below_excursions);
        ++agg.above_count_extinct_hist[static_cast<std::size_t>(
            std::min<std::int64_t>(static_cast<std::int64_t>(d.mu.size()), 255))];
    } else {
        ++agg.n_censored;
    }
    agg.n_below_complete += static_cast<std::uint64_t>(s.n_below_excursions);
    // Below-excursion k is complete when mu[k] exists or the trace died in it.
    for (std::size_t k = 0; k < d.nu.size(); ++k) {
        const bool complete = k < d.mu.size() || (extinct && k + 1 == d.nu.size());
        if (!complete || d.z_at_nu[k] != K - 1) continue;
        ++agg.n_below_from_km1;
        if (extinct && k + 1 == d.nu.size()) ++agg.n_below_from_km1_hit_zero;
    }
    agg.n_above_started += d.mu.size();
    agg.n_above_complete += static_cast<std::uint64_t>(s.n_above_excursions);
    for (std::size_t k = 0; k < static_cast<std::size_t>(s.n_above_excursions); ++k) {
        agg.sum_entry_size += static_cast<std::uint64_t>(
            t.sizes[static_cast<std::size_t>(d.mu[k])]);
        agg.sum_above_duration += static_cast<std::uint64_t>(s.above_durations[k]);
        ++agg.maxima_hist[static_cast<std::size_t>(
            std::min<std::int64_t>(s.above_maxima[k], 4095))];
    }
}

// Expected absorption time for unit-step laws on transient states 1..m
// (0 and m+1 absorbing), via the Thomas tridiagonal algorithm: an
// independent solver for cross-checking the banded LU.
inline std::vector<double> thomas_expected_time(const Model& model, std::int64_t m) {
    std::vector<double> sub(m + 1, 0.0), diag(m + 1, 0.0), sup(m + 1, 0.0), rhs(m + 1, 1.0);
    for (std::int64_t z = 1; z <= m; ++z) {
        diag[z] = 1.0;
        for (const auto& a : model.conditional_law({z, 1}).atoms) {
            if (a.change == -1 && z > 1) sub[z] = -a.prob;
            if (a.change == 1 && z < m) sup[z] = -a.prob;
        }
    }
    for (std::int64_t z = 2; z <= m; ++z) {
        const double w = sub[z] / diag[z - 1];
        diag[z] -= w * sup[z - 1];
        rhs[z] -= w * rhs[z - 1];
    }
    std::vector<double> t(m + 1, 0.0);
    t[m] = rhs[m] / diag[m];
    for (std::int64_t z = m - 1; z >= 1; --z) {
        t[z] = (rhs[z] - sup[z] * t[z + 1]) / diag[z];
    }
    return t;  // index by state, t[0] unused
}

// Generic value iteration for expected absorption time with 0 and any
// state that can overshoot `cap` absorbing.  Small chains only.
inline std::vector<double> value_iteration_time(const Model& model, std::int64_t cap,
                                                double tol = 1e-11,
                                                std::int64_t max_iter = 2000000) {
    std::vector<bool> band(static_cast<std::size_t>(cap) + 1, false);
    std::vector<ChangePMF> laws(static_cast<std::size_t>(cap) + 1);
    for (std::int64_t z = 1; z <= cap; ++z) {
        laws[static_cast<std::size_t>(z)] = model.conditional_law({z, 1});
        for (const auto& a : laws[static_cast<std::size_t>(z)].atoms) {
            if (z + a.change > cap) band[static_cast<std::size_t>(z)] = true;
        }
    }
    std::vector<double> t(static_cast<std::size_t>(cap) + 1, 0.0);
    for (std::int64_t it = 0; it < max_iter; ++it) {
        double worst = 0.0;
        for (std::int64_t z = 1; z <= cap; ++z) {
            if (band[static_cast<std::size_t>(z)]) continue;
            double v = 1.0;
            for (const auto& a : laws[static_cast<std::size_t>(z)].atoms) {
                const std::int64_t to = z + a.change;
                if (to >= 1 && !band[static_cast<std::size_t>(to)]) {
                    v += a.prob * t[static_cast<std::size_t>(to)];
                }
            }
            worst = std::max(worst, std::abs(v - t[static_cast<std::size_t>(z)]));
            t[static_cast<std::size_t>(z)] = v;  // Gauss-Seidel style update
        }
        if (worst < tol) return t;
    }
    throw std::runtime_error("value_iteration_time: no convergence");
}

}  // namespace testutil
