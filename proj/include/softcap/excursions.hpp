// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "softcap/process.hpp"

namespace softcap {

/// The stopping-time skeleton of a trace relative to a capacity K:
/// nu[k] is the k-th entry strictly below K, mu[k] the k-th return to
/// >= K after nu[k].  Indices are 0-based, so nu[0] = 0 whenever the
/// trace starts below K.
struct ExcursionDecomposition {
    std::vector<std::int64_t> nu;
    std::vector<std::int64_t> mu;
    std::vector<std::int64_t> z_at_nu;
    bool censored_tail = false;
};

inline ExcursionDecomposition decompose(const Trace& trace, std::int64_t K) {
    if (K < 1) throw std::invalid_argument("decompose: K must be >= 1");
    if (trace.sizes.empty()) throw std::invalid_argument("decompose: empty trace");
    ExcursionDecomposition d;
    bool below = false;
    for (std::size_t i = 0; i < trace.sizes.size(); ++i) {
        const std::int64_t z = trace.sizes[i];
        if (!below && z < K) {
            below = true;
            d.nu.push_back(static_cast<std::int64_t>(i));
            d.z_at_nu.push_back(z);
        } else if (below && z >= K) {
            below = false;
            d.mu.push_back(static_cast<std::int64_t>(i));
        }
    }
    d.censored_tail = trace.status == TraceStatus::censored;
    return d;
}

/// Per-trace excursion statistics.  Only complete excursions count: a
/// below-K excursion is complete when it reaches K again or ends in
/// absorption, an above-K excursion when it returns below K.  The
/// incomplete tail of a censored trace contributes nothing (that keeps
/// censoring bias out of duration/maximum aggregates).
struct ExcursionStats {
    std::int64_t n_below_excursions = 0;
    std::int64_t n_above_excursions = 0;
    std::vector<std::int64_t> above_durations;  // nu[k+1] - mu[k]
    std::vector<std::int64_t> above_maxima;     // max Z over [mu[k], nu[k+1])
    std::optional<std::size_t> extinct_in_excursion;  // 0-based below-excursion index
};

inline ExcursionStats excursion_stats(const Trace& trace, std::int64_t K) {
    const ExcursionDecomposition d = decompose(trace, K);
    ExcursionStats s;
    const auto n_below_started = d.nu.size();
    const auto n_above_started = d.mu.size();

    s.n_below_excursions = static_cast<std::int64_t>(n_above_started);
    if (trace.status == TraceStatus::extinct && n_below_started > n_above_started) {
        ++s.n_below_excursions;  // the final excursion ended in absorption
        s.extinct_in_excursion = n_below_started - 1;
    }

    for (std::size_t k = 0; k < n_above_started; ++k) {
        if (k + 1 >= n_below_started) break;  // censored mid-excursion
        const std::int64_t from = d.mu[k];
        const std::int64_t to = d.nu[k + 1];
        ++s.n_above_excursions;
        s.above_durations.push_back(to - from);
        std::int64_t peak = 0;
        for (std::int64_t i = from; i < to; ++i) {
            peak = std::max(peak, trace.sizes[static_cast<std::size_t>(i)]);
        }
        s.above_maxima.push_back(peak);
    }
    return s;
}

/// JSON-lines record for one decomposition (no trailing newline).
inline std::string decomposition_jsonl(const ExcursionDecomposition& d) {
    auto join = [](const std::vector<std::int64_t>& v) {
        std::string out = "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ',';
            out += std::to_string(v[i]);
        }
        out += ']';
        return out;
    };
    return "{\"nu\":" + join(d.nu) + ",\"mu\":" + join(d.mu) +
           ",\"censored\":" + (d.censored_tail ? "true" : "false") + "}";
}

}  // namespace softcap
