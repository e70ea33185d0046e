// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "softcap/excursions.hpp"
#include "softcap/models.hpp"
#include "softcap/process.hpp"
#include "softcap/rng.hpp"

namespace softcap {

static_assert(sizeof(unsigned __int128) == 16, "128-bit accumulators required");

struct EnsembleConfig {
    std::int64_t reps = 0;
    std::int64_t step_budget = 0;
    std::uint64_t master_seed = 1;
    std::int64_t parallelism = 1;
    bool record_full_traces = false;
    bool record_sizes = false;  // include the size path in spilled trace records
    std::int64_t capacity = 0;  // K, for excursion accounting
    std::int64_t z0 = 0;
};

/// Per-replicate stream derivation: replicate index becomes the generator's
/// stream id, so the mapping is injective and no stream overlaps another.
inline PhiloxRng derive_stream(std::uint64_t master_seed, std::uint64_t replicate_index) {
    return PhiloxRng(master_seed, replicate_index);
}

namespace detail {
constexpr std::int64_t kMaximaBins = 4096;      // tail queries exact for x < kMaximaBins
constexpr std::int64_t kAboveCountBins = 256;   // tail queries exact for k < kAboveCountBins
}  // namespace detail

/// Aggregate statistics over an ensemble.  Every field is an exact integer
/// count or sum, so merging partial summaries is associative and
/// commutative and results are bit-identical at any parallelism level.
/// Histograms are clamped into their top bin, which keeps tail counts
/// exact for every queryable argument.
struct EnsembleSummary {
    // Configuration echo.
    std::int64_t reps = 0;
    std::int64_t capacity = 0;
    std::int64_t z0 = 0;
    std::uint64_t master_seed = 0;
    std::int64_t step_budget = 0;

    // Outcomes.
    std::int64_t n_extinct = 0;
    std::int64_t n_censored = 0;
    std::int64_t n_failed = 0;
    std::int64_t first_failed_index = -1;
    std::string first_failure;

    // Steps to extinction, over extinct replicates.
    std::uint64_t sum_extinct_steps = 0;
    unsigned __int128 sumsq_extinct_steps = 0;

    // Completed below-K excursions (all replicates).
    std::uint64_t n_below_complete = 0;
    std::uint64_t n_below_from_km1 = 0;           // started at exactly K-1
    std::uint64_t n_below_from_km1_hit_zero = 0;  // ... and ended in absorption

    // Below-K excursion count per extinct replicate.
    std::uint64_t sum_below_extinct = 0;
    unsigned __int128 sumsq_below_extinct = 0;

    // Above-K excursions.
    std::uint64_t n_above_started = 0;   // entries at or above K (all replicates)
    std::uint64_t n_above_complete = 0;  // returned below K
    std::uint64_t sum_entry_size = 0;    // sum of Z at entry, completed excursions
    std::uint64_t sum_above_duration = 0;
    unsigned __int128 sumsq_above_duration = 0;
    std::vector<std::uint64_t> maxima_hist =
        std::vector<std::uint64_t>(detail::kMaximaBins, 0);  // index min(max, 4095)
    std::vector<std::uint64_t> above_count_extinct_hist =
        std::vector<std::uint64_t>(detail::kAboveCountBins, 0);  // per extinct replicate

    bool operator==(const EnsembleSummary&) const = default;

    void merge(const EnsembleSummary& part) {
        n_extinct += part.n_extinct;
        n_censored += part.n_censored;
        n_failed += part.n_failed;
        if (part.first_failed_index >= 0 &&
            (first_failed_index < 0 || part.first_failed_index < first_failed_index)) {
            first_failed_index = part.first_failed_index;
            first_failure = part.first_failure;
        }
        sum_extinct_steps += part.sum_extinct_steps;
        sumsq_extinct_steps += part.sumsq_extinct_steps;
        n_below_complete += part.n_below_complete;
        n_below_from_km1 += part.n_below_from_km1;
        n_below_from_km1_hit_zero += part.n_below_from_km1_hit_zero;
        sum_below_extinct += part.sum_below_extinct;
        sumsq_below_extinct += part.sumsq_below_extinct;
        n_above_started += part.n_above_started;
        n_above_complete += part.n_above_complete;
        sum_entry_size += part.sum_entry_size;
        sum_above_duration += part.sum_above_duration;
        sumsq_above_duration += part.sumsq_above_duration;
        for (std::size_t i = 0; i < maxima_hist.size(); ++i) {
            maxima_hist[i] += part.maxima_hist[i];
        }
        for (std::size_t i = 0; i < above_count_extinct_hist.size(); ++i) {
            above_count_extinct_hist[i] += part.above_count_extinct_hist[i];
        }
    }

    // Derived statistics.  Sums convert to double only here, at read time.
    double extinction_frequency() const {
        return reps > 0 ? static_cast<double>(n_extinct) / static_cast<double>(reps) : 0.0;
    }
    double extinction_time_mean() const {
        return mean_of(sum_extinct_steps, n_extinct);
    }
    double extinction_time_stderr() const {
        return stderr_of(sum_extinct_steps, sumsq_extinct_steps, n_extinct);
    }
    double below_count_mean() const { return mean_of(sum_below_extinct, n_extinct); }
    double below_count_stderr() const {
        return stderr_of(sum_below_extinct, sumsq_below_extinct, n_extinct);
    }
    double above_duration_mean() const {
        return mean_of(sum_above_duration, static_cast<std::int64_t>(n_above_complete));
    }
    double above_duration_stderr() const {
        return stderr_of(sum_above_duration, sumsq_above_duration,
                         static_cast<std::int64_t>(n_above_complete));
    }
    double entry_size_mean() const {
        return mean_of(sum_entry_size, static_cast<std::int64_t>(n_above_complete));
    }

    /// Number of completed above-K excursions whose maximum reached x.
    std::uint64_t maxima_tail_count(std::int64_t x) const {
        if (x < 0 || x >= detail::kMaximaBins) {
            throw std::invalid_argument("maxima_tail_count: x outside histogram range");
        }
        std::uint64_t c = 0;
        for (std::size_t i = static_cast<std::size_t>(x); i < maxima_hist.size(); ++i) {
            c += maxima_hist[i];
        }
        return c;
    }

    /// Number of extinct replicates with at least k above-K excursions.
    std::uint64_t above_count_tail(std::int64_t k) const {
        if (k < 0 || k >= detail::kAboveCountBins) {
            throw std::invalid_argument("above_count_tail: k outside histogram range");
        }
        std::uint64_t c = 0;
        for (std::size_t i = static_cast<std::size_t>(k); i < above_count_extinct_hist.size();
             ++i) {
            c += above_count_extinct_hist[i];
        }
        return c;
    }

private:
    static double mean_of(std::uint64_t sum, std::int64_t n) {
        return n > 0 ? static_cast<double>(sum) / static_cast<double>(n)
                     : std::numeric_limits<double>::quiet_NaN();
    }
    static double stderr_of(std::uint64_t sum, unsigned __int128 sumsq, std::int64_t n) {
        if (n < 2) return std::numeric_limits<double>::quiet_NaN();
        // n*sumsq - sum^2 is exact in 128-bit arithmetic and non-negative.
        const unsigned __int128 num =
            static_cast<unsigned __int128>(n) * sumsq -
            static_cast<unsigned __int128>(sum) * static_cast<unsigned __int128>(sum);
        const double variance = static_cast<double>(num) /
                                (static_cast<double>(n) * static_cast<double>(n - 1));
        return std::sqrt(variance / static_cast<double>(n));
    }
};

namespace detail {

/// Streaming counterpart of excursion_stats: consumes sizes as they are
/// generated and accumulates directly into an EnsembleSummary, so the
/// engine never materializes traces.  Counting rules match the post-hoc
/// decomposition exactly (a property test holds them together).
class ExcursionTracker {
public:
    ExcursionTracker(std::int64_t K, EnsembleSummary& out) : k_(K), out_(out) {}

    void begin(std::int64_t z0) {
        index_ = 0;
        below_count_ = 0;
        above_started_ = 0;
        if (z0 < k_) {
            phase_ = Phase::below;
            below_start_z_ = z0;
        } else {
            phase_ = Phase::pre_above;  // an initial >= K segment is not an excursion
        }
    }

    void observe(std::int64_t z) {
        ++index_;
        switch (phase_) {
            case Phase::below:
                if (z >= k_) {
                    complete_below(false);
                    phase_ = Phase::above;
                    ++above_started_;
                    ++out_.n_above_started;
                    entry_z_ = z;
                    entry_index_ = index_;
                    peak_ = z;
                }
                break;
            case Phase::above:
                if (z < k_) {
                    ++out_.n_above_complete;
                    out_.sum_entry_size += static_cast<std::uint64_t>(entry_z_);
                    const auto dur = static_cast<std::uint64_t>(index_ - entry_index_);
                    out_.sum_above_duration += dur;
                    out_.sumsq_above_duration +=
                        static_cast<unsigned __int128>(dur) * dur;
                    const auto bin = static_cast<std::size_t>(
                        std::min<std::int64_t>(peak_, kMaximaBins - 1));
                    ++out_.maxima_hist[bin];
                    phase_ = Phase::below;
                    below_start_z_ = z;
                } else {
                    peak_ = std::max(peak_, z);
                }
                break;
            case Phase::pre_above:
                if (z < k_) {
                    phase_ = Phase::below;
                    below_start_z_ = z;
                }
                break;
        }
    }

    void finish(TraceStatus status) {
        if (status == TraceStatus::extinct) {
            // Absorption happens below K, closing the current excursion.
            complete_below(true);
            out_.sum_below_extinct += static_cast<std::uint64_t>(below_count_);
            out_.sumsq_below_extinct +=
                static_cast<unsigned __int128>(below_count_) * below_count_;
            const auto bin = static_cast<std::size_t>(
                std::min<std::int64_t>(above_started_, kAboveCountBins - 1));
            ++out_.above_count_extinct_hist[bin];
        }
        // A censored tail (below or above) is incomplete and contributes
        // nothing, matching the decomposition-based statistics.
    }

private:
    enum class Phase { pre_above, below, above };

    void complete_below(bool absorbed) {
        ++below_count_;
        ++out_.n_below_complete;
        if (below_start_z_ == k_ - 1) {
            ++out_.n_below_from_km1;
            if (absorbed) ++out_.n_below_from_km1_hit_zero;
        }
    }

    std::int64_t k_;
    EnsembleSummary& out_;
    Phase phase_ = Phase::pre_above;
    std::int64_t index_ = 0;
    std::int64_t below_start_z_ = 0;
    std::int64_t entry_z_ = 0;
    std::int64_t entry_index_ = 0;
    std::int64_t peak_ = 0;
    std::int64_t below_count_ = 0;
    std::int64_t above_started_ = 0;
};

}  // namespace detail

inline void validate(const EnsembleConfig& cfg) {
    if (cfg.reps < 1) throw std::invalid_argument("ensemble: reps must be >= 1");
    if (cfg.step_budget < 0) throw std::invalid_argument("ensemble: negative step budget");
    if (cfg.parallelism < 1) throw std::invalid_argument("ensemble: parallelism must be >= 1");
    if (cfg.capacity < 1) throw std::invalid_argument("ensemble: capacity must be >= 1");
    if (cfg.z0 < 0) throw std::invalid_argument("ensemble: negative start size");
}

/// Runs `cfg.reps` replicates with per-replicate derived streams and merges
/// per-worker partial summaries in index order.  The result is a pure
/// function of (model, config): the parallelism degree changes neither the
/// summary nor the optional trace spill, whose records appear in replicate
/// order.  With record_full_traces off, memory stays O(parallelism).
inline EnsembleSummary run_ensemble(const Model& model, const EnsembleConfig& cfg,
                                    std::ostream* trace_sink = nullptr) {
    validate(cfg);
    if (cfg.capacity != model.capacity()) {
        throw std::invalid_argument("ensemble: capacity does not match the model's K");
    }
    const bool recording = cfg.record_full_traces && trace_sink != nullptr;
    const auto workers =
        static_cast<std::size_t>(std::min<std::int64_t>(cfg.parallelism, cfg.reps));

    std::vector<EnsembleSummary> parts(workers);
    std::vector<std::string> spills(workers);

    auto run_range = [&](std::size_t w, std::int64_t lo, std::int64_t hi) {
        EnsembleSummary& part = parts[w];
        detail::ExcursionTracker tracker(cfg.capacity, part);
        Trace trace;  // reused buffer; filled only when recording
        for (std::int64_t i = lo; i < hi; ++i) {
            try {
                PhiloxRng rng = derive_stream(cfg.master_seed, static_cast<std::uint64_t>(i));
                tracker.begin(cfg.z0);
                if (recording) {
                    trace.sizes.clear();
                    trace.sizes.push_back(cfg.z0);
                }
                const WalkResult r =
                    walk(model, cfg.z0, cfg.step_budget, rng, [&](std::int64_t z) {
                        tracker.observe(z);
                        if (recording) trace.sizes.push_back(z);
                    });
                tracker.finish(r.status);
                if (r.status == TraceStatus::extinct) {
                    ++part.n_extinct;
                    part.sum_extinct_steps += static_cast<std::uint64_t>(r.steps);
                    part.sumsq_extinct_steps +=
                        static_cast<unsigned __int128>(r.steps) * r.steps;
                } else {
                    ++part.n_censored;
                }
                if (recording) {
                    trace.status = r.status;
                    trace.steps_used = r.steps;
                    spills[w] += trace_jsonl(trace, cfg.record_sizes);
                    spills[w] += '\n';
                }
            } catch (const std::exception& e) {
                ++part.n_failed;
                if (part.first_failed_index < 0) {
                    part.first_failed_index = i;
                    part.first_failure = e.what();
                }
            }
        }
    };

    if (workers <= 1) {
        run_range(0, 0, cfg.reps);
    } else {
        const std::int64_t base = cfg.reps / static_cast<std::int64_t>(workers);
        const std::int64_t rem = cfg.reps % static_cast<std::int64_t>(workers);
        std::vector<std::thread> threads;
        threads.reserve(workers);
        std::int64_t lo = 0;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::int64_t size = base + (static_cast<std::int64_t>(w) < rem ? 1 : 0);
            threads.emplace_back(run_range, w, lo, lo + size);
            lo += size;
        }
        for (auto& t : threads) t.join();
    }

    EnsembleSummary out;
    out.reps = cfg.reps;
    out.capacity = cfg.capacity;
    out.z0 = cfg.z0;
    out.master_seed = cfg.master_seed;
    out.step_budget = cfg.step_budget;
    for (const auto& part : parts) out.merge(part);
    if (recording) {
        for (const auto& s : spills) *trace_sink << s;
    }
    return out;
}

}  // namespace softcap
