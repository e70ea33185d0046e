// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "softcap/models.hpp"
#include "softcap/rng.hpp"

namespace softcap {

enum class TraceStatus { extinct, censored };

inline const char* to_string(TraceStatus s) {
    return s == TraceStatus::extinct ? "extinct" : "censored";
}

/// One realized size path Z_0, Z_1, ..., Z_T.  Absorption at 0 is final;
/// a censored trace ran out of step budget while still alive.
struct Trace {
    std::vector<std::int64_t> sizes;
    TraceStatus status = TraceStatus::censored;
    std::int64_t steps_used = 0;

    std::int64_t z0() const { return sizes.front(); }
    std::int64_t final_size() const { return sizes.back(); }
};

/// Applies one size change.  The absorbed state has no changes, changes are
/// nonzero, and the result may not go negative.
inline std::int64_t apply_change(std::int64_t z, std::int64_t c) {
    if (z <= 0) throw std::invalid_argument("apply_change: size 0 is absorbing");
    if (c == 0) throw std::invalid_argument("apply_change: changes are nonzero");
    if (z + c < 0) {
        throw std::invalid_argument("apply_change: change " + std::to_string(c) +
                                    " at size " + std::to_string(z) + " would go negative");
    }
    return z + c;
}

/// Samples the next change given a partial history.  Deterministic in
/// (model, history, rng state); advances the generator in place.
inline std::int64_t step(const Model& model, const Trace& history, PhiloxRng& rng) {
    if (history.sizes.empty()) throw std::invalid_argument("step: empty history");
    const std::int64_t z = history.sizes.back();
    if (z <= 0) throw std::invalid_argument("step: history is already absorbed");
    const auto visits =
        static_cast<std::int64_t>(std::count(history.sizes.begin(), history.sizes.end(), 1));
    return model.sample_change({z, visits}, rng);
}

struct WalkResult {
    std::int64_t final_size;
    std::int64_t steps;
    TraceStatus status;
};

/// Core sampling loop shared by simulate and the ensemble engine.  Invokes
/// on_size(z) after every applied change; allocates nothing itself.
template <typename OnSize>
WalkResult walk(const Model& model, std::int64_t z0, std::int64_t step_budget,
                PhiloxRng& rng, OnSize&& on_size) {
    if (z0 < 0) throw std::invalid_argument("walk: negative start size");
    if (step_budget < 0) throw std::invalid_argument("walk: negative step budget");
    std::int64_t z = z0;
    std::int64_t visits_at_one = (z == 1) ? 1 : 0;
    std::int64_t steps = 0;
    while (z > 0 && steps < step_budget) {
        const std::int64_t c = model.sample_change({z, visits_at_one}, rng);
        z += c;  // support is validated at build time; z stays >= 0
        ++steps;
        if (z == 1) ++visits_at_one;
        on_size(z);
    }
    return {z, steps, z == 0 ? TraceStatus::extinct : TraceStatus::censored};
}

/// Runs one full trace.  Takes the generator by value: equal inputs yield
/// the identical trace, and the caller's state is untouched.
inline Trace simulate(const Model& model, std::int64_t z0, std::int64_t step_budget,
                      PhiloxRng rng) {
    Trace t;
    t.sizes.push_back(z0);
    const WalkResult r =
        walk(model, z0, step_budget, rng, [&](std::int64_t z) { t.sizes.push_back(z); });
    t.status = r.status;
    t.steps_used = r.steps;
    return t;
}

/// One JSON-lines record per trace (no trailing newline).  Sizes are
/// optional and off by default; all fields are integers or fixed strings,
/// so the encoding is byte-stable.
inline std::string trace_jsonl(const Trace& t, bool with_sizes = false) {
    std::string out = "{\"z0\":" + std::to_string(t.z0());
    if (with_sizes) {
        out += ",\"sizes\":[";
        for (std::size_t i = 0; i < t.sizes.size(); ++i) {
            if (i) out += ',';
            out += std::to_string(t.sizes[i]);
        }
        out += ']';
    }
    out += ",\"status\":\"";
    out += to_string(t.status);
    out += "\",\"steps\":" + std::to_string(t.steps_used);
    out += ",\"final\":" + std::to_string(t.final_size());
    out += '}';
    return out;
}

}  // namespace softcap
