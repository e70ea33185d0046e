// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "softcap/absorption.hpp"
#include "softcap/engine.hpp"
#include "softcap/report.hpp"
#include "softcap/verify.hpp"

namespace softcap::cli {

using ordered_json = nlohmann::ordered_json;

/// All emitters produce byte-identical output for identical inputs: key
/// order is insertion order, doubles print in shortest round-trip form,
/// and NaN (undefined statistics) serializes as null.

inline ordered_json summary_json(const EnsembleSummary& s) {
    ordered_json j;
    j["reps"] = s.reps;
    j["K"] = s.capacity;
    j["z0"] = s.z0;
    j["master_seed"] = s.master_seed;
    j["step_budget"] = s.step_budget;
    j["n_extinct"] = s.n_extinct;
    j["n_censored"] = s.n_censored;
    j["n_failed"] = s.n_failed;
    if (s.n_failed > 0) {
        j["first_failed_index"] = s.first_failed_index;
        j["first_failure"] = s.first_failure;
    }
    j["extinction_frequency"] = s.extinction_frequency();
    j["extinction_time"] = {{"mean", s.extinction_time_mean()},
                            {"stderr", s.extinction_time_stderr()}};
    j["below_excursions"] = {{"completed", s.n_below_complete},
                             {"from_km1", s.n_below_from_km1},
                             {"from_km1_hit_zero", s.n_below_from_km1_hit_zero},
                             {"per_extinct_mean", s.below_count_mean()},
                             {"per_extinct_stderr", s.below_count_stderr()}};
    j["above_excursions"] = {{"started", s.n_above_started},
                             {"completed", s.n_above_complete},
                             {"entry_size_mean", s.entry_size_mean()},
                             {"duration_mean", s.above_duration_mean()},
                             {"duration_stderr", s.above_duration_stderr()}};
    // Sparse histograms as [value, count] pairs; the top bin clamps.
    ordered_json maxima = ordered_json::array();
    for (std::size_t i = 0; i < s.maxima_hist.size(); ++i) {
        if (s.maxima_hist[i] > 0) maxima.push_back({i, s.maxima_hist[i]});
    }
    j["above_maxima_hist"] = std::move(maxima);
    ordered_json counts = ordered_json::array();
    for (std::size_t i = 0; i < s.above_count_extinct_hist.size(); ++i) {
        if (s.above_count_extinct_hist[i] > 0) {
            counts.push_back({i, s.above_count_extinct_hist[i]});
        }
    }
    j["above_count_extinct_hist"] = std::move(counts);
    return j;
}

inline ordered_json reports_json(const std::vector<BoundReport>& reports) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : reports) {
        ordered_json j;
        j["name"] = r.name;
        j["theoretical"] = r.theoretical;
        j["empirical"] = r.empirical;
        j["stderr"] = r.std_error;
        j["n"] = r.n;
        j["verdict"] = to_string(r.verdict);
        j["note"] = r.note;
        arr.push_back(std::move(j));
    }
    return arr;
}

inline std::string oracle_csv(const ExactSolution& sol) {
    std::string out = "z,extinction_prob,expected_steps,escape_prob,certified\n";
    for (std::int64_t z = 0; z <= sol.state_cap; ++z) {
        const auto i = static_cast<std::size_t>(z);
        out += std::to_string(z) + ',' + format_double(sol.extinction_probability[i]) +
               ',' + format_double(sol.expected_steps[i]) + ',' +
               format_double(sol.escape_probability[i]) + ',' +
               (sol.certified(z) ? "true" : "false") + '\n';
    }
    return out;
}

inline ordered_json oracle_json(const ExactSolution& sol) {
    ordered_json j;
    j["state_cap"] = sol.state_cap;
    j["tolerance"] = sol.tolerance;
    ordered_json states = ordered_json::array();
    for (std::int64_t z = 0; z <= sol.state_cap; ++z) {
        const auto i = static_cast<std::size_t>(z);
        ordered_json row;
        row["z"] = z;
        row["extinction_prob"] = sol.extinction_probability[i];
        row["expected_steps"] = sol.expected_steps[i];
        row["escape_prob"] = sol.escape_probability[i];
        row["certified"] = sol.certified(z);
        states.push_back(std::move(row));
    }
    j["states"] = std::move(states);
    return j;
}

inline ordered_json scan_json(const ScalingTable& t) {
    ordered_json j;
    ordered_json rows = ordered_json::array();
    for (const auto& r : t.rows) {
        ordered_json row;
        row["K"] = r.k;
        row["z0"] = r.z0;
        row["mean_time"] = r.mean_time;
        row["stderr"] = r.std_error;
        row["n_extinct"] = r.n_extinct;
        row["n_censored"] = r.n_censored;
        row["oracle_mean"] = r.oracle_mean;
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    j["fit"] = {{"has_fit", t.has_fit},
                {"log_slope", t.log_slope},
                {"log_intercept", t.log_intercept},
                {"growth", t.growth}};
    return j;
}

inline std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace softcap::cli
