// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace softcap {

enum class Verdict { holds, violated, inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::holds: return "holds";
        case Verdict::violated: return "violated";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

/// One theoretical bound against its empirical estimate.  `std_error` is
/// the standard error of `empirical` (0 for analytic or exact entries);
/// `n` is the sample size behind the estimate.  `note` carries context and
/// caveats; it appears in JSON output only.
struct BoundReport {
    std::string name;
    double theoretical = 0.0;
    double empirical = 0.0;
    double std_error = 0.0;
    std::int64_t n = 0;
    Verdict verdict = Verdict::inconclusive;
    std::string note;
};

/// Verdict for a claim "empirical <= theoretical".  Violations need the
/// empirical value to clear the bound by more than three standard errors
/// (plus an absolute slack for analytic scans); anything between holds and
/// that margin is inconclusive.
inline Verdict upper_bound_verdict(double empirical, double theoretical, double std_error,
                                   double slack = 0.0) {
    if (!std::isfinite(empirical) || !std::isfinite(theoretical)) {
        return Verdict::inconclusive;
    }
    if (empirical <= theoretical + slack) return Verdict::holds;
    if (empirical > theoretical + 3.0 * std_error + slack) return Verdict::violated;
    return Verdict::inconclusive;
}

/// Verdict for a claim "empirical >= theoretical" (mirror image).
inline Verdict lower_bound_verdict(double empirical, double theoretical, double std_error,
                                   double slack = 0.0) {
    return upper_bound_verdict(theoretical, empirical, std_error, slack);
}

/// Verdict for a two-sided claim "empirical == theoretical" at 3 sigma.
inline Verdict agreement_verdict(double empirical, double theoretical, double std_error) {
    if (!std::isfinite(empirical) || !std::isfinite(theoretical)) {
        return Verdict::inconclusive;
    }
    return std::abs(empirical - theoretical) <= 3.0 * std_error ? Verdict::holds
                                                                : Verdict::violated;
}

/// Shortest round-trip decimal form, byte-stable across runs.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// RFC-4180 field quoting: quote when the field contains a comma, quote,
/// or newline; double any embedded quotes.
inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

inline std::string reports_csv_header() { return "name,theoretical,empirical,stderr,n,verdict"; }

inline std::string report_csv_row(const BoundReport& r) {
    return csv_escape(r.name) + ',' + format_double(r.theoretical) + ',' +
           format_double(r.empirical) + ',' + format_double(r.std_error) + ',' +
           std::to_string(r.n) + ',' + to_string(r.verdict);
}

inline std::string reports_csv(const std::vector<BoundReport>& reports) {
    std::string out = reports_csv_header();
    out += '\n';
    for (const auto& r : reports) {
        out += report_csv_row(r);
        out += '\n';
    }
    return out;
}

inline bool any_violated(const std::vector<BoundReport>& reports) {
    for (const auto& r : reports) {
        if (r.verdict == Verdict::violated) return true;
    }
    return false;
}

}  // namespace softcap
