// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "softcap/models.hpp"

namespace softcap {

/// Exact absorption quantities on the truncated state space {0..state_cap}.
///
/// States from which a jump could leave the truncation window form an
/// absorbing "escape band"; escape_probability[z] is the chance of entering
/// that band before 0.  A start state is certified when that chance is at
/// most `tolerance`: extinction_probability then matches the untruncated
/// process within tolerance, and expected_steps within tolerance times the
/// residual post-escape time.  Band states themselves report probability 0
/// and time 0 and are never certified.
struct ExactSolution {
    std::int64_t state_cap = 0;
    double tolerance = 0.0;
    std::vector<double> extinction_probability;  // index = start size
    std::vector<double> expected_steps;
    std::vector<double> escape_probability;

    bool certified(std::int64_t z) const {
        return z >= 0 && z <= state_cap &&
               escape_probability[static_cast<std::size_t>(z)] <= tolerance;
    }
};

/// First-step analysis on the truncated chain: solves the banded linear
/// systems for extinction probability and expected absorption time by LU
/// elimination without pivoting (the matrix is a diagonally dominant
/// M-matrix, so this is stable).  Dense direct solving is the trust
/// anchor; the operation refuses more than 10^4 states rather than
/// approximate.
inline ExactSolution exact_absorption(const Model& model, std::int64_t state_cap,
                                      double tolerance = 1e-12) {
    if (!model.size_only()) {
        throw std::invalid_argument(
            "exact_absorption: law depends on visit history, not size-only Markov");
    }
    if (state_cap < model.capacity()) {
        throw std::invalid_argument("exact_absorption: state_cap below capacity K");
    }
    if (state_cap > 10000) {
        throw std::invalid_argument("exact_absorption: refusing more than 10^4 states");
    }

    const auto cap = state_cap;
    // Escape band: states whose support can jump past the cap.  For every
    // cataloged law the remaining transient states form a contiguous block
    // 1..m; verify rather than assume.
    std::vector<ChangePMF> laws(static_cast<std::size_t>(cap) + 1);
    std::int64_t m = 0;
    bool in_band = false;
    for (std::int64_t z = 1; z <= cap; ++z) {
        laws[static_cast<std::size_t>(z)] = model.conditional_law({z, 1});
        bool overflows = false;
        for (const auto& a : laws[static_cast<std::size_t>(z)].atoms) {
            if (z + a.change > cap) overflows = true;
        }
        if (!overflows && in_band) {
            throw std::invalid_argument("exact_absorption: non-contiguous bounded region");
        }
        if (overflows) in_band = true;
        else m = z;
    }
    if (m == 0) {
        throw std::invalid_argument(
            "exact_absorption: every state can escape the truncation window");
    }

    // Banded system (I - P) x = rhs over states 1..m, with 0 and the band
    // absorbing.  Two right-hand sides: hitting-0 probability and +1 per
    // step for the expected time.
    const std::int64_t lw = model.max_down_jump();
    const std::int64_t uw = model.max_up_jump();
    const std::int64_t width = lw + uw + 1;
    std::vector<double> A(static_cast<std::size_t>(m * width), 0.0);
    std::vector<double> rhs_a(static_cast<std::size_t>(m), 0.0);
    std::vector<double> rhs_t(static_cast<std::size_t>(m), 1.0);
    auto at = [&](std::int64_t row, std::int64_t col) -> double& {
        // row, col are state indices in 1..m with |col - row| within band.
        return A[static_cast<std::size_t>((row - 1) * width + (col - row + lw))];
    };
    for (std::int64_t z = 1; z <= m; ++z) {
        at(z, z) = 1.0;
        for (const auto& a : laws[static_cast<std::size_t>(z)].atoms) {
            const std::int64_t to = z + a.change;
            if (to == 0) {
                rhs_a[static_cast<std::size_t>(z - 1)] += a.prob;
            } else if (to <= m) {
                at(z, to) -= a.prob;
            }
            // Jumps into the band contribute to neither system: the band
            // absorbs with extinction probability 0 and time 0.
        }
    }

    // In-place banded LU with forward elimination applied to both RHS.
    for (std::int64_t j = 1; j <= m; ++j) {
        const double piv = at(j, j);
        if (!(piv > 1e-14)) {
            throw std::runtime_error("exact_absorption: singular system at state " +
                                     std::to_string(j));
        }
        for (std::int64_t i = j + 1; i <= std::min(j + lw, m); ++i) {
            const double f = at(i, j) / piv;
            if (f == 0.0) continue;
            at(i, j) = 0.0;
            for (std::int64_t c = j + 1; c <= std::min(j + uw, m); ++c) {
                at(i, c) -= f * at(j, c);
            }
            rhs_a[static_cast<std::size_t>(i - 1)] -= f * rhs_a[static_cast<std::size_t>(j - 1)];
            rhs_t[static_cast<std::size_t>(i - 1)] -= f * rhs_t[static_cast<std::size_t>(j - 1)];
        }
    }
    for (std::int64_t j = m; j >= 1; --j) {
        double xa = rhs_a[static_cast<std::size_t>(j - 1)];
        double xt = rhs_t[static_cast<std::size_t>(j - 1)];
        for (std::int64_t c = j + 1; c <= std::min(j + uw, m); ++c) {
            xa -= at(j, c) * rhs_a[static_cast<std::size_t>(c - 1)];
            xt -= at(j, c) * rhs_t[static_cast<std::size_t>(c - 1)];
        }
        rhs_a[static_cast<std::size_t>(j - 1)] = xa / at(j, j);
        rhs_t[static_cast<std::size_t>(j - 1)] = xt / at(j, j);
    }

    ExactSolution sol;
    sol.state_cap = cap;
    sol.tolerance = tolerance;
    sol.extinction_probability.assign(static_cast<std::size_t>(cap) + 1, 0.0);
    sol.expected_steps.assign(static_cast<std::size_t>(cap) + 1, 0.0);
    sol.escape_probability.assign(static_cast<std::size_t>(cap) + 1, 1.0);
    sol.extinction_probability[0] = 1.0;
    sol.escape_probability[0] = 0.0;
    for (std::int64_t z = 1; z <= m; ++z) {
        const double a = std::clamp(rhs_a[static_cast<std::size_t>(z - 1)], 0.0, 1.0);
        sol.extinction_probability[static_cast<std::size_t>(z)] = a;
        sol.expected_steps[static_cast<std::size_t>(z)] =
            std::max(0.0, rhs_t[static_cast<std::size_t>(z - 1)]);
        // Absorption on the finite chain is certain, so escape = 1 - hit 0.
        sol.escape_probability[static_cast<std::size_t>(z)] = std::max(0.0, 1.0 - a);
    }

    bool any_certified = false;
    for (std::int64_t z = 1; z <= std::min(model.capacity(), m); ++z) {
        if (sol.certified(z)) any_certified = true;
    }
    if (!any_certified) {
        throw std::invalid_argument(
            "exact_absorption: state space not effectively bounded at tolerance " +
            std::to_string(tolerance) + " (escape mass too large below K)");
    }
    return sol;
}

}  // namespace softcap
