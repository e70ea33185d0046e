// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "softcap/rng.hpp"

namespace softcap {

/// Finite probability mass function over nonzero integer size changes.
struct ChangePMF {
    struct Atom {
        std::int64_t change;
        double prob;
    };
    std::vector<Atom> atoms;

    double total() const {
        double s = 0.0;
        for (const auto& a : atoms) s += a.prob;
        return s;
    }
};

enum class ModelKind {
    ratio_birth_death,
    biased_walk,
    moran_toy,
    cell_cycle,
    symmetric_walk,
    counterexample,
};

inline const char* to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::ratio_birth_death: return "ratio_birth_death";
        case ModelKind::biased_walk: return "biased_walk";
        case ModelKind::moran_toy: return "moran_toy";
        case ModelKind::cell_cycle: return "cell_cycle";
        case ModelKind::symmetric_walk: return "symmetric_walk";
        case ModelKind::counterexample: return "counterexample";
    }
    return "?";
}

struct OffspringAtom {
    std::int64_t count;  // replacement count j; the size change is j - 1
    double prob;
};

/// Declarative description of a cataloged change law.
///
/// Kind-specific parameters: `delta` (biased_walk), `offspring_pmf`
/// (moran_toy), `p_die` (cell_cycle, indexed by size starting at 1 and
/// clamped to its last entry beyond the table), `decay_base`
/// (counterexample).  `z_max` bounds the analytic validation scan and
/// defaults to 4K.
struct ModelSpec {
    ModelKind kind = ModelKind::ratio_birth_death;
    std::int64_t capacity = 0;  // K
    double delta = 0.0;
    std::vector<OffspringAtom> offspring_pmf;
    std::vector<double> p_die;
    double decay_base = 0.5;
    std::int64_t z_max = 0;  // 0 means "use 4*capacity"

    std::int64_t validation_z_max() const {
        return z_max > 0 ? z_max : 4 * capacity;
    }
};

/// The law state: current size, plus how many times size 1 has been
/// visited (indices 0..n).  Only the counterexample reads the visit count.
struct ModelState {
    std::int64_t z = 0;
    std::int64_t visits_at_one = 0;
};

/// A validated change law.  Immutable after construction; safe to share
/// across threads.
class Model {
public:
    const ModelSpec& spec() const { return spec_; }
    ModelKind kind() const { return spec_.kind; }
    std::int64_t capacity() const { return spec_.capacity; }

    /// Declared uniform death-risk floor; absent for the counterexample.
    bool has_death_floor() const { return has_floor_; }
    double death_floor() const {
        if (!has_floor_) {
            throw std::logic_error("Model::death_floor: no declared floor");
        }
        return floor_;
    }

    /// True when the law depends on the current size only (Markov in z).
    bool size_only() const { return spec_.kind != ModelKind::counterexample; }

    std::int64_t max_up_jump() const { return max_up_; }
    std::int64_t max_down_jump() const { return max_down_; }

    /// Exact conditional PMF of the next change.  Zero-probability atoms
    /// are dropped, so the support is exact.
    ChangePMF conditional_law(const ModelState& state) const {
        require_alive(state);
        ChangePMF pmf;
        switch (spec_.kind) {
            case ModelKind::ratio_birth_death:
            case ModelKind::biased_walk:
            case ModelKind::symmetric_walk:
            case ModelKind::cell_cycle: {
                push_pair(pmf, down_prob(state.z));
                break;
            }
            case ModelKind::moran_toy: {
                for (const auto& a : moran_atoms_) {
                    pmf.atoms.push_back({a.change, a.prob});
                }
                break;
            }
            case ModelKind::counterexample: {
                if (state.z >= 2) {
                    pmf.atoms.push_back({-1, 1.0});
                } else {
                    push_pair(pmf, death_prob_at_visit(state.visits_at_one));
                }
                break;
            }
        }
        return pmf;
    }

    /// Conditional expectation of the next change.
    double drift(const ModelState& state) const {
        const ChangePMF pmf = conditional_law(state);
        double d = 0.0;
        for (const auto& a : pmf.atoms) d += static_cast<double>(a.change) * a.prob;
        return d;
    }

    /// Samples one change; shares its probability arithmetic with
    /// conditional_law.  Degenerate (single-atom) laws consume no
    /// randomness.
    std::int64_t sample_change(const ModelState& state, PhiloxRng& rng) const {
        require_alive(state);
        switch (spec_.kind) {
            case ModelKind::ratio_birth_death:
            case ModelKind::biased_walk:
            case ModelKind::symmetric_walk:
            case ModelKind::cell_cycle: {
                const double q = down_prob(state.z);
                if (q >= 1.0) return -1;
                if (q <= 0.0) return 1;
                return rng.uniform01() < q ? -1 : 1;
            }
            case ModelKind::moran_toy: {
                if (moran_atoms_.size() == 1) return moran_atoms_[0].change;
                const double u = rng.uniform01();
                for (const auto& a : moran_atoms_) {
                    if (u < a.cum) return a.change;
                }
                return moran_atoms_.back().change;
            }
            case ModelKind::counterexample: {
                if (state.z >= 2) return -1;
                const double q = death_prob_at_visit(state.visits_at_one);
                if (q <= 0.0) return 1;
                return rng.uniform01() < q ? -1 : 1;
            }
        }
        throw std::logic_error("Model::sample_change: unreachable");
    }

    /// Death probability q_k = decay_base^(k+2) on the k-th visit to size 1
    /// (counterexample only).
    double death_prob_at_visit(std::int64_t k) const {
        if (spec_.kind != ModelKind::counterexample) {
            throw std::logic_error("death_prob_at_visit: size-only model");
        }
        if (k < 1) throw std::invalid_argument("death_prob_at_visit: k must be >= 1");
        if (k <= static_cast<std::int64_t>(decay_table_.size())) {
            return decay_table_[static_cast<std::size_t>(k - 1)];
        }
        return std::pow(spec_.decay_base, static_cast<double>(k + 2));
    }

    friend Model build_model(const ModelSpec& spec);

private:
    struct MoranAtom {
        std::int64_t change;
        double prob;
        double cum;
    };

    Model() = default;

    static void require_alive(const ModelState& state) {
        if (state.z <= 0) {
            throw std::invalid_argument("conditional law undefined at absorbed size 0");
        }
    }

    // Probability of change -1 for the two-atom (+1/-1) kinds.
    double down_prob(std::int64_t z) const {
        switch (spec_.kind) {
            case ModelKind::ratio_birth_death:
                return static_cast<double>(z) / static_cast<double>(z + spec_.capacity);
            case ModelKind::biased_walk:
                return z < spec_.capacity ? (1.0 - spec_.delta) / 2.0
                                          : (1.0 + spec_.delta) / 2.0;
            case ModelKind::symmetric_walk:
                return 0.5;
            case ModelKind::cell_cycle: {
                const auto idx = static_cast<std::size_t>(
                    std::min<std::int64_t>(z, static_cast<std::int64_t>(spec_.p_die.size())) - 1);
                return spec_.p_die[idx];
            }
            default:
                throw std::logic_error("down_prob: not a two-atom kind");
        }
    }

    static void push_pair(ChangePMF& pmf, double q_down) {
        if (q_down > 0.0) pmf.atoms.push_back({-1, q_down});
        if (q_down < 1.0) pmf.atoms.push_back({1, 1.0 - q_down});
    }

    ModelSpec spec_;
    bool has_floor_ = false;
    double floor_ = 0.0;
    std::int64_t max_up_ = 1;
    std::int64_t max_down_ = 1;
    std::vector<MoranAtom> moran_atoms_;
    std::vector<double> decay_table_;
};

/// Survival probability of the counterexample started at size 1: the
/// infinite product prod_{k>=1} (1 - decay_base^(k+2)), evaluated until the
/// factors are indistinguishable from 1.
inline double counterexample_survival(double decay_base) {
    if (!(decay_base > 0.0 && decay_base < 1.0)) {
        throw std::invalid_argument("counterexample_survival: decay_base must be in (0,1)");
    }
    double product = 1.0;
    double q = decay_base * decay_base * decay_base;
    while (q > 1e-18) {
        product *= 1.0 - q;
        q *= decay_base;
    }
    return product;
}

/// Validates a spec and freezes it into a sampling-ready Model.  Rejects
/// parameterizations that break the drift condition at any K <= z <= z_max
/// or the kind-specific constraints.
inline Model build_model(const ModelSpec& spec) {
    auto fail = [&](const std::string& msg) -> void {
        throw std::invalid_argument(std::string(to_string(spec.kind)) + ": " + msg);
    };
    if (spec.capacity < 1) fail("capacity K must be >= 1");

    Model m;
    m.spec_ = spec;

    switch (spec.kind) {
        case ModelKind::ratio_birth_death:
            m.has_floor_ = true;
            m.floor_ = 1.0 / static_cast<double>(1 + spec.capacity);
            break;
        case ModelKind::biased_walk:
            if (!(spec.delta > 0.0 && spec.delta < 1.0)) {
                fail("delta must lie strictly inside (0,1)");
            }
            m.has_floor_ = true;
            m.floor_ = (1.0 - spec.delta) / 2.0;
            break;
        case ModelKind::symmetric_walk:
            m.has_floor_ = true;
            m.floor_ = 0.5;
            break;
        case ModelKind::moran_toy: {
            if (spec.offspring_pmf.empty()) fail("offspring_pmf must be non-empty");
            auto atoms = spec.offspring_pmf;
            std::sort(atoms.begin(), atoms.end(),
                      [](const OffspringAtom& a, const OffspringAtom& b) {
                          return a.count < b.count;
                      });
            double total = 0.0;
            double drift = 0.0;
            double q0 = 0.0;
            for (std::size_t i = 0; i < atoms.size(); ++i) {
                const auto& a = atoms[i];
                if (a.count < 0) fail("offspring count must be >= 0");
                if (a.count == 1) fail("offspring count 1 is a zero change (q_1 must be 0)");
                if (i > 0 && atoms[i - 1].count == a.count) fail("duplicate offspring count");
                if (!(a.prob >= 0.0 && a.prob <= 1.0)) fail("offspring probability outside [0,1]");
                total += a.prob;
                drift += static_cast<double>(a.count - 1) * a.prob;
                if (a.count == 0) q0 = a.prob;
            }
            if (std::abs(total - 1.0) > 1e-12) fail("offspring probabilities must sum to 1");
            if (q0 <= 0.0) fail("offspring law must put positive mass on death (count 0)");
            if (drift > 1e-15) {
                fail("offspring law has positive drift " + std::to_string(drift) +
                     " at z >= K");
            }
            double cum = 0.0;
            for (const auto& a : atoms) {
                if (a.prob == 0.0) continue;
                cum += a.prob;
                m.moran_atoms_.push_back({a.count - 1, a.prob, cum});
                m.max_up_ = std::max(m.max_up_, a.count - 1);
            }
            m.moran_atoms_.back().cum = 1.0;
            m.has_floor_ = true;
            m.floor_ = q0;
            break;
        }
        case ModelKind::cell_cycle: {
            if (spec.p_die.empty()) fail("p_die table must be non-empty");
            double lo = 1.0;
            for (double p : spec.p_die) {
                if (!(p >= 0.0 && p <= 1.0)) fail("p_die entry outside [0,1]");
                lo = std::min(lo, p);
            }
            if (lo <= 0.0) fail("p_die must be bounded away from 0 (death-risk floor)");
            const auto len = static_cast<std::int64_t>(spec.p_die.size());
            for (std::int64_t z = spec.capacity; z <= std::max(spec.validation_z_max(), len);
                 ++z) {
                const auto idx = static_cast<std::size_t>(std::min(z, len) - 1);
                if (spec.p_die[idx] < 0.5) {
                    fail("p_die(" + std::to_string(z) + ") < 1/2 gives positive drift at z >= K");
                }
                if (z >= len) break;  // clamped from here on; already checked
            }
            m.has_floor_ = true;
            m.floor_ = lo;
            break;
        }
        case ModelKind::counterexample: {
            if (spec.capacity != 2) fail("capacity is fixed at K=2");
            if (!(spec.decay_base > 0.0 && spec.decay_base < 1.0)) {
                fail("decay_base must lie in (0,1)");
            }
            // Death probabilities at size 1, precomputed per visit count up
            // to the point where they underflow to exactly 0.
            const double b = spec.decay_base;
            double q = b * b * b;
            while (q > 0.0 && m.decay_table_.size() < 65536) {
                m.decay_table_.push_back(q);
                q *= b;
            }
            m.has_floor_ = false;
            break;
        }
    }

    // Belt-and-braces numeric scan of the drift condition at and above K.
    {
        const std::int64_t hi = m.spec_.validation_z_max();
        for (std::int64_t z = m.spec_.capacity; z <= hi; ++z) {
            const double d = m.drift({z, 1});
            if (d > 1e-12) {
                fail("drift " + std::to_string(d) + " > 0 at z=" + std::to_string(z));
            }
        }
    }
    return m;
}

/// Free-function forms of the law accessors.
inline ChangePMF conditional_law(const Model& model, const ModelState& state) {
    return model.conditional_law(state);
}
inline double drift(const Model& model, const ModelState& state) {
    return model.drift(state);
}

}  // namespace softcap
