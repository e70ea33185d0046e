// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "softcap/models.hpp"
#include "test_util.hpp"

using namespace softcap;

namespace {

double atom_prob(const ChangePMF& pmf, std::int64_t change) {
    for (const auto& a : pmf.atoms) {
        if (a.change == change) return a.prob;
    }
    return 0.0;
}

}  // namespace

TEST_CASE("ratio law values") {
    ModelSpec s;
    s.kind = ModelKind::ratio_birth_death;
    s.capacity = 4;
    const Model m = build_model(s);

    const ChangePMF at_k = m.conditional_law({4, 1});
    CHECK(atom_prob(at_k, -1) == 0.5);
    CHECK(atom_prob(at_k, 1) == 0.5);

    const ChangePMF high = m.conditional_law({12, 1});
    CHECK(atom_prob(high, -1) == 0.75);
    CHECK(atom_prob(high, 1) == 0.25);

    CHECK(m.death_floor() == Catch::Approx(1.0 / 5.0).margin(1e-15));
    CHECK(m.drift({4, 1}) == 0.0);
    CHECK(m.drift({8, 1}) == Catch::Approx(-1.0 / 3.0).margin(1e-15));
}

TEST_CASE("biased walk law and validation") {
    ModelSpec s;
    s.kind = ModelKind::biased_walk;
    s.capacity = 10;
    s.delta = 0.2;
    const Model m = build_model(s);
    CHECK(m.drift({3, 1}) == Catch::Approx(0.2).margin(1e-15));
    CHECK(m.drift({10, 1}) == Catch::Approx(-0.2).margin(1e-15));
    CHECK(m.drift({40, 1}) == Catch::Approx(-0.2).margin(1e-15));
    CHECK(m.death_floor() == Catch::Approx(0.4).margin(1e-15));

    for (double bad : {0.0, 1.0, -0.3, 1.5}) {
        ModelSpec b = s;
        b.delta = bad;
        CHECK_THROWS_AS(build_model(b), std::invalid_argument);
    }
}

TEST_CASE("symmetric walk is a flat coin") {
    ModelSpec s;
    s.kind = ModelKind::symmetric_walk;
    s.capacity = 20;
    const Model m = build_model(s);
    for (std::int64_t z : {1, 19, 20, 75}) {
        const ChangePMF pmf = m.conditional_law({z, 1});
        CHECK(atom_prob(pmf, -1) == 0.5);
        CHECK(atom_prob(pmf, 1) == 0.5);
        CHECK(m.drift({z, 1}) == 0.0);
    }
    CHECK(m.death_floor() == 0.5);
}

TEST_CASE("moran offspring law") {
    ModelSpec s;
    s.kind = ModelKind::moran_toy;
    s.capacity = 4;
    s.offspring_pmf = {{2, 0.3}, {0, 0.6}, {3, 0.1}};  // order should not matter
    const Model m = build_model(s);
    const ChangePMF pmf = m.conditional_law({7, 1});
    CHECK(atom_prob(pmf, -1) == 0.6);
    CHECK(atom_prob(pmf, 1) == 0.3);
    CHECK(atom_prob(pmf, 2) == 0.1);
    CHECK(m.drift({7, 1}) == Catch::Approx(-0.1).margin(1e-12));
    CHECK(m.death_floor() == 0.6);
    CHECK(m.max_up_jump() == 2);

    SECTION("positive drift at z >= K is rejected") {
        ModelSpec bad = s;
        bad.offspring_pmf = {{0, 0.4}, {2, 0.6}};  // drift +0.2
        CHECK_THROWS_WITH(build_model(bad), Catch::Matchers::ContainsSubstring("drift"));
    }
    SECTION("q_1 must be zero") {
        ModelSpec bad = s;
        bad.offspring_pmf = {{0, 0.5}, {1, 0.2}, {2, 0.3}};
        CHECK_THROWS_AS(build_model(bad), std::invalid_argument);
    }
    SECTION("probabilities must sum to one") {
        ModelSpec bad = s;
        bad.offspring_pmf = {{0, 0.5}, {2, 0.4}};
        CHECK_THROWS_AS(build_model(bad), std::invalid_argument);
    }
    SECTION("death atom required") {
        ModelSpec bad = s;
        bad.offspring_pmf = {{2, 0.5}, {3, 0.5}};
        CHECK_THROWS_AS(build_model(bad), std::invalid_argument);
    }
}

TEST_CASE("cell cycle table semantics") {
    ModelSpec s;
    s.kind = ModelKind::cell_cycle;
    s.capacity = 2;
    s.p_die = {0.4, 0.5, 0.6, 0.7};
    const Model m = build_model(s);
    CHECK(atom_prob(m.conditional_law({1, 1}), -1) == 0.4);
    CHECK(atom_prob(m.conditional_law({3, 1}), -1) == 0.6);
    CHECK(atom_prob(m.conditional_law({9, 1}), -1) == 0.7);  // clamped to last entry
    CHECK(m.death_floor() == 0.4);

    SECTION("degenerate death is a single-atom law") {
        ModelSpec d;
        d.kind = ModelKind::cell_cycle;
        d.capacity = 2;
        d.p_die = {0.5, 1.0};
        const Model dm = build_model(d);
        const ChangePMF pmf = dm.conditional_law({2, 1});
        REQUIRE(pmf.atoms.size() == 1);
        CHECK(pmf.atoms[0].change == -1);
        CHECK(pmf.atoms[0].prob == 1.0);
    }
    SECTION("drift must be non-positive at and above K") {
        ModelSpec bad = s;
        bad.p_die = {0.4, 0.45};  // p_die(2) < 1/2 with K=2
        CHECK_THROWS_AS(build_model(bad), std::invalid_argument);
    }
    SECTION("death floor must be positive") {
        ModelSpec bad = s;
        bad.p_die = {0.0, 0.6};
        CHECK_THROWS_AS(build_model(bad), std::invalid_argument);
    }
}

TEST_CASE("counterexample law") {
    ModelSpec s;
    s.kind = ModelKind::counterexample;
    s.capacity = 2;
    const Model m = build_model(s);
    CHECK_FALSE(m.has_death_floor());
    CHECK_THROWS_AS(m.death_floor(), std::logic_error);
    CHECK_FALSE(m.size_only());

    const ChangePMF first = m.conditional_law({1, 1});
    CHECK(atom_prob(first, -1) == 0.125);  // decay_base^(1+2)
    CHECK(atom_prob(first, 1) == 0.875);

    const ChangePMF at2 = m.conditional_law({2, 5});
    REQUIRE(at2.atoms.size() == 1);
    CHECK(at2.atoms[0].change == -1);

    // Sizes above 2 descend deterministically; the interesting dynamics
    // live entirely on sizes 1 and 2.
    const ChangePMF at7 = m.conditional_law({7, 1});
    REQUIRE(at7.atoms.size() == 1);
    CHECK(at7.atoms[0].change == -1);

    SECTION("death probability decays geometrically in the visit count") {
        double prev = 1.0;
        for (std::int64_t k = 1; k <= 80; ++k) {
            const double q = m.death_prob_at_visit(k);
            CHECK(q == std::pow(0.5, static_cast<double>(k + 2)));
            CHECK(q < prev);
            prev = q;
        }
    }
    SECTION("deep visit counts underflow to a sure birth") {
        const ChangePMF deep = m.conditional_law({1, 2000});
        REQUIRE(deep.atoms.size() == 1);
        CHECK(deep.atoms[0].change == 1);
    }
    SECTION("capacity is pinned to 2") {
        ModelSpec bad = s;
        bad.capacity = 3;
        CHECK_THROWS_AS(build_model(bad), std::invalid_argument);
    }
    SECTION("decay base must sit inside (0,1)") {
        for (double bad : {0.0, 1.0, -0.2, 2.0}) {
            ModelSpec b = s;
            b.decay_base = bad;
            CHECK_THROWS_AS(build_model(b), std::invalid_argument);
        }
    }
}

TEST_CASE("survival product closed form") {
    // prod_{j>=3} (1 - 2^-j), evaluated far past double precision.
    CHECK(counterexample_survival(0.5) ==
          Catch::Approx(0.7701015868976065).margin(1e-13));
    for (double b : {0.3, 0.5, 0.8}) {
        const double s = counterexample_survival(b);
        CHECK(s > 0.0);
        CHECK(s < 1.0);
    }
    CHECK_THROWS_AS(counterexample_survival(1.0), std::invalid_argument);
}

TEST_CASE("laws are exact finite PMFs") {
    for (const auto& spec : testutil::catalog()) {
        const Model m = build_model(spec);
        const std::int64_t z_hi = 4 * spec.capacity + 2;
        for (std::int64_t z = 1; z <= z_hi; ++z) {
            for (std::int64_t k = 1; k <= (m.size_only() ? 1 : 8); ++k) {
                const ChangePMF pmf = m.conditional_law({z, k});
                CHECK(std::abs(pmf.total() - 1.0) <= 1e-12);
                for (const auto& a : pmf.atoms) {
                    CHECK(a.change != 0);
                    CHECK(a.prob > 0.0);
                    CHECK(a.prob <= 1.0);
                    CHECK(z + a.change >= 0);
                }
            }
        }
        CHECK_THROWS_AS(m.conditional_law({0, 1}), std::invalid_argument);
    }
}

TEST_CASE("drift condition holds at and above K for the whole catalog") {
    for (const auto& spec : testutil::catalog()) {
        const Model m = build_model(spec);
        for (std::int64_t z = spec.capacity; z <= 4 * spec.capacity; ++z) {
            CHECK(m.drift({z, 1}) <= 1e-12);
        }
    }
}

TEST_CASE("declared death floor is attained, never undercut") {
    for (const auto& spec : testutil::catalog()) {
        const Model m = build_model(spec);
        if (!m.has_death_floor()) continue;
        double least = 1.0;
        for (std::int64_t z = 1; z <= 4 * spec.capacity; ++z) {
            least = std::min(least, atom_prob(m.conditional_law({z, 1}), -1));
        }
        CHECK(least >= m.death_floor() - 1e-12);
        CHECK(least <= m.death_floor() + 1e-12);  // floors are tight in the catalog
    }
}

TEST_CASE("sampling agrees with the analytic law") {
    for (const auto& spec : testutil::catalog()) {
        const Model m = build_model(spec);
        std::vector<ModelState> states = {{1, 1}, {spec.capacity, 1}, {spec.capacity + 3, 1}};
        if (spec.capacity > 1) states.push_back({spec.capacity - 1, 1});
        for (const auto& st : states) {
            const ChangePMF pmf = m.conditional_law(st);
            const int n = 100000;
            PhiloxRng rng(0xfeedu + static_cast<std::uint64_t>(st.z),
                          static_cast<std::uint64_t>(spec.kind));
            std::map<std::int64_t, int> freq;
            for (int i = 0; i < n; ++i) ++freq[m.sample_change(st, rng)];
            double seen = 0;
            for (const auto& a : pmf.atoms) {
                const double emp = static_cast<double>(freq[a.change]) / n;
                const double se = std::sqrt(std::max(a.prob * (1 - a.prob), 1e-12) / n);
                INFO(to_string(spec.kind) << " z=" << st.z << " change=" << a.change);
                CHECK(std::abs(emp - a.prob) <= 4 * se);
                seen += freq[a.change];
            }
            CHECK(seen == n);  // nothing sampled outside the support
        }
    }
}

TEST_CASE("model rejects nonsense capacity") {
    ModelSpec s;
    s.kind = ModelKind::ratio_birth_death;
    s.capacity = 0;
    CHECK_THROWS_AS(build_model(s), std::invalid_argument);
}
