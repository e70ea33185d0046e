// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "softcap/excursions.hpp"
#include "test_util.hpp"

using namespace softcap;

namespace {

Trace make_trace(std::vector<std::int64_t> sizes, TraceStatus status) {
    Trace t;
    t.steps_used = static_cast<std::int64_t>(sizes.size()) - 1;
    t.sizes = std::move(sizes);
    t.status = status;
    return t;
}

}  // namespace

TEST_CASE("decompose on the worked examples") {
    SECTION("start below, one round trip, extinction") {
        const Trace t = make_trace({2, 3, 2, 1, 0}, TraceStatus::extinct);
        const ExcursionDecomposition d = decompose(t, 3);
        CHECK(d.nu == std::vector<std::int64_t>{0, 2});
        CHECK(d.mu == std::vector<std::int64_t>{1});
        CHECK(d.z_at_nu == std::vector<std::int64_t>{2, 2});
        CHECK_FALSE(d.censored_tail);
    }
    SECTION("start at or above K delays nu_1") {
        const Trace t = make_trace({5, 4, 3, 2, 1, 0}, TraceStatus::extinct);
        const ExcursionDecomposition d = decompose(t, 3);
        CHECK(d.nu == std::vector<std::int64_t>{3});
        CHECK(d.mu.empty());
        CHECK(d.z_at_nu == std::vector<std::int64_t>{2});
    }
    SECTION("single censored point below K") {
        const Trace t = make_trace({5}, TraceStatus::censored);
        const ExcursionDecomposition d = decompose(t, 10);
        CHECK(d.nu == std::vector<std::int64_t>{0});
        CHECK(d.mu.empty());
        CHECK(d.censored_tail);
    }
    CHECK_THROWS_AS(decompose(make_trace({1}, TraceStatus::censored), 0),
                    std::invalid_argument);
}

TEST_CASE("excursion statistics on the worked examples") {
    SECTION("counts, maxima, durations") {
        const Trace t = make_trace({2, 3, 2, 1, 0}, TraceStatus::extinct);
        const ExcursionStats s = excursion_stats(t, 3);
        CHECK(s.n_below_excursions == 2);
        CHECK(s.n_above_excursions == 1);
        CHECK(s.above_maxima == std::vector<std::int64_t>{3});
        CHECK(s.above_durations == std::vector<std::int64_t>{1});
        REQUIRE(s.extinct_in_excursion.has_value());
        CHECK(*s.extinct_in_excursion == 1);
    }
    SECTION("a trace that never reaches K has no above-excursions") {
        const Trace t = make_trace({2, 1, 0}, TraceStatus::extinct);
        const ExcursionStats s = excursion_stats(t, 3);
        CHECK(s.n_above_excursions == 0);
        CHECK(s.n_below_excursions == 1);
    }
    SECTION("peak and duration of a taller excursion") {
        const Trace t = make_trace({2, 4, 5, 2, 0}, TraceStatus::extinct);
        const ExcursionStats s = excursion_stats(t, 3);
        CHECK(s.above_maxima == std::vector<std::int64_t>{5});
        CHECK(s.above_durations == std::vector<std::int64_t>{2});
    }
    SECTION("incomplete excursions of a censored trace are dropped") {
        const Trace t = make_trace({2, 3, 4}, TraceStatus::censored);
        const ExcursionStats s = excursion_stats(t, 3);
        CHECK(s.n_below_excursions == 1);
        CHECK(s.n_above_excursions == 0);  // still out when the budget ran out
        CHECK_FALSE(s.extinct_in_excursion.has_value());
    }
}

TEST_CASE("decomposition properties over random traces") {
    PhiloxRng meta(99, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const ModelSpec spec = testutil::random_spec(meta);
        const Model m = build_model(spec);
        const std::int64_t K = spec.capacity;
        const std::int64_t z0 = testutil::rand_range(meta, 0, 2 * K + 2);
        const std::int64_t budget = testutil::rand_range(meta, 0, 5000);
        const Trace t = simulate(m, z0, budget, PhiloxRng(8000 + trial, 1));
        const ExcursionDecomposition d = decompose(t, K);
        INFO(to_string(spec.kind) << " K=" << K << " z0=" << z0);

        // Interleaving nu_1 < mu_1 < nu_2 < ... where defined.
        REQUIRE(d.mu.size() <= d.nu.size());
        for (std::size_t k = 0; k < d.mu.size(); ++k) {
            CHECK(d.nu[k] < d.mu[k]);
            if (k + 1 < d.nu.size()) CHECK(d.mu[k] < d.nu[k + 1]);
        }

        // Every entry point sits at most at K-1, and nu_1 = 0 iff Z_0 < K.
        for (std::size_t k = 0; k < d.nu.size(); ++k) {
            CHECK(d.z_at_nu[k] == t.sizes[static_cast<std::size_t>(d.nu[k])]);
            CHECK(d.z_at_nu[k] <= K - 1);
        }
        if (z0 < K) {
            REQUIRE_FALSE(d.nu.empty());
            CHECK(d.nu[0] == 0);
        } else if (!d.nu.empty()) {
            CHECK(d.nu[0] >= 1);
        }

        // Round trip: the segments tile the trace and reproduce the
        // below/at-or-above pattern index by index.
        std::vector<bool> below_by_segment(t.sizes.size(), false);
        for (std::size_t k = 0; k < d.nu.size(); ++k) {
            const std::int64_t end = k < d.mu.size()
                                         ? d.mu[k]
                                         : static_cast<std::int64_t>(t.sizes.size());
            for (std::int64_t i = d.nu[k]; i < end; ++i) {
                below_by_segment[static_cast<std::size_t>(i)] = true;
            }
        }
        for (std::size_t i = 0; i < t.sizes.size(); ++i) {
            CHECK(below_by_segment[i] == (t.sizes[i] < K));
        }

        // Extinction happens inside a below-K segment.
        const ExcursionStats s = excursion_stats(t, K);
        if (t.status == TraceStatus::extinct) {
            REQUIRE(s.extinct_in_excursion.has_value());
            CHECK(*s.extinct_in_excursion == d.nu.size() - 1);
            CHECK(t.final_size() < K);
        }
        CHECK(d.censored_tail == (t.status == TraceStatus::censored));
        CHECK(s.above_durations.size() == static_cast<std::size_t>(s.n_above_excursions));
        CHECK(s.above_maxima.size() == static_cast<std::size_t>(s.n_above_excursions));
        for (std::size_t k = 0; k < s.above_maxima.size(); ++k) {
            CHECK(s.above_maxima[k] >= K);
            CHECK(s.above_durations[k] >= 1);
        }
    }
}

TEST_CASE("decomposition serialization") {
    const Trace t = make_trace({2, 3, 2, 1, 0}, TraceStatus::extinct);
    CHECK(decomposition_jsonl(decompose(t, 3)) ==
          R"({"nu":[0,2],"mu":[1],"censored":false})");
    const Trace c = make_trace({4}, TraceStatus::censored);
    CHECK(decomposition_jsonl(decompose(c, 10)) ==
          R"({"nu":[0],"mu":[],"censored":true})");
}
