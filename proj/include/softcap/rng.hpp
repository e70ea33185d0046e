// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <stdexcept>

namespace softcap {

/// Counter-based pseudo-random generator (Philox 4x32, 10 rounds).
///
/// The generator is a pure value: equal states yield equal draw sequences,
/// and copies evolve independently.  The 128-bit counter is split into a
/// 64-bit draw counter (words 0-1) and a 64-bit stream id (words 2-3), so
/// any number of statistically independent streams can be derived from one
/// seed without sequential seeding.  The state serializes to 32 bytes.
class PhiloxRng {
public:
    using result_type = std::uint64_t;

    PhiloxRng() : PhiloxRng(0, 0) {}

    explicit PhiloxRng(std::uint64_t seed, std::uint64_t stream = 0)
        : ctr_{0u, 0u,
               static_cast<std::uint32_t>(stream),
               static_cast<std::uint32_t>(stream >> 32)},
          key_{static_cast<std::uint32_t>(seed),
               static_cast<std::uint32_t>(seed >> 32)} {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() { return next_u64(); }

    std::uint64_t next_u64() {
        if (!block_valid_) {
            block_ = generate(ctr_, key_);
            block_valid_ = true;
        }
        std::uint64_t out;
        if (sub_ == 0) {
            out = (static_cast<std::uint64_t>(block_[1]) << 32) | block_[0];
            sub_ = 1;
        } else {
            out = (static_cast<std::uint64_t>(block_[3]) << 32) | block_[2];
            sub_ = 0;
            block_valid_ = false;
            advance_counter();
        }
        return out;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Raw 128-bit Philox block for the given counter/key (10 rounds).
    static std::array<std::uint32_t, 4> generate(
        const std::array<std::uint32_t, 4>& counter,
        const std::array<std::uint32_t, 2>& key) {
        std::array<std::uint32_t, 4> x = counter;
        std::array<std::uint32_t, 2> k = key;
        for (int round = 0; round < 10; ++round) {
            x = single_round(x, k);
            if (round < 9) {
                k[0] += 0x9E3779B9u;
                k[1] += 0xBB67AE85u;
            }
        }
        return x;
    }

    std::array<std::uint8_t, 32> to_bytes() const {
        std::array<std::uint8_t, 32> out{};
        std::size_t pos = 0;
        for (std::uint32_t w : ctr_) pos = put_u32(out, pos, w);
        for (std::uint32_t w : key_) pos = put_u32(out, pos, w);
        put_u32(out, pos, sub_);
        return out;
    }

    static PhiloxRng from_bytes(const std::array<std::uint8_t, 32>& bytes) {
        PhiloxRng rng;
        std::size_t pos = 0;
        for (auto& w : rng.ctr_) w = get_u32(bytes, pos), pos += 4;
        for (auto& w : rng.key_) w = get_u32(bytes, pos), pos += 4;
        rng.sub_ = get_u32(bytes, pos);
        if (rng.sub_ > 1) {
            throw std::invalid_argument("PhiloxRng::from_bytes: lane index out of range");
        }
        rng.block_valid_ = false;
        return rng;
    }

    friend bool operator==(const PhiloxRng& a, const PhiloxRng& b) {
        return a.ctr_ == b.ctr_ && a.key_ == b.key_ && a.sub_ == b.sub_;
    }

private:
    static std::array<std::uint32_t, 4> single_round(
        const std::array<std::uint32_t, 4>& x,
        const std::array<std::uint32_t, 2>& k) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(0xD2511F53u) * x[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(0xCD9E8D57u) * x[2];
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        return {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
    }

    void advance_counter() {
        if (++ctr_[0] == 0) ++ctr_[1];
        // Words 2-3 are the stream id and never change.
    }

    static std::size_t put_u32(std::array<std::uint8_t, 32>& out, std::size_t pos,
                               std::uint32_t w) {
        out[pos] = static_cast<std::uint8_t>(w);
        out[pos + 1] = static_cast<std::uint8_t>(w >> 8);
        out[pos + 2] = static_cast<std::uint8_t>(w >> 16);
        out[pos + 3] = static_cast<std::uint8_t>(w >> 24);
        return pos + 4;
    }

    static std::uint32_t get_u32(const std::array<std::uint8_t, 32>& in, std::size_t pos) {
        return static_cast<std::uint32_t>(in[pos]) |
               (static_cast<std::uint32_t>(in[pos + 1]) << 8) |
               (static_cast<std::uint32_t>(in[pos + 2]) << 16) |
               (static_cast<std::uint32_t>(in[pos + 3]) << 24);
    }

    std::array<std::uint32_t, 4> ctr_;
    std::array<std::uint32_t, 2> key_;
    std::uint32_t sub_ = 0;
    std::array<std::uint32_t, 4> block_{};
    bool block_valid_ = false;
};

}  // namespace softcap
