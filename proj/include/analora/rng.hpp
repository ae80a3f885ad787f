// Copyright (C) 2026 analora authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic RNG policy: one root seed, expanded through splitmix64 into
// named child streams, each driving an independent xoshiro256** generator.
// Normal variates via Box-Muller. Streams are stable given (root, name, index)
// so every corpus, batch and noise draw is reproducible from the config seed.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace analora {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t fnv1a64(std::string_view text) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] keeps the log finite.
        double u1 = 1.0 - next_uniform();
        double u2 = next_uniform();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    // Unbiased draw in [0, n) by rejection.
    uint64_t next_below(uint64_t n) {
        const uint64_t threshold = (0ULL - n) % n;
        for (;;) {
            uint64_t v = next_u64();
            if (v >= threshold) return v % n;
        }
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Child stream derivation. Distinct (name, index) pairs give independent
// streams; the expansion is pure splitmix mixing over root ^ fnv1a(name).
inline uint64_t derive_seed(uint64_t root, std::string_view name, uint64_t index = 0) {
    uint64_t s = root ^ fnv1a64(name);
    uint64_t a = splitmix64(s);
    s ^= index * 0x9e3779b97f4a7c15ULL;
    uint64_t b = splitmix64(s);
    return a ^ (b + 0x632be59bd9b4e019ULL);
}

inline Rng derive_stream(uint64_t root, std::string_view name, uint64_t index = 0) {
    return Rng(derive_seed(root, name, index));
}

}  // namespace analora
