// Copyright 2026 the polya-urn authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>

namespace polya {

// SplitMix64 (Vigna's fixed-increment variant of the Steele/Lea/Flood
// splittable generator). Used for seed derivation only.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

  private:
    std::uint64_t state_;
};

/// Counter-based seed derivation: the seed of stream `index` under `base` is
/// the SplitMix64 output at counter offset index+1. Streams can be drawn in
/// any order or in parallel and always produce the same values, which is what
/// makes ensemble runs schedule-independent.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + (index + 1) * 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// xoshiro256++ (Blackman/Vigna). Small state, passes BigCrush, fast enough
// that the Bernoulli draw is not the bottleneck of a trajectory step.
class Xoshiro256PlusPlus {
  public:
    explicit Xoshiro256PlusPlus(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& word : state_) word = sm.next();
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0,1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_;
};

/// The engine used for one trial's uniform stream.
using TrialRng = Xoshiro256PlusPlus;

/// Engine for trial `index` of the stream family rooted at `base_seed`.
inline TrialRng trial_rng(std::uint64_t base_seed, std::uint64_t index) {
    return TrialRng(mix_seed(base_seed, index));
}

}  // namespace polya
