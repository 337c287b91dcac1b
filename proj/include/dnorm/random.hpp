#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace dnorm {

/// splitmix64 output function (Steele, Lea, Flood). Stateless mix of a
/// 64-bit value.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Sub-seed derivation used throughout the library: sub-stream `salt` of a
/// master seed is seed_mix(master, salt). The exact formula (two splitmix64
/// rounds) is part of the reproducibility contract; results depend on it.
constexpr std::uint64_t seed_mix(std::uint64_t master, std::uint64_t salt) noexcept {
    return splitmix64(splitmix64(master ^ 0x6a09e667f3bcc908ULL) + salt);
}

// Salt bases, one per sub-stream domain. Domains are kept disjoint so derived
// streams never collide; the test suite audits this.
namespace salts {
inline constexpr std::uint64_t product_factor = 0xF1000000ULL;  // k-th factor of a product
inline constexpr std::uint64_t eval_chunk = 0xC4000000ULL;      // chunked MC evaluation
inline constexpr std::uint64_t grid_point = 0x9D000000ULL;      // per-grid-point evaluations
inline constexpr std::uint64_t batch_sample = 0x5B000000ULL;    // i-th sample of a batch
inline constexpr std::uint64_t sms_arrivals = 0xA7000000ULL;    // Poisson arrival stream
inline constexpr std::uint64_t sms_marks = 0xA8000000ULL;       // generator mark stream
inline constexpr std::uint64_t mark_block = 0xB2000000ULL;      // block refills of the mark stream
inline constexpr std::uint64_t mean_probe = 0x33000000ULL;      // sampler mean estimation
inline constexpr std::uint64_t scaled_factor = 0xE5000000ULL;   // scalar-scaled samplers
}  // namespace salts

/// xoshiro256** 1.0 (Blackman and Vigna, public domain). Used instead of a
/// <random> engine because its output sequence is fully specified, keeping
/// artifacts bit-reproducible across standard library implementations.
class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed) noexcept {
        std::uint64_t x = seed;
        for (auto& word : state_) {
            x += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            word = z ^ (z >> 31);
        }
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~0ULL; }

    result_type operator()() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1); never hits an endpoint.
    double uniform_open() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Unit-rate exponential, strictly positive.
    double exponential() noexcept { return -std::log(uniform_open()); }

private:
    static constexpr std::uint64_t rotl(std::uint64_t v, int k) noexcept {
        return (v << k) | (v >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

}  // namespace dnorm
