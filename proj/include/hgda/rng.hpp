#pragma once

#include <cstdint>
#include <limits>

namespace hgda {

/// SplitMix64 generator with the splitting scheme of Java's SplittableRandom
/// (Steele, Lea, Flood 2014). `split()` returns an independent child stream;
/// `fork(id)` derives a named child without advancing the parent.
///
/// Satisfies std::uniform_random_bit_generator so it can drive <random>
/// distributions.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    static constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

    explicit SplitMix64(std::uint64_t seed = 0) noexcept
        : state_(seed), gamma_(kGoldenGamma) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return mix64(next_seed()); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) noexcept {
        // Lemire-style rejection keeps the result unbiased.
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = (*this)();
            if (r >= threshold) return r % n;
        }
    }

    SplitMix64 split() noexcept {
        const std::uint64_t s = mix64(next_seed());
        const std::uint64_t g = mix_gamma(next_seed());
        return SplitMix64(s, g);
    }

    [[nodiscard]] SplitMix64 fork(std::uint64_t stream_id) const noexcept {
        const std::uint64_t s = mix64(state_ ^ mix64(stream_id + kGoldenGamma));
        const std::uint64_t g = mix_gamma(s + kGoldenGamma);
        return SplitMix64(s, g);
    }

    static constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    SplitMix64(std::uint64_t seed, std::uint64_t gamma) noexcept : state_(seed), gamma_(gamma) {}

    std::uint64_t next_seed() noexcept { return state_ += gamma_; }

    static constexpr std::uint64_t mix_gamma(std::uint64_t z) noexcept {
        z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdULL;
        z = (z ^ (z >> 33)) * 0xc4ceb9fe1a85ec53ULL;
        z = (z ^ (z >> 33)) | 1ULL;
        const int flips = __builtin_popcountll(z ^ (z >> 1));
        return flips < 24 ? z ^ 0xaaaaaaaaaaaaaaaaULL : z;
    }

    std::uint64_t state_;
    std::uint64_t gamma_;
};

}  // namespace hgda
