#pragma once

#include <cstdint>

namespace rfm {

/// Counter-based SplitMix64 stream. Chosen over std::mt19937 so that the
/// sampled feature banks are bit-reproducible across platforms and standard
/// library versions; the mapping to doubles uses the top 53 bits only.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    /// Stream for substream `index` of a base seed. Distinct indices give
    /// decorrelated sequences (golden-ratio offset into the Weyl sequence).
    static SplitMix64 stream(std::uint64_t seed, std::uint64_t index) {
        return SplitMix64(seed + 0x9E3779B97F4A7C15ULL * (index + 1));
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random mantissa bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    /// Uniform integer in {lo, ..., hi} via rejection-free modulo on 64 bits.
    /// Bias is below 2^-50 for the ranges used here (spans < 2^13).
    std::uint64_t uniform_index(std::uint64_t lo, std::uint64_t hi) {
        return lo + next_u64() % (hi - lo + 1);
    }

private:
    std::uint64_t state_;
};

} // namespace rfm
