#pragma once

#include <cstdint>
#include <cmath>
#include <numbers>
#include <vector>

namespace ickd {

// SplitMix64 stream (Steele, Lea, Flood 2014). Chosen over <random> engines
// because every output below is specified down to the bit by this header
// alone: the same seed gives the same datasets, weights, and shuffles on any
// conforming platform.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next_u64() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random mantissa bits.
    double next_double() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [-1, 1).
    double next_signed() noexcept { return 2.0 * next_double() - 1.0; }

    // Standard normal via Box-Muller; draws a fresh pair per call so the
    // stream position is a pure function of the call count.
    double next_gaussian() noexcept {
        const double u1 = next_double();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Uniform in [0, bound) via the multiply-shift reduction.
    std::uint64_t next_below(std::uint64_t bound) noexcept {
        using u128 = unsigned __int128;
        return static_cast<std::uint64_t>(
            (static_cast<u128>(next_u64()) * static_cast<u128>(bound)) >> 64);
    }

private:
    std::uint64_t state_;
};

// Derives an independent substream seed from (seed, tag). Used so the
// shuffle stream, the negative-refresh stream, and model init never alias.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
    SplitMix64 g(seed ^ (tag * 0x9E3779B97F4A7C15ULL) ^ 0xA3EC647659359ACDULL);
    return g.next_u64();
}

// In-place Fisher-Yates using the stream above.
template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& rng) noexcept {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace ickd
