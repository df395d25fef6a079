#pragma once

#include <cmath>
#include <cstdint>

namespace latchsim {

/// Counter-style 64-bit generator (splitmix64). Small state, no warm-up,
/// and a cheap way to derive independent per-sample streams from one seed.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in (0, 1]; never returns 0 so it is safe under log().
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller. Explicit formula rather than
    /// std::normal_distribution so streams are reproducible across
    /// standard library implementations.
    double next_gaussian() {
        const double u1 = next_unit();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    std::uint64_t state_;
};

/// Derives the seed of sample i's private stream. Results depend only on
/// (seed, i), never on evaluation order or worker count.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t i) {
    SplitMix64 mix(seed ^ (0x6A09E667F3BCC909ull + i * 0x9E3779B97F4A7C15ull));
    return mix.next_u64();
}

}  // namespace latchsim
