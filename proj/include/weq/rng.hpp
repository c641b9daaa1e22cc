#pragma once

#include <cmath>
#include <cstdint>

namespace weq {

// SplitMix64 (Steele, Lea, Flood): a counter-based generator whose output is
// a bijective hash of an incrementing 64-bit state. Substreams derive by
// hashing (seed, stream id), so parallel builds with distinct seeds are
// independent. Doubles use the top 53 bits; no std::*_distribution is used
// anywhere, keeping streams bit-identical across standard libraries.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        return mix(seed + 0x9e3779b97f4a7c15ull * (stream + 1));
    }

    std::uint64_t next() { return mix(state_ += 0x9e3779b97f4a7c15ull); }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1].
    double next_double_open() {
        return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; always consumes exactly two draws.
    double next_gaussian() {
        const double u1 = next_double_open();
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Uniform integer in [0, bound) by 128-bit multiply; bound > 0.
    std::uint64_t next_below(std::uint64_t bound) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * bound) >> 64);
    }

  private:
    std::uint64_t state_;
};

}  // namespace weq
