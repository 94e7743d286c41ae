#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace simclust {

/// Deterministic random source: mt19937_64 with fixed mappings to doubles,
/// so the same seed produces the same stream on every platform and standard
/// library. Generator id "mt19937_64/box-muller v1" (stamped into emitted
/// dataset headers).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    static constexpr const char* algorithm() { return "mt19937_64/box-muller v1"; }

    /// Uniform double in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) {
        // rejection sampling keeps the mapping exact and platform-stable
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller; draws two uniforms per call.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Deterministic substream for (seed, stream) pairs, e.g. per-cluster
    /// generation. splitmix64 mixing keeps substreams decorrelated.
    static Rng substream(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return Rng(z ^ (z >> 31));
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace simclust
