#pragma once

#include <cmath>
#include <cstdint>

namespace uwind {

// SplitMix64: portable 64-bit generator used for all seeded randomness.
// Substreams are derived by hashing (seed, stream id, purpose) so that
// per-snapshot generation is order-independent and parallel-safe.

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct SplitMix64 {
    std::uint64_t state = 0;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() { return splitmix64_next(state); }

    /// Uniform double in [0, 1).
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

/// Derive an independent substream key from (seed, stream, purpose).
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream,
                                   std::uint64_t purpose = 0) {
    std::uint64_t s = seed;
    std::uint64_t k = splitmix64_next(s) ^ (stream * 0xD1B54A32D192ED03ULL);
    k = splitmix64_next(k) ^ (purpose * 0x8CB92BA72F3D8DD7ULL);
    return splitmix64_next(k);
}

/// Standard-normal draws via Box-Muller; avoids the implementation-defined
/// std::normal_distribution so streams are bit-reproducible across platforms.
struct GaussianStream {
    SplitMix64 rng;
    bool has_spare = false;
    double spare = 0.0;

    explicit GaussianStream(std::uint64_t key) : rng(key) {}

    double next() {
        if (has_spare) {
            has_spare = false;
            return spare;
        }
        double u1 = rng.uniform01();
        double u2 = rng.uniform01();
        // 1 - u1 in (0, 1] keeps the log argument away from zero
        double r = std::sqrt(-2.0 * std::log(1.0 - u1));
        double t = 2.0 * 3.14159265358979323846 * u2;
        spare = r * std::sin(t);
        has_spare = true;
        return r * std::cos(t);
    }
};

} // namespace uwind
