#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace bfnflow {

// All stochastic code draws from an explicitly passed Rng. Gaussian and
// uniform variates are generated by hand (not via std:: distributions) so
// that a fixed seed yields bit-identical streams on every platform.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1).
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in the open interval (0, 1).
inline double uniform01_open(Rng& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Integer in [lo, hi] without modulo bias (rejection on the top range).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t lo, std::uint64_t hi) {
    const std::uint64_t span = hi - lo + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / span * span;
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return lo + v % span;
}

/// Standard normal via Box-Muller. Consumes exactly two uniforms per call.
inline double normal01(Rng& rng) {
    const double u1 = uniform01_open(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

inline double normal(Rng& rng, double mean, double sd) {
    return mean + sd * normal01(rng);
}

}  // namespace bfnflow
