#pragma once

// Distribution helpers with a fixed algorithm, so seeded draws match across
// standard library implementations.

#include <cmath>
#include <numbers>
#include <random>

namespace fsqkit {

// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(std::mt19937_64 &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Standard normal via Box-Muller (one value per two draws).
inline double standard_normal(std::mt19937_64 &rng) {
    const double u1 = 1.0 - uniform01(rng);  // (0, 1]
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace fsqkit
