#pragma once

#include "fsqkit/random.hpp"

#include <random>
#include <vector>

namespace fsqkit::bench {

inline std::vector<double> noise(std::uint64_t seed, std::size_t n, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::vector<double> x(n);
    for (auto &v : x) v = scale * standard_normal(rng);
    return x;
}

}  // namespace fsqkit::bench
