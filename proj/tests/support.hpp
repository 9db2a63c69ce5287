#pragma once

#include "fsqkit/error.hpp"
#include "fsqkit/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace fsqkit::testing {

inline std::vector<double> noise(std::uint64_t seed, std::size_t n, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::vector<double> x(n);
    for (auto &v : x) v = scale * standard_normal(rng);
    return x;
}

inline double l2(std::span<const double> x) {
    return std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
}

inline double relative_error(std::span<const double> a, std::span<const double> b, std::size_t skip = 0) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = skip; i + skip < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += a[i] * a[i];
    }
    return std::sqrt(num / den);
}

}  // namespace fsqkit::testing

#define EXPECT_FSQ_ERROR(stmt, expected_kind)                                     \
    do {                                                                          \
        try {                                                                     \
            stmt;                                                                 \
            ADD_FAILURE() << "expected " << ::fsqkit::to_string(expected_kind);  \
        } catch (const ::fsqkit::Error &e) {                                      \
            EXPECT_EQ(e.kind(), expected_kind) << e.what();                       \
        }                                                                         \
    } while (0)
