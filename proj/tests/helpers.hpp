#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dcobench/core.hpp"

namespace dcobench::testing {

inline Dataset random_gaussian(std::size_t n, std::size_t dim, std::uint64_t seed,
                               float stddev = 1.f) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g(0.f, stddev);
    std::vector<float> buf(n * dim);
    for (auto& x : buf) x = g(rng);
    return Dataset(dim, std::move(buf));
}

inline std::vector<float> random_vector(std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g(0.f, 1.f);
    std::vector<float> v(dim);
    for (auto& x : v) x = g(rng);
    return v;
}

/// Reference squared distance accumulated in double, left-to-right.
inline double sq_dist_ref(VectorView a, VectorView b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += d * d;
    }
    return s;
}

inline double dot_ref(VectorView a, VectorView b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return s;
}

}  // namespace dcobench::testing
