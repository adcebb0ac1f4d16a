#pragma once

#include <cstdint>
#include <vector>

#include "dcobench/core.hpp"

namespace dcobench {

struct KmeansResult {
    std::vector<float> centroids;        // k * dim
    std::vector<std::uint32_t> assign;   // n
    double mse = 0.0;                    // mean squared distance to assigned centroid
};

/// Lloyd's iterations with k-means++ seeding; empty clusters are re-seeded
/// from the point farthest from its centroid. Ties assign to the lowest
/// centroid id. Deterministic under seed.
KmeansResult kmeans(const float* data, std::size_t n, std::size_t dim, std::size_t k,
                    int iters, std::uint64_t seed);

struct PqCodebook {
    std::size_t dim = 0;
    std::size_t c = 0;        // sub-space count
    std::size_t b = 0;        // bits per code
    std::size_t sub_dim = 0;  // dim / c
    std::vector<float> centroids;  // c * 2^b * sub_dim
    std::uint64_t trained_on = 0;  // dataset fingerprint
    float train_mse = 0.f;         // mean squared reconstruction error

    std::size_t ncentroids() const { return std::size_t{1} << b; }
    const float* centroid(std::size_t sub, std::size_t code) const {
        return centroids.data() + (sub * ncentroids() + code) * sub_dim;
    }
};

/// Per-vector codes, c entries each, stored contiguously.
struct PqCodes {
    std::size_t c = 0;
    std::vector<std::uint16_t> codes;
    std::size_t size() const { return c == 0 ? 0 : codes.size() / c; }
    const std::uint16_t* of(std::size_t i) const { return codes.data() + i * c; }
    void append(const std::uint16_t* code) { codes.insert(codes.end(), code, code + c); }
};

PqCodebook train_pq(const Dataset& ds, std::size_t c, std::size_t b, std::uint64_t seed);

void encode(const PqCodebook& cb, VectorView v, std::uint16_t* out);
PqCodes encode_all(const PqCodebook& cb, const Dataset& ds);
std::vector<float> decode(const PqCodebook& cb, const std::uint16_t* codes);

/// Per-query table of squared sub-distances, c * 2^b entries.
std::vector<float> build_lut(const PqCodebook& cb, VectorView q);

/// Asymmetric squared distance via lookup table.
float pq_distance(const PqCodebook& cb, const std::uint16_t* codes,
                  const std::vector<float>& lut);

/// Same quantity recomputed per sub-space without the table.
float pq_distance_naive(const PqCodebook& cb, const std::uint16_t* codes, VectorView q);

/// Library defaults: c = D/8 capped at 64 (largest divisor of D <= cap), b = 8.
std::size_t default_pq_subspaces(std::size_t dim);

}  // namespace dcobench
