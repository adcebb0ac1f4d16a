#include "dcobench/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace dcobench {

namespace {

float sq_dist(const float* a, const float* b, std::size_t d) {
    float s = 0.f;
    for (std::size_t i = 0; i < d; ++i) {
        const float t = a[i] - b[i];
        s += t * t;
    }
    return s;
}

std::uint32_t nearest_centroid(const float* v, const float* centroids, std::size_t k,
                               std::size_t d, float* dist_out = nullptr) {
    std::uint32_t best = 0;
    float best_d = std::numeric_limits<float>::max();
    for (std::size_t c = 0; c < k; ++c) {
        const float dd = sq_dist(v, centroids + c * d, d);
        if (dd < best_d) {  // strict: ties keep the lowest id
            best_d = dd;
            best = static_cast<std::uint32_t>(c);
        }
    }
    if (dist_out) *dist_out = best_d;
    return best;
}

}  // namespace

KmeansResult kmeans(const float* data, std::size_t n, std::size_t dim, std::size_t k,
                    int iters, std::uint64_t seed) {
    if (k == 0 || k > n) throw std::invalid_argument("kmeans: k must be in [1, n]");
    std::mt19937_64 rng(seed);

    KmeansResult res;
    res.centroids.resize(k * dim);
    res.assign.assign(n, 0);

    // k-means++ seeding
    std::vector<double> d2(n, std::numeric_limits<double>::max());
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    std::size_t pick = first(rng);
    std::copy_n(data + pick * dim, dim, res.centroids.begin());
    for (std::size_t c = 1; c < k; ++c) {
        const float* prev = res.centroids.data() + (c - 1) * dim;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], static_cast<double>(sq_dist(data + i * dim, prev, dim)));
            total += d2[i];
        }
        std::size_t chosen = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng), acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= target) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = first(rng);
        }
        std::copy_n(data + chosen * dim, dim, res.centroids.begin() + c * dim);
    }

    std::vector<double> sums(k * dim);
    std::vector<std::size_t> counts(k);
    std::vector<float> dists(n);
    for (int it = 0; it <= iters; ++it) {
        // assignment (the final pass only reassigns, keeping centroids fixed)
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            res.assign[i] = nearest_centroid(data + i * dim, res.centroids.data(), k, dim,
                                             &dists[i]);
        }
        if (it == iters) break;

        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t a = res.assign[i];
            ++counts[a];
            double* s = sums.data() + static_cast<std::size_t>(a) * dim;
            const float* v = data + i * dim;
            for (std::size_t j = 0; j < dim; ++j) s[j] += v[j];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // re-seed from the point farthest from its centroid
                std::size_t far = 0;
                float far_d = -1.f;
                for (std::size_t i = 0; i < n; ++i) {
                    if (dists[i] > far_d) {
                        far_d = dists[i];
                        far = i;
                    }
                }
                std::copy_n(data + far * dim, dim, res.centroids.begin() + c * dim);
                dists[far] = 0.f;
            } else {
                float* cc = res.centroids.data() + c * dim;
                const double inv = 1.0 / static_cast<double>(counts[c]);
                for (std::size_t j = 0; j < dim; ++j) {
                    cc[j] = static_cast<float>(sums[c * dim + j] * inv);
                }
            }
        }
    }

    double mse = 0.0;
    for (std::size_t i = 0; i < n; ++i) mse += dists[i];
    res.mse = mse / static_cast<double>(n);
    return res;
}

std::size_t default_pq_subspaces(std::size_t dim) {
    const std::size_t cap = std::min<std::size_t>(std::max<std::size_t>(dim / 8, 1), 64);
    for (std::size_t c = cap; c > 1; --c) {
        if (dim % c == 0) return c;
    }
    return 1;
}

PqCodebook train_pq(const Dataset& ds, std::size_t c, std::size_t b, std::uint64_t seed) {
    const std::size_t d = ds.dim();
    const std::size_t n = ds.size();
    if (c == 0 || d % c != 0) throw std::invalid_argument("train_pq: c must divide D");
    if (b == 0 || b > 16) throw std::invalid_argument("train_pq: b must be in [1, 16]");
    const std::size_t k = std::size_t{1} << b;
    if (n < k) throw std::invalid_argument("train_pq: need at least 2^b vectors");

    PqCodebook cb;
    cb.dim = d;
    cb.c = c;
    cb.b = b;
    cb.sub_dim = d / c;
    cb.centroids.resize(c * k * cb.sub_dim);
    cb.trained_on = ds.fingerprint();

    // gather sub-vectors column-block-wise, then run independent k-means
    double total_mse = 0.0;
    std::vector<float> sub(n * cb.sub_dim);
    for (std::size_t s = 0; s < c; ++s) {
        for (std::size_t i = 0; i < n; ++i) {
            std::copy_n(ds.ptr(i) + s * cb.sub_dim, cb.sub_dim,
                        sub.data() + i * cb.sub_dim);
        }
        KmeansResult km = kmeans(sub.data(), n, cb.sub_dim, k, 25,
                                 derive_seed(seed, "pq-sub-" + std::to_string(s)));
        std::copy(km.centroids.begin(), km.centroids.end(),
                  cb.centroids.begin() + s * k * cb.sub_dim);
        total_mse += km.mse;
    }
    cb.train_mse = static_cast<float>(total_mse);
    return cb;
}

void encode(const PqCodebook& cb, VectorView v, std::uint16_t* out) {
    if (v.size() != cb.dim) throw std::invalid_argument("encode: dimension mismatch");
    for (std::size_t s = 0; s < cb.c; ++s) {
        out[s] = static_cast<std::uint16_t>(nearest_centroid(
            v.data() + s * cb.sub_dim, cb.centroids.data() + s * cb.ncentroids() * cb.sub_dim,
            cb.ncentroids(), cb.sub_dim));
    }
}

PqCodes encode_all(const PqCodebook& cb, const Dataset& ds) {
    PqCodes out;
    out.c = cb.c;
    out.codes.resize(ds.size() * cb.c);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(ds.size()); ++i) {
        encode(cb, ds[i], out.codes.data() + i * cb.c);
    }
    return out;
}

std::vector<float> decode(const PqCodebook& cb, const std::uint16_t* codes) {
    std::vector<float> v(cb.dim);
    for (std::size_t s = 0; s < cb.c; ++s) {
        std::copy_n(cb.centroid(s, codes[s]), cb.sub_dim, v.data() + s * cb.sub_dim);
    }
    return v;
}

std::vector<float> build_lut(const PqCodebook& cb, VectorView q) {
    if (q.size() != cb.dim) throw std::invalid_argument("build_lut: dimension mismatch");
    const std::size_t k = cb.ncentroids();
    std::vector<float> lut(cb.c * k);
    for (std::size_t s = 0; s < cb.c; ++s) {
        const float* qs = q.data() + s * cb.sub_dim;
        for (std::size_t cc = 0; cc < k; ++cc) {
            lut[s * k + cc] = sq_dist(qs, cb.centroid(s, cc), cb.sub_dim);
        }
    }
    return lut;
}

float pq_distance(const PqCodebook& cb, const std::uint16_t* codes,
                  const std::vector<float>& lut) {
    const std::size_t k = cb.ncentroids();
    float s = 0.f;
    for (std::size_t i = 0; i < cb.c; ++i) s += lut[i * k + codes[i]];
    return s;
}

float pq_distance_naive(const PqCodebook& cb, const std::uint16_t* codes, VectorView q) {
    float s = 0.f;
    for (std::size_t i = 0; i < cb.c; ++i) {
        s += sq_dist(q.data() + i * cb.sub_dim, cb.centroid(i, codes[i]), cb.sub_dim);
    }
    return s;
}

}  // namespace dcobench
