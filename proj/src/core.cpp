#include "dcobench/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace dcobench {

namespace {
constexpr std::size_t kBlock = 16;   // vectorization-friendly inner block
constexpr std::size_t kChunk = 256;  // fold partial sums at most this often

void check_finite(VectorView v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            throw std::invalid_argument("non-finite coordinate at index " +
                                        std::to_string(i));
        }
    }
}
}  // namespace

Metric metric_from_name(std::string_view name) {
    if (name == "euclidean" || name == "l2") return Metric::Euclidean;
    if (name == "ip" || name == "inner_product") return Metric::InnerProduct;
    if (name == "cosine") return Metric::Cosine;
    throw std::invalid_argument("unknown metric: " + std::string(name));
}

std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::Euclidean: return "euclidean";
        case Metric::InnerProduct: return "ip";
        case Metric::Cosine: return "cosine";
    }
    return "?";
}

Dataset::Dataset(std::size_t dim, std::vector<float> data, bool normalized)
    : dim_(dim), data_(std::move(data)), normalized_(normalized) {
    if (dim_ == 0) throw std::invalid_argument("dataset dimension must be >= 1");
    if (data_.empty() || data_.size() % dim_ != 0) {
        throw std::invalid_argument("dataset payload size not a multiple of dim");
    }
    check_finite(VectorView(data_.data(), data_.size()));
}

void Dataset::append(VectorView v) {
    if (v.size() != dim_) throw std::invalid_argument("append: dimension mismatch");
    check_finite(v);
    data_.insert(data_.end(), v.begin(), v.end());
}

std::uint64_t Dataset::fingerprint() const {
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    std::uint64_t d = dim_;
    mix(&d, sizeof(d));
    mix(data_.data(), data_.size() * sizeof(float));
    return h;
}

float partial_sq_dist(VectorView a, VectorView b, std::size_t from, std::size_t to) {
    if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
    if (from > to || to > a.size()) throw std::out_of_range("bad dim range");
    float total = 0.f;
    std::size_t i = from;
    while (i < to) {
        const std::size_t chunk_end = std::min(to, i + kChunk);
        float chunk = 0.f;
        while (i < chunk_end) {
            const std::size_t block_end = std::min(chunk_end, i + kBlock);
            float block = 0.f;
            for (; i < block_end; ++i) {
                const float d = a[i] - b[i];
                block += d * d;
            }
            chunk += block;
        }
        total += chunk;
    }
    return total;
}

float squared_euclidean(VectorView a, VectorView b) {
    return partial_sq_dist(a, b, 0, a.size());
}

float partial_dot(VectorView a, VectorView b, std::size_t from, std::size_t to) {
    if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
    if (from > to || to > a.size()) throw std::out_of_range("bad dim range");
    float total = 0.f;
    std::size_t i = from;
    while (i < to) {
        const std::size_t chunk_end = std::min(to, i + kChunk);
        float chunk = 0.f;
        while (i < chunk_end) {
            const std::size_t block_end = std::min(chunk_end, i + kBlock);
            float block = 0.f;
            for (; i < block_end; ++i) block += a[i] * b[i];
            chunk += block;
        }
        total += chunk;
    }
    return total;
}

float dot(VectorView a, VectorView b) { return partial_dot(a, b, 0, a.size()); }

KnnResult brute_force_knn(const Dataset& ds, VectorView q, std::size_t k, Metric metric) {
    const std::size_t n = ds.size();
    if (k == 0 || k > n) throw std::invalid_argument("k must be in [1, N]");
    if (q.size() != ds.dim()) throw std::invalid_argument("query dimension mismatch");
    if (metric != Metric::Euclidean && !ds.normalized()) {
        throw std::invalid_argument("inner-product/cosine metrics require a normalized dataset");
    }

    std::vector<float> score(n);
    if (metric == Metric::Euclidean) {
        for (std::size_t i = 0; i < n; ++i) score[i] = squared_euclidean(ds[i], q);
    } else {
        // rank by descending dot; report the Euclidean-equivalent distance
        for (std::size_t i = 0; i < n; ++i) score[i] = 2.f - 2.f * dot(ds[i], q);
    }

    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&score](std::uint32_t x, std::uint32_t y) {
                          if (score[x] != score[y]) return score[x] < score[y];
                          return x < y;
                      });

    KnnResult out;
    out.ids.assign(order.begin(), order.begin() + k);
    out.dists.resize(k);
    for (std::size_t i = 0; i < k; ++i) out.dists[i] = score[out.ids[i]];
    return out;
}

double recall(const KnnResult& result, const KnnResult& truth, std::size_t k) {
    if (result.ids.size() != k || truth.ids.size() != k) {
        throw std::invalid_argument("recall: result size mismatch with k");
    }
    std::vector<std::uint32_t> a = result.ids, b = truth.ids;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<std::uint32_t> inter;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
    return static_cast<double>(inter.size()) / static_cast<double>(k);
}

double recall_with_ties(const KnnResult& result, const KnnResult& truth,
                        std::size_t k, float tol) {
    if (result.ids.size() < k || truth.ids.size() < k) {
        throw std::invalid_argument("recall_with_ties: fewer than k entries");
    }
    const float worst = truth.dists[k - 1] + tol;
    std::vector<std::uint32_t> tset(truth.ids.begin(), truth.ids.begin() + k);
    std::sort(tset.begin(), tset.end());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < k; ++i) {
        if (std::binary_search(tset.begin(), tset.end(), result.ids[i]) ||
            result.dists[i] <= worst) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) {
    std::uint64_t h = 14695981039346656037ull ^ root;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    // splitmix64 finalizer
    h += 0x9e3779b97f4a7c15ull;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
    return h ^ (h >> 31);
}

}  // namespace dcobench
