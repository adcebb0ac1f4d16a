#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dcobench {

using VectorView = std::span<const float>;

enum class Metric { Euclidean, InnerProduct, Cosine };

Metric metric_from_name(std::string_view name);
std::string_view to_string(Metric m);

/// Contiguous row-major storage of N vectors of fixed dimensionality.
/// Immutable during search; append() is only used by the insertion protocol.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::size_t dim, std::vector<float> data, bool normalized = false);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
    VectorView operator[](std::size_t i) const {
        return VectorView(data_.data() + i * dim_, dim_);
    }
    const float* ptr(std::size_t i) const { return data_.data() + i * dim_; }

    bool normalized() const { return normalized_; }
    void set_normalized(bool v) { normalized_ = v; }

    void append(VectorView v);
    void reserve(std::size_t n) { data_.reserve(n * dim_); }

    const std::vector<float>& raw() const { return data_; }
    std::uint64_t fingerprint() const;

private:
    std::size_t dim_ = 0;
    std::vector<float> data_;
    bool normalized_ = false;
};

struct KnnResult {
    std::vector<std::uint32_t> ids;
    std::vector<float> dists;  // ascending
};

float squared_euclidean(VectorView a, VectorView b);

/// Sum of (a_i - b_i)^2 over i in [from, to). Additive over adjacent ranges.
float partial_sq_dist(VectorView a, VectorView b, std::size_t from, std::size_t to);

float dot(VectorView a, VectorView b);
float partial_dot(VectorView a, VectorView b, std::size_t from, std::size_t to);

/// Exact k nearest neighbors by linear scan. Ties broken by ascending id.
/// InnerProduct/Cosine require a normalized dataset and rank by descending
/// dot product; reported dists are the Euclidean equivalents (ascending).
KnnResult brute_force_knn(const Dataset& ds, VectorView q, std::size_t k,
                          Metric metric = Metric::Euclidean);

/// |ids(result) ∩ ids(truth)| / k
double recall(const KnnResult& result, const KnnResult& truth, std::size_t k);

/// Distance-equality-aware recall: a returned id also counts as a hit when
/// its distance does not exceed the k-th truth distance by more than tol,
/// so equal-distance ties against reference ground truth are not penalized.
double recall_with_ties(const KnnResult& result, const KnnResult& truth,
                        std::size_t k, float tol = 1e-6f);

/// Deterministic per-phase seed derivation from one root seed.
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag);

}  // namespace dcobench
