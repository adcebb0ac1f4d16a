#pragma once

#include <cstdint>
#include <vector>

#include "dcobench/core.hpp"

namespace dcobench {

/// PCA rotation artifact. `rot` stores W^T row-major: row i is the i-th
/// principal direction (descending eigenvalue order), so rotating a vector
/// is a plain matrix-vector product.
struct PcaModel {
    std::size_t dim = 0;
    std::vector<float> mean;          // D
    std::vector<float> rot;           // D*D, row-major W^T
    std::vector<float> eigenvalues;   // D, non-increasing, clamped >= 0
    std::vector<double> eigen_prefix; // D+1 prefix sums of eigenvalues
    std::vector<float> sigma;         // sqrt(eigenvalues)

    void finalize();  // recompute eigen_prefix and sigma from eigenvalues
};

struct OrthoProjection {
    std::size_t dim = 0;
    std::uint64_t seed = 0;
    std::vector<float> rot;  // D*D, row-major
};

/// Covariance-eigendecomposition PCA on at most 100k vectors (strided
/// subsample when the dataset is larger).
PcaModel fit_pca(const Dataset& sample);

/// Seeded Gaussian matrix orthonormalized by QR. Scanning the first d rows
/// realizes a d x D projection for every d at once.
OrthoProjection random_orthogonal(std::size_t dim, std::uint64_t seed);

std::vector<float> apply_rotation(const PcaModel& m, VectorView v, bool center);
std::vector<float> apply_rotation(const OrthoProjection& p, VectorView v);
void rotate_into(const float* rot, std::size_t dim, const float* v, float* out);

Dataset rotate_dataset(const PcaModel& m, const Dataset& ds, bool center);
Dataset rotate_dataset(const OrthoProjection& p, const Dataset& ds);

/// Scales every vector to unit L2 norm; errors on a zero vector.
Dataset normalize_dataset(const Dataset& ds);

/// <o,q> = 1 - 0.5 * dis^2 for unit vectors. Input is the squared distance.
float ip_from_sq_euclidean(float sq_dis);

}  // namespace dcobench
