#include "dcobench/transform.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

namespace dcobench {

namespace {
constexpr std::size_t kPcaSampleCap = 100000;
}

void PcaModel::finalize() {
    eigen_prefix.assign(dim + 1, 0.0);
    sigma.assign(dim, 0.f);
    for (std::size_t i = 0; i < dim; ++i) {
        const float lam = std::max(eigenvalues[i], 0.f);
        eigenvalues[i] = lam;
        eigen_prefix[i + 1] = eigen_prefix[i] + lam;
        sigma[i] = std::sqrt(lam);
    }
}

PcaModel fit_pca(const Dataset& ds) {
    const std::size_t n_all = ds.size();
    const std::size_t d = ds.dim();
    if (n_all < 2) throw std::invalid_argument("fit_pca requires at least 2 vectors");

    // strided subsample keeps fitting cost bounded on large datasets
    const std::size_t n = std::min(n_all, kPcaSampleCap);
    const std::size_t stride = n_all / n;

    Eigen::MatrixXd x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const float* v = ds.ptr(i * stride);
        for (std::size_t j = 0; j < d; ++j) x(i, j) = v[j];
    }
    Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");

    PcaModel m;
    m.dim = d;
    m.mean.resize(d);
    m.rot.resize(d * d);
    m.eigenvalues.resize(d);
    for (std::size_t j = 0; j < d; ++j) m.mean[j] = static_cast<float>(mean(j));
    // Eigen returns ascending eigenvalues; reverse for descending order.
    for (std::size_t i = 0; i < d; ++i) {
        const std::size_t src = d - 1 - i;
        m.eigenvalues[i] = static_cast<float>(es.eigenvalues()(src));
        for (std::size_t j = 0; j < d; ++j) {
            m.rot[i * d + j] = static_cast<float>(es.eigenvectors()(j, src));
        }
    }
    m.finalize();
    return m;
}

OrthoProjection random_orthogonal(std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw std::invalid_argument("dimension must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd g(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) g(i, j) = gauss(rng);

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    // fix column signs so the factorization is unique
    for (std::size_t j = 0; j < dim; ++j) {
        if (r(j, j) < 0) q.col(j) *= -1.0;
    }

    OrthoProjection p;
    p.dim = dim;
    p.seed = seed;
    p.rot.resize(dim * dim);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            p.rot[i * dim + j] = static_cast<float>(q(j, i));  // rows = projection directions
    return p;
}

void rotate_into(const float* rot, std::size_t dim, const float* v, float* out) {
    Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        r(rot, dim, dim);
    Eigen::Map<const Eigen::VectorXf> vv(v, dim);
    Eigen::Map<Eigen::VectorXf> oo(out, dim);
    oo.noalias() = r * vv;
}

std::vector<float> apply_rotation(const PcaModel& m, VectorView v, bool center) {
    if (v.size() != m.dim) throw std::invalid_argument("apply_rotation: dimension mismatch");
    std::vector<float> tmp(v.begin(), v.end());
    if (center) {
        for (std::size_t j = 0; j < m.dim; ++j) tmp[j] -= m.mean[j];
    }
    std::vector<float> out(m.dim);
    rotate_into(m.rot.data(), m.dim, tmp.data(), out.data());
    return out;
}

std::vector<float> apply_rotation(const OrthoProjection& p, VectorView v) {
    if (v.size() != p.dim) throw std::invalid_argument("apply_rotation: dimension mismatch");
    std::vector<float> out(p.dim);
    rotate_into(p.rot.data(), p.dim, v.data(), out.data());
    return out;
}

Dataset rotate_dataset(const PcaModel& m, const Dataset& ds, bool center) {
    if (ds.dim() != m.dim) throw std::invalid_argument("rotate_dataset: dimension mismatch");
    std::vector<float> out(ds.size() * m.dim);
    std::vector<float> tmp(m.dim);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const float* v = ds.ptr(i);
        if (center) {
            for (std::size_t j = 0; j < m.dim; ++j) tmp[j] = v[j] - m.mean[j];
            rotate_into(m.rot.data(), m.dim, tmp.data(), out.data() + i * m.dim);
        } else {
            rotate_into(m.rot.data(), m.dim, v, out.data() + i * m.dim);
        }
    }
    return Dataset(m.dim, std::move(out), false);
}

Dataset rotate_dataset(const OrthoProjection& p, const Dataset& ds) {
    if (ds.dim() != p.dim) throw std::invalid_argument("rotate_dataset: dimension mismatch");
    std::vector<float> out(ds.size() * p.dim);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        rotate_into(p.rot.data(), p.dim, ds.ptr(i), out.data() + i * p.dim);
    }
    return Dataset(p.dim, std::move(out), false);
}

Dataset normalize_dataset(const Dataset& ds) {
    std::vector<float> out(ds.raw());
    const std::size_t d = ds.dim();
    for (std::size_t i = 0; i < ds.size(); ++i) {
        float* v = out.data() + i * d;
        double nrm = 0.0;
        for (std::size_t j = 0; j < d; ++j) nrm += static_cast<double>(v[j]) * v[j];
        nrm = std::sqrt(nrm);
        if (nrm == 0.0) {
            throw std::invalid_argument("normalize_dataset: zero vector at id " +
                                        std::to_string(i));
        }
        const float inv = static_cast<float>(1.0 / nrm);
        for (std::size_t j = 0; j < d; ++j) v[j] *= inv;
    }
    return Dataset(d, std::move(out), true);
}

float ip_from_sq_euclidean(float sq_dis) {
    if (sq_dis < 0.f || sq_dis > 4.f + 1e-4f) {
        throw std::invalid_argument("ip_from_sq_euclidean: squared distance out of "
                                    "[0, 4] range; inputs are not normalized");
    }
    return 1.f - 0.5f * sq_dis;
}

}  // namespace dcobench
