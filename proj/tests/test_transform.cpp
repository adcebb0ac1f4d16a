#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dcobench/transform.hpp"
#include "helpers.hpp"

#include <cmath>
#include <numeric>

using namespace dcobench;
using namespace dcobench::testing;

namespace {

// variance of the projections of ds onto unit direction u, in double
double variance_along(const Dataset& ds, const std::vector<float>& u) {
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double p = dot_ref(ds[i], u);
        sum += p;
        sumsq += p * p;
    }
    const double mean = sum / ds.size();
    return sumsq / ds.size() - mean * mean;
}

}  // namespace

TEST_CASE("random orthogonal matrices are orthonormal and seeded") {
    for (std::size_t dim : {4u, 32u, 96u}) {
        auto p = random_orthogonal(dim, 123);
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t j = i; j < dim; ++j) {
                double s = 0.0;
                for (std::size_t t = 0; t < dim; ++t) {
                    s += static_cast<double>(p.rot[i * dim + t]) * p.rot[j * dim + t];
                }
                CHECK(s == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-4));
            }
        }
        auto p2 = random_orthogonal(dim, 123);
        CHECK(p.rot == p2.rot);
        auto p3 = random_orthogonal(dim, 124);
        CHECK(p.rot != p3.rot);
    }
}

TEST_CASE("rotations preserve pairwise distances") {
    const std::size_t dim = 64;
    auto ds = random_gaussian(200, dim, 31);
    auto pca = fit_pca(ds);
    auto ortho = random_orthogonal(dim, 32);
    auto r_pca = rotate_dataset(pca, ds, /*center=*/true);
    auto r_ortho = rotate_dataset(ortho, ds);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t i = static_cast<std::size_t>(rep) % ds.size();
        const std::size_t j = (i * 31 + 7) % ds.size();
        const double want = sq_dist_ref(ds[i], ds[j]);
        const double got_p = sq_dist_ref(r_pca[i], r_pca[j]);
        const double got_o = sq_dist_ref(r_ortho[i], r_ortho[j]);
        if (want > 1e-8) {
            CHECK(std::abs(got_p - want) / want < 1e-3);
            CHECK(std::abs(got_o - want) / want < 1e-3);
        }
    }
}

TEST_CASE("PCA recovers the variance structure") {
    // anisotropic data: coordinate i has standard deviation 1/(i+1)
    const std::size_t dim = 16, n = 4000;
    std::mt19937_64 rng(7);
    std::normal_distribution<float> g(0.f, 1.f);
    std::vector<float> buf(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            buf[i * dim + j] = g(rng) / static_cast<float>(j + 1);
        }
    }
    Dataset ds(dim, buf);
    auto m = fit_pca(ds);

    REQUIRE(m.eigenvalues.size() == dim);
    CHECK(std::is_sorted(m.eigenvalues.rbegin(), m.eigenvalues.rend()));
    for (float ev : m.eigenvalues) CHECK(ev >= 0.f);

    // eigenvalue sum equals the trace of the covariance
    double trace = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        double sum = 0.0, sumsq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += buf[i * dim + j];
            sumsq += static_cast<double>(buf[i * dim + j]) * buf[i * dim + j];
        }
        trace += sumsq / n - (sum / n) * (sum / n);
    }
    const double ev_sum = std::accumulate(m.eigenvalues.begin(), m.eigenvalues.end(), 0.0);
    CHECK(ev_sum == doctest::Approx(trace).epsilon(1e-3));

    // the leading direction carries at least as much variance as any axis
    std::vector<float> lead(m.rot.begin(), m.rot.begin() + dim);
    const double lead_var = variance_along(ds, lead);
    for (std::size_t j = 0; j < dim; ++j) {
        std::vector<float> axis(dim, 0.f);
        axis[j] = 1.f;
        CHECK(lead_var >= variance_along(ds, axis) - 1e-6);
    }

    // eigen_prefix is the running sum
    REQUIRE(m.eigen_prefix.size() == dim + 1);
    CHECK(m.eigen_prefix[0] == 0.0);
    double acc = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
        acc += m.eigenvalues[d];
        CHECK(m.eigen_prefix[d + 1] == doctest::Approx(acc).epsilon(1e-6));
        CHECK(m.sigma[d] == doctest::Approx(std::sqrt(m.eigenvalues[d])).epsilon(1e-5));
    }

    // rotated coordinates decorrelate: per-coordinate variance matches the eigenvalue
    auto rot = rotate_dataset(m, ds, true);
    for (std::size_t j = 0; j < 4; ++j) {
        std::vector<float> axis(dim, 0.f);
        axis[j] = 1.f;
        CHECK(variance_along(rot, axis) ==
              doctest::Approx(m.eigenvalues[j]).epsilon(5e-2));
    }
}

TEST_CASE("normalize produces unit vectors and rejects zero rows") {
    auto ds = random_gaussian(100, 12, 41);
    auto norm = normalize_dataset(ds);
    for (std::size_t i = 0; i < norm.size(); ++i) {
        CHECK(dot_ref(norm[i], norm[i]) == doctest::Approx(1.0).epsilon(1e-5));
    }
    CHECK(norm.normalized());

    Dataset bad(3, {1, 2, 3, 0, 0, 0});
    CHECK_THROWS_WITH_AS(normalize_dataset(bad),
                         doctest::Contains("id 1"), std::invalid_argument);
}

TEST_CASE("unit-vector bridge between dot product and squared distance") {
    auto a = random_vector(48, 51);
    auto b = random_vector(48, 52);
    auto unit = [](std::vector<float>& v) {
        const double n = std::sqrt(dot_ref(v, v));
        for (auto& x : v) x = static_cast<float>(x / n);
    };
    unit(a);
    unit(b);
    const float sq = squared_euclidean(a, b);
    CHECK(ip_from_sq_euclidean(sq) == doctest::Approx(dot_ref(a, b)).epsilon(1e-5));
    CHECK(ip_from_sq_euclidean(0.f) == doctest::Approx(1.f));
    CHECK(ip_from_sq_euclidean(4.f) == doctest::Approx(-1.f));
    CHECK_THROWS(ip_from_sq_euclidean(-0.5f));
    CHECK_THROWS(ip_from_sq_euclidean(4.2f));
}
