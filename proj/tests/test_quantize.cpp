#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dcobench/quantize.hpp"
#include "helpers.hpp"

#include <cmath>
#include <set>

using namespace dcobench;
using namespace dcobench::testing;

TEST_CASE("k-means with k=1 returns the mean") {
    auto ds = random_gaussian(1000, 6, 21);
    auto r = kmeans(ds.raw().data(), ds.size(), 6, 1, 10, 99);
    for (std::size_t j = 0; j < 6; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < ds.size(); ++i) mean += ds[i][j];
        mean /= ds.size();
        CHECK(r.centroids[j] == doctest::Approx(mean).epsilon(1e-4));
    }
}

TEST_CASE("k-means assignment invariant: every point sits with its nearest centroid") {
    auto ds = random_gaussian(600, 8, 22);
    auto r = kmeans(ds.raw().data(), ds.size(), 8, 16, 25, 99);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        double best = 1e300;
        std::uint32_t best_c = 0;
        for (std::uint32_t c = 0; c < 16; ++c) {
            VectorView cv(r.centroids.data() + c * 8, 8);
            const double d = sq_dist_ref(ds[i], cv);
            if (d < best) {
                best = d;
                best_c = c;
            }
        }
        CHECK(r.assign[i] == best_c);
    }
    CHECK(r.mse >= 0.0);
}

TEST_CASE("k-means is deterministic under seed and survives duplicates") {
    // 3 distinct points replicated, k = 5 > distinct count
    std::vector<float> buf;
    for (int rep = 0; rep < 50; ++rep) {
        for (float base : {0.f, 10.f, 20.f}) buf.insert(buf.end(), {base, base});
    }
    auto a = kmeans(buf.data(), 150, 2, 5, 25, 7);
    auto b = kmeans(buf.data(), 150, 2, 5, 25, 7);
    CHECK(a.centroids == b.centroids);
    CHECK(a.assign == b.assign);
    for (float x : a.centroids) CHECK(std::isfinite(x));
}

TEST_CASE("PQ training validates its configuration") {
    auto ds = random_gaussian(300, 12, 23);
    CHECK_THROWS(train_pq(ds, 5, 8, 1));   // 5 does not divide 12
    CHECK_THROWS(train_pq(ds, 4, 0, 1));   // zero bits
    auto tiny = random_gaussian(10, 12, 24);
    CHECK_THROWS(train_pq(tiny, 4, 8, 1)); // fewer points than centroids
}

TEST_CASE("PQ encode picks the nearest sub-centroid") {
    auto ds = random_gaussian(600, 16, 25);
    auto cb = train_pq(ds, 4, 4, 31);
    REQUIRE(cb.sub_dim == 4);
    std::vector<std::uint16_t> code(cb.c);
    for (int rep = 0; rep < 50; ++rep) {
        auto v = random_vector(16, 1000 + rep);
        encode(cb, v, code.data());
        for (std::size_t s = 0; s < cb.c; ++s) {
            VectorView sub(v.data() + s * cb.sub_dim, cb.sub_dim);
            double best = 1e300;
            std::size_t best_code = 0;
            for (std::size_t t = 0; t < cb.ncentroids(); ++t) {
                VectorView cv(cb.centroid(s, t), cb.sub_dim);
                const double d = sq_dist_ref(sub, cv);
                if (d < best) {
                    best = d;
                    best_code = t;
                }
            }
            CHECK(code[s] == best_code);
        }
    }
}

TEST_CASE("table-driven PQ distance is bitwise identical to the naive form") {
    auto ds = random_gaussian(800, 32, 26);
    auto cb = train_pq(ds, 8, 6, 41);
    auto codes = encode_all(cb, ds);
    REQUIRE(codes.size() == ds.size());
    for (int rep = 0; rep < 20; ++rep) {
        auto q = random_vector(32, 5000 + rep);
        auto lut = build_lut(cb, q);
        REQUIRE(lut.size() == cb.c * cb.ncentroids());
        for (std::size_t i = 0; i < ds.size(); i += 37) {
            const float via_lut = pq_distance(cb, codes.of(i), lut);
            const float naive = pq_distance_naive(cb, codes.of(i), q);
            CHECK(via_lut == naive);  // exact: the two paths share operation order
        }
    }
}

TEST_CASE("PQ distance approximates the true distance") {
    auto ds = random_gaussian(2000, 32, 27);
    auto cb = train_pq(ds, 8, 8, 43);
    auto codes = encode_all(cb, ds);
    auto q = random_vector(32, 6000);
    auto lut = build_lut(cb, q);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < ds.size(); i += 17) {
        const double truth = sq_dist_ref(ds[i], q);
        err += std::abs(pq_distance(cb, codes.of(i), lut) - truth);
        scale += truth;
    }
    CHECK(err / scale < 0.25);  // coarse but catches broken codebooks

    // reconstruction consistency: decode then re-encode is a fixed point
    auto rec = decode(cb, codes.of(0));
    std::vector<std::uint16_t> code2(cb.c);
    encode(cb, rec, code2.data());
    for (std::size_t s = 0; s < cb.c; ++s) CHECK(code2[s] == codes.of(0)[s]);
}

TEST_CASE("default sub-space count is the largest divisor under the cap") {
    CHECK(default_pq_subspaces(128) == 16);
    CHECK(default_pq_subspaces(960) == 64);
    CHECK(default_pq_subspaces(13) == 1);   // prime, cap 1
    CHECK(default_pq_subspaces(300) == 30); // 300/8 = 37, largest divisor <= 37 is 30
    CHECK(default_pq_subspaces(8) == 1);
}
