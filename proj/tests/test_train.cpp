#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dcobench/train.hpp"
#include "dcobench/transform.hpp"
#include "helpers.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <tuple>

using namespace dcobench;
using namespace dcobench::testing;

namespace {

// labels follow sign(w.x + b) with optional flip noise
std::vector<TrainingSample> synth_samples(std::size_t n, const std::vector<float>& w,
                                          float b, double flip, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g(0.f, 1.f);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<TrainingSample> out(n);
    for (auto& s : out) {
        s.k = 20;
        s.d = 32;
        s.features.resize(w.size());
        float score = b;
        for (std::size_t j = 0; j < w.size(); ++j) {
            s.features[j] = g(rng);
            score += w[j] * s.features[j];
        }
        s.above = score > 0.f;
        if (u(rng) < flip) s.above = !s.above;
    }
    return out;
}

}  // namespace

TEST_CASE("the analytic gradient matches finite differences") {
    auto samples = synth_samples(300, {1.f, -2.f, 0.5f}, 0.3f, 0.1, 1);
    std::vector<float> params{0.2f, -0.4f, 0.1f, 0.05f};  // weights..., bias
    std::vector<double> grad;
    const double base = logistic_loss(samples, params, 5.f, &grad);
    REQUIRE(grad.size() == params.size());
    const double h = 1e-4;
    for (std::size_t j = 0; j < params.size(); ++j) {
        auto p = params;
        p[j] += static_cast<float>(h);
        const double up = logistic_loss(samples, p, 5.f);
        p[j] -= static_cast<float>(2 * h);
        const double dn = logistic_loss(samples, p, 5.f);
        const double fd = (up - dn) / (2 * h);
        CHECK(std::abs(fd - grad[j]) <= 1e-5 * std::max(1.0, std::abs(base)));
    }
}

TEST_CASE("separable data fits to high held-out accuracy with low false rejects") {
    auto samples = synth_samples(4000, {2.f, -1.f, 0.5f}, 0.1f, 0.0, 2);
    auto m = fit_linear(samples, 3);
    // the false-reject weighting and post-fit bias guard deliberately trade
    // accuracy for a one-sided error profile, so chance level is the bar
    CHECK(m.held_out_accuracy >= 0.85f);
    CHECK(m.held_out_false_reject <= 0.10f);
    CHECK(m.trained_k == 20);
    CHECK(m.trained_d == 32);
}

TEST_CASE("random labels converge to chance accuracy") {
    auto samples = synth_samples(4000, {1.f, 1.f}, 0.f, 0.5, 4);
    auto m = fit_linear(samples, 5);
    CHECK(m.held_out_accuracy > 0.40f);
    CHECK(m.held_out_accuracy < 0.62f);
    CHECK(m.held_out_false_reject <= 0.10f);  // the bias guard still holds
}

TEST_CASE("single-class sample sets are rejected by name") {
    auto samples = synth_samples(200, {1.f}, 0.f, 0.0, 6);
    for (auto& s : samples) s.above = true;
    CHECK_THROWS_WITH_AS(fit_linear(samples, 7), doctest::Contains("above"),
                         std::invalid_argument);
    for (auto& s : samples) s.above = false;
    CHECK_THROWS_WITH_AS(fit_linear(samples, 7), doctest::Contains("within"),
                         std::invalid_argument);
}

TEST_CASE("sample generation walks real searches and labels from exact distances") {
    const std::size_t n = 4000, dim = 64;
    DcoContext ctx(random_gaussian(n, dim, 10));
    ctx.attach_pca(fit_pca(ctx.data()));
    ctx.attach_codebook(train_pq(ctx.data(), 8, 6, 11));
    DcoStrategy fd(ctx, StrategyKind::FDScanning);
    auto idx = HnswIndex::build(ctx, fd, {12, 150, 12});

    CHECK_THROWS(gen_training_samples(idx, ctx, {10}, 50, {32, 32}, 13));  // < 100 queries

    auto set = gen_training_samples(idx, ctx, {10, 20}, 150, {32, 32}, 13);
    REQUIRE(!set.samples.empty());

    bool saw_depth = false, saw_pq = false;
    for (std::size_t i = 1; i < set.samples.size(); ++i) {
        const auto& a = set.samples[i - 1];
        const auto& b = set.samples[i];
        CHECK(std::tie(a.query_id, a.k, a.d) <= std::tie(b.query_id, b.k, b.d));
    }
    for (const auto& s : set.samples) {
        (s.d < 0 ? saw_pq : saw_depth) = true;
        for (float f : s.features) CHECK(std::isfinite(f));
        REQUIRE(s.features.size() == (s.d < 0 ? 2u : 3u));
        // feature[1] is the squared threshold in both layouts
        CHECK(s.features[1] >= 0.f);
        if (s.d >= 0) {
            CHECK(s.d % 32 == 0);
            CHECK(s.features[2] == doctest::Approx(s.d / 64.0));
        }
    }
    CHECK(saw_depth);
    CHECK(saw_pq);

    // determinism
    auto again = gen_training_samples(idx, ctx, {10, 20}, 150, {32, 32}, 13);
    CHECK(again.samples.size() == set.samples.size());
}

TEST_CASE("fit_all_models covers every group and survives degenerate ones") {
    SampleSet set;
    // healthy group (k=10, d=32) and a single-class group (k=10, d=-1)
    auto good = synth_samples(2000, {1.f, -1.f, 0.5f}, 0.f, 0.05, 20);
    for (auto& s : good) s.k = 10;
    set.samples = good;
    for (int i = 0; i < 300; ++i) {
        TrainingSample s;
        s.k = 10;
        s.d = -1;
        s.features = {1.f, 2.f};
        s.above = false;  // one class only
        set.samples.push_back(s);
    }
    auto models = fit_all_models(set, 21);
    REQUIRE(models.size() == 2);
    const LinearModel* depth = nullptr;
    const LinearModel* pq = nullptr;
    for (const auto& m : models) (m.trained_d < 0 ? pq : depth) = &m;
    REQUIRE(depth);
    REQUIRE(pq);
    CHECK(depth->held_out_accuracy > 0.7f);
    // the degenerate group falls back to a model that never rejects early
    CHECK(pq->bias < 0.f);
    for (float w : pq->weights) CHECK(w == 0.f);
}

TEST_CASE("feature dumps start with the documented header") {
    SampleSet set;
    TrainingSample s;
    s.k = 10;
    s.d = 32;
    s.features = {1.f, 2.f, 0.5f};
    s.above = true;
    set.samples.push_back(s);
    const std::string path = "/tmp/dcobench-samples-test.csv";
    dump_samples_csv(set, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "k,d,partial_sq,tau_sq,depth_frac,label");
    std::remove(path.c_str());
}
