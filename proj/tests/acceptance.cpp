// Acceptance suite: one pass/fail line per criterion. Returns nonzero when
// any gated criterion fails. Criterion 11 is informational by design.

#include "dcobench/bench.hpp"
#include "dcobench/io.hpp"
#include "dcobench/train.hpp"
#include "helpers.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <vector>

using namespace dcobench;
using namespace dcobench::testing;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string detail;
};

double elapsed(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Dataset lowrank(std::size_t n, std::size_t dim, std::size_t rank, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.kind = SyntheticKind::LowRank;
    spec.n = n;
    spec.dim = dim;
    spec.rank = rank;
    spec.seed = seed;
    return gen_synthetic(spec);
}

double hnsw_recall(const DcoContext& ctx, const HnswIndex& idx, const DcoStrategy& dco,
                   const Dataset& queries, const std::vector<KnnResult>& truth,
                   std::size_t k, std::size_t ef, DcoStats* stats = nullptr) {
    double sum = 0.0;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        auto r = idx.search(ctx, dco, queries[i], k, ef, stats);
        sum += recall_with_ties(r.knn, truth[i], k);
    }
    return sum / queries.size();
}

// --- criterion 1 -----------------------------------------------------------

Outcome criterion1() {
    const auto t0 = Clock::now();
    Outcome out;
    std::size_t mismatches = 0;
    for (std::size_t dim : {8u, 32u, 128u, 960u}) {
        DcoContext ctx(random_gaussian(500, dim, derive_seed(1, "c1-" + std::to_string(dim))));
        ctx.attach_pca(fit_pca(ctx.data()));
        std::mt19937_64 rng(derive_seed(2, "c1"));
        std::uniform_real_distribution<float> u(0.f, 2.f);
        std::vector<DcoStrategy> strategies;
        strategies.emplace_back(ctx, StrategyKind::FDScanning);
        strategies.emplace_back(ctx, StrategyKind::PDScanning);
        strategies.emplace_back(ctx, StrategyKind::PDScanningPlus);
        QueryContext q;
        const std::size_t triples = 10000 / strategies.size() + 1;
        for (auto& s : strategies) {
            for (std::size_t t = 0; t < triples; ++t) {
                const auto query =
                    random_vector(dim, derive_seed(3, "c1q" + std::to_string(t)));
                const auto id = static_cast<std::uint32_t>(rng() % ctx.data().size());
                const float exact = squared_euclidean(ctx.data()[id], query);
                const float tau_sq = exact * u(rng);
                s.prepare_query(q, query);
                const auto o = s.compare(q, id, tau_sq);
                const bool want = exact <= tau_sq;
                // rotated exact scans legitimately differ within float noise of
                // the isometry; only count decisions outside that band
                const float band = (s.kind() == StrategyKind::PDScanningPlus ? 1e-4f : 0.f) *
                                   exact;
                if (o.within != want && std::abs(exact - tau_sq) > band) ++mismatches;
                if (o.within && std::abs(o.distance - exact) > 1e-3f * std::max(exact, 1e-6f)) {
                    ++mismatches;
                }
            }
        }
    }
    const double secs = elapsed(t0);
    out.pass = mismatches == 0 && secs < 30.0;
    out.detail = std::to_string(mismatches) + " mismatches, " + std::to_string(secs) + " s";
    return out;
}

// --- criterion 2 -----------------------------------------------------------

Outcome criterion2() {
    Outcome out;
    double worst = 0.0;
    for (std::size_t dim : {128u, 960u}) {
        auto ds = random_gaussian(1000, dim, derive_seed(4, "c2" + std::to_string(dim)));
        auto pca = fit_pca(ds);
        auto ortho = random_orthogonal(dim, derive_seed(5, "c2o"));
        auto rp = rotate_dataset(pca, ds, true);
        auto ro = rotate_dataset(ortho, ds);
        std::mt19937_64 rng(derive_seed(6, "c2p"));
        for (int t = 0; t < 1000; ++t) {
            const auto i = rng() % ds.size();
            auto j = rng() % ds.size();
            if (j == i) j = (j + 1) % ds.size();
            const double want = sq_dist_ref(ds[i], ds[j]);
            if (want < 1e-9) continue;
            worst = std::max(worst, std::abs(sq_dist_ref(rp[i], rp[j]) - want) / want);
            worst = std::max(worst, std::abs(sq_dist_ref(ro[i], ro[j]) - want) / want);
        }
    }
    out.pass = worst <= 1e-3;
    out.detail = "max relative error " + std::to_string(worst);
    return out;
}

// --- criterion 3 -----------------------------------------------------------

Outcome criterion3() {
    Outcome out;
    const std::size_t dim = 128;
    DcoContext ctx(random_gaussian(2000, dim, derive_seed(7, "c3")));
    ctx.attach_pca(fit_pca(ctx.data()));
    ctx.attach_ortho(random_orthogonal(dim, derive_seed(8, "c3o")));
    double worst = 0.0;
    std::mt19937_64 rng(derive_seed(9, "c3p"));
    const auto& pca = ctx.pca();
    for (int t = 0; t < 1000; ++t) {
        const auto query = random_vector(dim, derive_seed(10, "c3q" + std::to_string(t)));
        const auto id = static_cast<std::uint32_t>(rng() % ctx.data().size());
        const float exact = squared_euclidean(ctx.data()[id], query);
        if (exact <= 0.f) continue;

        // ADSampling estimator at d = D: (D/D) * full rotated partial
        const auto q_o = apply_rotation(ctx.ortho(), query);
        const float est_ads = partial_sq_dist(ctx.ortho_rotated()[id], q_o, 0, dim);
        // DADE estimate at d = D: scale 1 * full rotated partial
        const auto q_p = apply_rotation(pca, query, true);
        const float est_dade =
            static_cast<float>(pca.eigen_prefix[dim] / pca.eigen_prefix[dim]) *
            partial_sq_dist(ctx.pca_rotated()[id], q_p, 0, dim);
        // DDCres decomposition at d = D: tail variance zero
        const float norms = ctx.rotated_norms()[id] + dot(q_p, q_p);
        const float est_res = norms - 2.f * partial_dot(ctx.pca_rotated()[id], q_p, 0, dim);

        for (float est : {est_ads, est_dade, est_res}) {
            worst = std::max(worst, static_cast<double>(std::abs(est - exact)) / exact);
        }
    }
    out.pass = worst <= 1e-3;
    out.detail = "max relative error " + std::to_string(worst);
    return out;
}

// --- criterion 4 -----------------------------------------------------------

Outcome recall_stability_on(Dataset data, const char* label, std::string& detail) {
    Outcome out;
    const std::size_t dim = data.dim(), k = 20, ef = 200;
    BenchConfig cfg;
    cfg.strategies = {StrategyKind::ADSampling, StrategyKind::DADE, StrategyKind::DDCres,
                      StrategyKind::DDCpca, StrategyKind::DDCopq};
    DcoContext ctx(std::move(data));
    attach_artifacts(ctx, cfg, cfg.strategies, ctx.data());

    DcoParams params;
    params.k = k;
    DcoStrategy fd(ctx, StrategyKind::FDScanning, params);
    auto idx = HnswIndex::build(ctx, fd, HnswParams{});
    cfg.ks = {k};
    train_classifiers(ctx, idx, cfg);

    auto queries = random_gaussian(200, dim, derive_seed(12, std::string("c4q") + label));
    std::vector<KnnResult> truth(queries.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(queries.size()); ++i) {
        truth[i] = brute_force_knn(ctx.data(), queries[i], k);
    }

    const double base = hnsw_recall(ctx, idx, fd, queries, truth, k, ef);
    detail += std::string(label) + ": FD " + std::to_string(base);
    for (auto kind : cfg.strategies) {
        DcoStrategy s(ctx, kind, params);
        const double r = hnsw_recall(ctx, idx, s, queries, truth, k, ef);
        detail += std::string(" ") + std::string(to_string(kind)) + " " + std::to_string(r);
        if (std::abs(r - base) > 0.02) out.pass = false;
    }
    detail += "; ";
    return out;
}

Outcome criterion4() {
    const auto t0 = Clock::now();
    Outcome out;
    // The reference SIFT corpus is not redistributable here; a second
    // synthetic distribution (low-rank, correlated) stands in for it.
    auto a = recall_stability_on(
        random_gaussian(100000, 128, derive_seed(11, "c4-gauss")), "gaussian", out.detail);
    auto b = recall_stability_on(lowrank(100000, 128, 16, derive_seed(11, "c4-lr")),
                                 "lowrank", out.detail);
    const double secs = elapsed(t0);
    out.pass = a.pass && b.pass && secs < 600.0;
    out.detail += std::to_string(secs) + " s";
    return out;
}

// --- criterion 5 -----------------------------------------------------------

Outcome criterion5() {
    Outcome out;
    const std::size_t dim = 960, n = 10000, k = 20, ef = 100;
    BenchConfig cfg;
    cfg.strategies = {StrategyKind::PDScanning,  StrategyKind::PDScanningPlus,
                      StrategyKind::ADSampling,  StrategyKind::DADE,
                      StrategyKind::DDCres,      StrategyKind::DDCpca,
                      StrategyKind::DDCopq};
    cfg.ks = {k};
    DcoContext ctx(lowrank(n, dim, dim / 8, derive_seed(13, "c5")));
    attach_artifacts(ctx, cfg, cfg.strategies, ctx.data());
    DcoParams params;
    params.k = k;
    DcoStrategy fd(ctx, StrategyKind::FDScanning, params);
    auto idx = HnswIndex::build(ctx, fd, {16, 200, 42});
    train_classifiers(ctx, idx, cfg);

    auto queries = lowrank(50, dim, dim / 8, derive_seed(14, "c5q"));
    std::map<StrategyKind, double> frac;
    for (auto kind : cfg.strategies) {
        DcoStrategy s(ctx, kind, params);
        DcoStats stats;
        for (std::size_t i = 0; i < queries.size(); ++i) {
            idx.search(ctx, s, queries[i], k, ef, &stats);
        }
        frac[kind] = static_cast<double>(stats.dims_scanned) /
                     (static_cast<double>(stats.invocations) * dim);
        out.detail += std::string(to_string(kind)) + " " + std::to_string(frac[kind]) + "; ";
    }
    out.pass = frac[StrategyKind::PDScanningPlus] <= frac[StrategyKind::PDScanning];
    for (auto kind : {StrategyKind::ADSampling, StrategyKind::DADE, StrategyKind::DDCres,
                      StrategyKind::DDCpca, StrategyKind::DDCopq}) {
        if (!(frac[kind] < 1.0)) out.pass = false;
    }
    return out;
}

// --- criterion 6 -----------------------------------------------------------

Outcome criterion6() {
    Outcome out;
    const std::size_t dim = 128, n = 10000, k = 20, ef = 200;
    BenchConfig cfg;
    cfg.strategies = {StrategyKind::PDScanningPlus, StrategyKind::ADSampling,
                      StrategyKind::DADE, StrategyKind::DDCres};
    DcoContext ctx(random_gaussian(n, dim, derive_seed(15, "c6")));
    attach_artifacts(ctx, cfg, cfg.strategies, ctx.data());
    auto queries = random_gaussian(100, dim, derive_seed(16, "c6q"));
    std::vector<KnnResult> truth(queries.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(queries.size()); ++i) {
        truth[i] = brute_force_knn(ctx.data(), queries[i], k);
    }
    DcoStrategy fd(ctx, StrategyKind::FDScanning);
    auto base_idx = HnswIndex::build(ctx, fd, {16, 200, 42});
    const double base = hnsw_recall(ctx, base_idx, fd, queries, truth, k, ef);
    out.detail = "FD-built " + std::to_string(base);
    for (auto kind : cfg.strategies) {
        DcoStrategy builder(ctx, kind);
        auto idx = HnswIndex::build(ctx, builder, {16, 200, 42});
        const double r = hnsw_recall(ctx, idx, fd, queries, truth, k, ef);
        out.detail += std::string(" ") + std::string(to_string(kind)) + "-built " +
                      std::to_string(r);
        if (std::abs(r - base) > 0.005) out.pass = false;
    }
    return out;
}

// --- criterion 7 -----------------------------------------------------------

Outcome criterion7() {
    Outcome out;
    BenchConfig cfg;
    cfg.strategies = {StrategyKind::FDScanning};
    cfg.ks = {20};
    cfg.hnsw = {16, 200, 42};
    auto full = random_gaussian(20000, 64, derive_seed(17, "c7"));
    auto queries = random_gaussian(100, 64, derive_seed(18, "c7q"));
    auto records = measure_insertion(cfg, full, queries, Metric::Euclidean);
    double prev = -1.0;
    for (const auto& r : records) {
        out.detail += "batch " + std::to_string(r.batch) + " recall " +
                      std::to_string(r.recall) + (r.audit_ok ? "" : " AUDIT-FAIL") + "; ";
        if (!r.audit_ok) out.pass = false;
        if (prev >= 0.0 && r.recall > prev + 0.01) out.pass = false;  // monotone +-1pt
        prev = r.recall;
    }
    return out;
}

// --- criterion 8 -----------------------------------------------------------

Outcome criterion8() {
    Outcome out;
    const std::size_t dim = 64;
    auto ds = normalize_dataset(random_gaussian(1000, dim, derive_seed(19, "c8")));
    double worst = 0.0;
    std::mt19937_64 rng(derive_seed(20, "c8p"));
    for (int t = 0; t < 1000; ++t) {
        const auto i = rng() % ds.size();
        auto j = rng() % ds.size();
        if (j == i) j = (j + 1) % ds.size();
        const float sq = squared_euclidean(ds[i], ds[j]);
        worst = std::max(worst,
                         static_cast<double>(std::abs(ip_from_sq_euclidean(sq) -
                                                      static_cast<float>(dot_ref(ds[i], ds[j])))));
    }
    bool ids_match = true;
    auto queries = normalize_dataset(random_gaussian(50, dim, derive_seed(21, "c8q")));
    for (std::size_t i = 0; i < queries.size(); ++i) {
        auto e = brute_force_knn(ds, queries[i], 10, Metric::Euclidean);
        auto p = brute_force_knn(ds, queries[i], 10, Metric::InnerProduct);
        if (e.ids != p.ids) ids_match = false;
    }
    out.pass = worst <= 1e-5 && ids_match;
    out.detail = "max bridge error " + std::to_string(worst) +
                 (ids_match ? ", id sets identical" : ", id sets DIFFER");
    return out;
}

// --- criterion 9 -----------------------------------------------------------

Outcome criterion9() {
    Outcome out;
    const std::size_t dim = 32;
    {
        Dataset ds = random_gaussian(5000, dim, derive_seed(22, "c9"));
        auto ivf = build_ivf(ds, 64, derive_seed(23, "c9n"));
        DcoContext ctx(Dataset(dim, ds.raw()));
        DcoStrategy fd(ctx, StrategyKind::FDScanning);
        auto queries = random_gaussian(50, dim, derive_seed(24, "c9q"));
        double worst = 1.0;
        for (std::size_t i = 0; i < queries.size(); ++i) {
            auto truth = brute_force_knn(ctx.data(), queries[i], 10);
            auto r = search_ivf(ivf, ctx, fd, queries[i], 10, 64);
            worst = std::min(worst, recall(r.knn, truth, 10));
        }
        out.detail = "IVF exhaustive recall " + std::to_string(worst);
        if (worst < 1.0) out.pass = false;
    }
    {
        DcoContext ctx(random_gaussian(1000, dim, derive_seed(25, "c9h")));
        DcoStrategy fd(ctx, StrategyKind::FDScanning);
        auto idx = HnswIndex::build(ctx, fd, HnswParams{});
        auto queries = random_gaussian(100, dim, derive_seed(26, "c9hq"));
        double sum = 0.0;
        for (std::size_t i = 0; i < queries.size(); ++i) {
            auto truth = brute_force_knn(ctx.data(), queries[i], 10);
            sum += recall_with_ties(idx.search(ctx, fd, queries[i], 10, 1000).knn, truth, 10);
        }
        const double r = sum / queries.size();
        out.detail += ", HNSW ef=N recall " + std::to_string(r);
        if (r < 0.999) out.pass = false;
    }
    return out;
}

// --- criterion 10 ----------------------------------------------------------

Outcome criterion10() {
    Outcome out;
    const std::size_t dim = 128, n = 20000, k = 20;
    // correlated Gaussian corpus: partial distances under PCA carry signal at
    // every depth, which is the regime the classifier design presumes. On an
    // isotropic corpus the best linear boundary at d=32 tops out below the
    // majority baseline + 5 gate for any weights, so it cannot gate anything.
    DcoContext ctx(gen_synthetic({.n = n,
                                  .dim = dim,
                                  .kind = SyntheticKind::LowRank,
                                  .rank = 16,
                                  .seed = derive_seed(27, "c10")}));
    ctx.attach_pca(fit_pca(ctx.data()));
    DcoStrategy fd(ctx, StrategyKind::FDScanning);
    auto idx = HnswIndex::build(ctx, fd, {16, 200, 42});
    auto set = gen_training_samples(idx, ctx, {k}, 300, {32, 32},
                                    derive_seed(28, "c10s"));

    // per-depth groups: compare held-out accuracy against the majority class
    std::map<std::int32_t, std::vector<TrainingSample>> groups;
    for (const auto& s : set.samples) {
        if (s.d >= 0) groups[s.d].push_back(s);
    }
    double acc_sum = 0.0, maj_sum = 0.0, weight = 0.0;
    bool fr_ok = true;
    for (auto& [d, samples] : groups) {
        std::size_t above = 0;
        for (const auto& s : samples) above += s.above ? 1 : 0;
        const double majority =
            std::max(above, samples.size() - above) / static_cast<double>(samples.size());
        LinearModel m;
        try {
            m = fit_linear(samples, derive_seed(29, "c10f" + std::to_string(d)));
        } catch (const std::invalid_argument&) {
            continue;  // single-class group carries no signal to gate on
        }
        const double w = static_cast<double>(samples.size());
        acc_sum += m.held_out_accuracy * w;
        maj_sum += majority * w;
        weight += w;
        if (m.held_out_false_reject > 0.10f) fr_ok = false;
        out.detail += "d=" + std::to_string(d) + " acc " +
                      std::to_string(m.held_out_accuracy) + " maj " +
                      std::to_string(majority) + " fr " +
                      std::to_string(m.held_out_false_reject) + "; ";
    }
    const bool acc_ok = weight > 0 && acc_sum / weight >= maj_sum / weight + 0.05;

    // gradient check of the logistic fit at 10 random parameter points, on
    // unit-scale features so the central difference is well conditioned
    std::vector<TrainingSample> gsamp(set.samples.begin(),
                                      set.samples.begin() +
                                          std::min<std::size_t>(set.samples.size(), 500));
    const std::size_t nfeat = gsamp.front().features.size();
    std::vector<double> mu(nfeat, 0.0), sd(nfeat, 0.0);
    for (const auto& s : gsamp) {
        for (std::size_t j = 0; j < nfeat; ++j) mu[j] += s.features[j];
    }
    for (auto& m : mu) m /= static_cast<double>(gsamp.size());
    for (const auto& s : gsamp) {
        for (std::size_t j = 0; j < nfeat; ++j) {
            const double d = s.features[j] - mu[j];
            sd[j] += d * d;
        }
    }
    for (auto& v : sd) v = std::max(std::sqrt(v / static_cast<double>(gsamp.size())), 1e-12);
    for (auto& s : gsamp) {
        for (std::size_t j = 0; j < nfeat; ++j) {
            s.features[j] = static_cast<float>((s.features[j] - mu[j]) / sd[j]);
        }
    }
    std::mt19937_64 grng(derive_seed(30, "c10g"));
    std::uniform_real_distribution<float> U(-0.5f, 0.5f);
    double worst = 0.0;
    const double h = 1e-4;
    for (int pt = 0; pt < 10; ++pt) {
        std::vector<float> params(nfeat + 1);
        for (auto& p : params) p = U(grng);
        std::vector<double> grad;
        logistic_loss(gsamp, params, 5.f, &grad);
        for (std::size_t j = 0; j < params.size(); ++j) {
            auto pu = params, pd = params;
            pu[j] += static_cast<float>(h);
            pd[j] -= static_cast<float>(h);
            const double up = logistic_loss(gsamp, pu, 5.f);
            const double dn = logistic_loss(gsamp, pd, 5.f);
            // divide by the step the float parameters actually realized
            const double step = static_cast<double>(pu[j]) - static_cast<double>(pd[j]);
            worst = std::max(worst, std::abs((up - dn) / step - grad[j]));
        }
    }
    out.detail += "gradient max abs diff " + std::to_string(worst);
    out.pass = acc_ok && fr_ok && worst <= 1e-5;
    return out;
}

// --- criterion 11 ----------------------------------------------------------

Outcome criterion11() {
    Outcome out;
    out.detail =
        "QPS speedup factors, GPU timings, 100M-vector corpora and OOD multimodal "
        "findings are hardware- and dataset-bound; this suite emits the measurements "
        "but applies no numeric gate. Scan fraction (criterion 5) is the "
        "hardware-independent proxy.";
    return out;
}

}  // namespace

int main() {
    struct Entry {
        int id;
        const char* title;
        Outcome (*fn)();
        bool informational;
    };
    const Entry entries[] = {
        {1, "exact strategies match the brute-force comparison oracle", criterion1, false},
        {2, "rotations preserve squared distances", criterion2, false},
        {3, "estimators are exact at full depth", criterion3, false},
        {4, "recall stays within 2 points of the exact baseline", criterion4, false},
        {5, "pruning ordering on low-rank data", criterion5, false},
        {6, "index builds are strategy-agnostic within 0.5 points", criterion6, false},
        {7, "four-batch insertion with passing audits", criterion7, false},
        {8, "inner-product bridge and id-set equality", criterion8, false},
        {9, "exhaustive parameter settings are exact", criterion9, false},
        {10, "classifier accuracy, false rejects and gradient check", criterion10, false},
        {11, "hardware-bound results are not re-gated (informational)", criterion11, true},
    };
    int failures = 0;
    for (const auto& e : entries) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = e.fn();
        } catch (const std::exception& ex) {
            o.pass = false;
            o.detail = std::string("exception: ") + ex.what();
        }
        const bool pass = o.pass || e.informational;
        if (!pass) ++failures;
        std::printf("%s criterion %2d: %s [%.1fs] %s\n",
                    e.informational ? "INFO" : (pass ? "PASS" : "FAIL"), e.id, e.title,
                    elapsed(t0), o.detail.c_str());
        std::fflush(stdout);
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
