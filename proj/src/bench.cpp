#include "dcobench/bench.hpp"

#include "dcobench/quantize.hpp"
#include "dcobench/train.hpp"
#include "dcobench/transform.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#ifndef DCOBENCH_VERSION
#define DCOBENCH_VERSION "unknown"
#endif

namespace dcobench {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

double mean_recall_at_k(const std::vector<KnnResult>& results,
                        const std::vector<KnnResult>& truth, std::size_t k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        sum += recall_with_ties(results[i], truth[i], k);
    }
    return results.empty() ? 0.0 : sum / static_cast<double>(results.size());
}

}  // namespace

bool needs_pca(StrategyKind k) {
    return k == StrategyKind::PDScanningPlus || k == StrategyKind::DADE ||
           k == StrategyKind::DDCres || k == StrategyKind::DDCpca;
}
bool needs_ortho(StrategyKind k) { return k == StrategyKind::ADSampling; }
bool needs_pq(StrategyKind k) { return k == StrategyKind::DDCopq; }

void attach_artifacts(DcoContext& ctx, const BenchConfig& cfg,
                      const std::vector<StrategyKind>& strategies, const Dataset& fit_set) {
    const bool pca = std::any_of(strategies.begin(), strategies.end(), needs_pca);
    const bool ortho = std::any_of(strategies.begin(), strategies.end(), needs_ortho);
    const bool pq = std::any_of(strategies.begin(), strategies.end(), needs_pq);
    if (pca) ctx.attach_pca(fit_pca(fit_set));
    if (ortho) {
        ctx.attach_ortho(random_orthogonal(ctx.dim(), derive_seed(cfg.seed, "ortho")));
    }
    if (pq) {
        const std::size_t c = cfg.pq_c == 0 ? default_pq_subspaces(ctx.dim()) : cfg.pq_c;
        ctx.attach_codebook(train_pq(fit_set, c, cfg.pq_b, derive_seed(cfg.seed, "pq")));
    }
}

void train_classifiers(DcoContext& ctx, const HnswIndex& index, const BenchConfig& cfg) {
    SampleSet set = gen_training_samples(index, ctx, cfg.ks,
                                         std::max<std::size_t>(cfg.train_queries, 100),
                                         cfg.dco.sched, derive_seed(cfg.seed, "train-samples"));
    auto models = fit_all_models(set, derive_seed(cfg.seed, "fit"));
    std::vector<LinearModel> pca_models, opq_models;
    for (auto& m : models) {
        (m.trained_d < 0 ? opq_models : pca_models).push_back(std::move(m));
    }
    if (!pca_models.empty()) ctx.attach_pca_models(std::move(pca_models));
    if (!opq_models.empty()) ctx.attach_opq_models(std::move(opq_models));
}

std::vector<KnnResult> compute_ground_truth(const Dataset& ds, const Dataset& queries,
                                            std::size_t k, Metric metric) {
    std::vector<KnnResult> truth(queries.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(queries.size()); ++i) {
        truth[i] = brute_force_knn(ds, queries[i], k, metric);
    }
    return truth;
}

std::vector<BenchRecord> run_sweep(const BenchConfig& cfg, const DcoContext& ctx,
                                   const HnswIndex* hnsw, const IvfIndex* ivf,
                                   const Dataset& queries,
                                   const std::vector<KnnResult>& truth) {
    const bool use_hnsw = cfg.index_kind == "hnsw";
    if (use_hnsw && !hnsw) throw ConfigError("run_sweep: HNSW index not provided");
    if (!use_hnsw && !ivf) throw ConfigError("run_sweep: IVF index not provided");
    const auto& grid = use_hnsw ? cfg.ef_grid : cfg.nprobe_grid;
    if (grid.empty()) throw ConfigError("run_sweep: empty sweep grid");
    const std::string sweep_param = use_hnsw ? "ef_search" : "nprobe";
    const std::size_t n = queries.size();
    const double dim = static_cast<double>(ctx.dim());

    std::vector<BenchRecord> records;
    for (StrategyKind kind : cfg.strategies) {
        for (std::size_t k : cfg.ks) {
            DcoParams params = cfg.dco;
            params.k = k;
            DcoStrategy strategy(ctx, kind, params);
            for (std::size_t sweep : grid) {
                auto run_pass = [&](std::vector<KnnResult>* out, DcoStats* stats) {
                    for (std::size_t i = 0; i < n; ++i) {
                        SearchResult r =
                            use_hnsw
                                ? hnsw->search(ctx, strategy, queries[i], k, sweep, stats)
                                : search_ivf(*ivf, ctx, strategy, queries[i], k, sweep, stats);
                        if (out) (*out)[i] = std::move(r.knn);
                    }
                };

                std::vector<KnnResult> results(n);
                DcoStats stats;
                run_pass(&results, &stats);  // warm-up, also yields results/stats

                std::vector<double> walls, loops;
                for (int rep = 0; rep < std::max(cfg.repetitions, 1); ++rep) {
                    DcoStats rep_stats;
                    const auto t0 = Clock::now();
                    run_pass(nullptr, &rep_stats);
                    const double wall = seconds_since(t0);
                    walls.push_back(wall);
                    loops.push_back(wall - rep_stats.preproc_seconds);
                }

                BenchRecord rec;
                rec.strategy = kind;
                rec.index = cfg.index_kind;
                rec.k = k;
                rec.sweep_param = sweep_param;
                rec.sweep_value = sweep;
                rec.recall = mean_recall_at_k(results, truth, k);
                rec.qps_e2e = static_cast<double>(n) / median(walls);
                rec.qps_query = static_cast<double>(n) / median(loops);
                rec.scan_fraction =
                    stats.invocations == 0
                        ? 0.0
                        : static_cast<double>(stats.dims_scanned) /
                              (static_cast<double>(stats.invocations) * dim);
                rec.preproc_ms = stats.preproc_seconds / static_cast<double>(n) * 1e3;
                rec.dco_count = stats.invocations;
                rec.within_count = stats.within;
                records.push_back(rec);
            }
        }
    }
    return records;
}

std::vector<ConstructionRecord> measure_construction(const BenchConfig& cfg,
                                                     const DcoContext& ctx,
                                                     const Dataset& queries,
                                                     const std::vector<KnnResult>& truth) {
    if (cfg.index_kind != "hnsw") {
        throw ConfigError("measure_construction: IVF construction does not invoke DCOs; "
                          "use index = hnsw");
    }
    for (StrategyKind kind : cfg.strategies) {
        if (is_classification(kind)) {
            throw ConfigError("measure_construction: classification strategies require an "
                              "index for training and cannot build one");
        }
    }
    const std::size_t k = cfg.ks.front();
    const std::size_t ef = 200;  // paper default efSearch

    std::vector<ConstructionRecord> records;
    DcoStrategy fd(ctx, StrategyKind::FDScanning, cfg.dco);
    double fd_recall = 0.0;
    for (StrategyKind kind : cfg.strategies) {
        DcoStrategy builder(ctx, kind, cfg.dco);
        const auto t0 = Clock::now();
        HnswIndex idx = HnswIndex::build(ctx, builder, cfg.hnsw);
        ConstructionRecord rec;
        rec.build_strategy = kind;
        rec.build_seconds = seconds_since(t0);
        std::vector<KnnResult> results(queries.size());
        for (std::size_t i = 0; i < queries.size(); ++i) {
            results[i] = idx.search(ctx, fd, queries[i], k, ef).knn;
        }
        rec.recall_fd_search = mean_recall_at_k(results, truth, k);
        if (kind == StrategyKind::FDScanning) fd_recall = rec.recall_fd_search;
        records.push_back(rec);
    }
    for (auto& rec : records) rec.recall_delta_vs_fd_build = rec.recall_fd_search - fd_recall;
    return records;
}

std::vector<InsertionRecord> measure_insertion(const BenchConfig& cfg, const Dataset& full,
                                               const Dataset& queries, Metric metric) {
    if (cfg.index_kind != "hnsw") {
        throw ConfigError("measure_insertion: the insertion protocol is HNSW-only");
    }
    const std::size_t n = full.size();
    const std::size_t base_n = n * 60 / 100;
    if (base_n < 2) throw ConfigError("measure_insertion: dataset too small");
    const std::size_t k = cfg.ks.front();
    const std::size_t ef = 200;

    // batch boundaries at 60/70/80/90/100% of N
    std::vector<std::size_t> bounds{base_n};
    for (int b = 1; b <= 4; ++b) bounds.push_back(base_n + (n - base_n) * b / 4);

    std::vector<InsertionRecord> records;
    for (StrategyKind kind : cfg.strategies) {
        if (is_classification(kind)) {
            throw ConfigError("measure_insertion: insertion requires an exact or "
                              "hypothesis strategy");
        }
        Dataset base(full.dim(),
                     std::vector<float>(full.raw().begin(),
                                        full.raw().begin() + base_n * full.dim()),
                     full.normalized());
        DcoContext ctx(std::move(base));
        attach_artifacts(ctx, cfg, {kind}, ctx.data());  // artifacts frozen on the base set

        DcoStrategy fd(ctx, StrategyKind::FDScanning, cfg.dco);
        DcoStrategy strategy(ctx, kind, cfg.dco);
        HnswIndex idx = HnswIndex::build(ctx, fd, cfg.hnsw);

        double cumulative = 0.0;
        for (std::size_t batch = 0; batch <= 4; ++batch) {
            if (batch > 0) {
                const auto t0 = Clock::now();
                for (std::size_t i = bounds[batch - 1]; i < bounds[batch]; ++i) {
                    const std::uint32_t id = ctx.append(full[i]);
                    idx.insert(ctx, strategy, id);
                }
                cumulative += seconds_since(t0);
            }
            InsertionRecord rec;
            rec.strategy = kind;
            rec.batch = batch;
            rec.index_size = idx.size();
            rec.cumulative_update_seconds = cumulative;
            rec.audit_ok = idx.audit().ok;

            auto truth = compute_ground_truth(ctx.data(), queries, k, metric);
            std::vector<KnnResult> results(queries.size());
            const auto t0 = Clock::now();
            for (std::size_t i = 0; i < queries.size(); ++i) {
                results[i] = idx.search(ctx, strategy, queries[i], k, ef).knn;
            }
            rec.qps = static_cast<double>(queries.size()) / seconds_since(t0);
            rec.recall = mean_recall_at_k(results, truth, k);
            records.push_back(rec);
        }
    }
    return records;
}

std::vector<LimitedDataRecord> limited_data_study(const BenchConfig& cfg, const Dataset& full,
                                                  const Dataset& queries,
                                                  const std::vector<KnnResult>& truth) {
    if (cfg.index_kind != "hnsw") {
        throw ConfigError("limited_data_study: HNSW-only");
    }
    const std::size_t k = cfg.ks.front();
    const std::size_t ef = 200;
    constexpr std::size_t kClassifierFloor = 10000;  // vectors needed for training

    // index quality does not depend on DCO artifacts: build once with FDScanning
    DcoContext plain(Dataset(full.dim(), full.raw(), full.normalized()));
    DcoStrategy fd(plain, StrategyKind::FDScanning, cfg.dco);
    HnswIndex idx = HnswIndex::build(plain, fd, cfg.hnsw);

    std::vector<LimitedDataRecord> records;
    for (double fraction : cfg.fractions) {
        if (fraction <= 0.0 || fraction > 1.0) {
            throw ConfigError("limited_data_study: fractions must lie in (0, 1]");
        }
        const auto subset_n = std::max<std::size_t>(
            2, static_cast<std::size_t>(std::llround(fraction * full.size())));

        // seeded sample, sorted so fraction 1.0 reproduces the standard order
        std::vector<std::uint32_t> ids(full.size());
        std::iota(ids.begin(), ids.end(), 0u);
        std::mt19937_64 rng(derive_seed(cfg.seed, "limited-subset"));
        std::shuffle(ids.begin(), ids.end(), rng);
        ids.resize(subset_n);
        std::sort(ids.begin(), ids.end());
        std::vector<float> sub;
        sub.reserve(subset_n * full.dim());
        for (std::uint32_t id : ids) {
            const auto v = full[id];
            sub.insert(sub.end(), v.begin(), v.end());
        }
        Dataset fit_set(full.dim(), std::move(sub), full.normalized());

        DcoContext ctx(Dataset(full.dim(), full.raw(), full.normalized()));
        attach_artifacts(ctx, cfg, cfg.strategies, fit_set);
        const bool classifiers_ok = subset_n >= kClassifierFloor;
        const bool want_classifiers = std::any_of(cfg.strategies.begin(), cfg.strategies.end(),
                                                  is_classification);
        if (want_classifiers && classifiers_ok) train_classifiers(ctx, idx, cfg);

        for (StrategyKind kind : cfg.strategies) {
            LimitedDataRecord rec;
            rec.fraction = fraction;
            rec.strategy = kind;
            if (is_classification(kind) && !classifiers_ok) {
                rec.skipped = true;
                records.push_back(rec);
                continue;
            }
            DcoParams params = cfg.dco;
            params.k = k;
            DcoStrategy strategy(ctx, kind, params);
            DcoStats stats;
            std::vector<KnnResult> results(queries.size());
            for (std::size_t i = 0; i < queries.size(); ++i) {
                results[i] = idx.search(ctx, strategy, queries[i], k, ef, &stats).knn;
            }
            rec.recall = mean_recall_at_k(results, truth, k);
            rec.scan_fraction = stats.invocations == 0
                                    ? 0.0
                                    : static_cast<double>(stats.dims_scanned) /
                                          (static_cast<double>(stats.invocations) * full.dim());
            records.push_back(rec);
        }
    }
    return records;
}

// ---------------------------------------------------------------------------
// output files

void write_sweep_csv(const std::vector<BenchRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "strategy,index,k,sweep_param,sweep_value,recall,qps_query,qps_e2e,"
           "scan_fraction,preproc_ms,dco_count,within_count\n";
    for (const auto& r : records) {
        out << to_string(r.strategy) << ',' << r.index << ',' << r.k << ',' << r.sweep_param
            << ',' << r.sweep_value << ',' << r.recall << ',' << r.qps_query << ','
            << r.qps_e2e << ',' << r.scan_fraction << ',' << r.preproc_ms << ','
            << r.dco_count << ',' << r.within_count << '\n';
    }
}

void write_construction_csv(const std::vector<ConstructionRecord>& records,
                            const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "build_strategy,build_seconds,recall_fd_search,recall_delta_vs_fd_build\n";
    for (const auto& r : records) {
        out << to_string(r.build_strategy) << ',' << r.build_seconds << ','
            << r.recall_fd_search << ',' << r.recall_delta_vs_fd_build << '\n';
    }
}

void write_insertion_csv(const std::vector<InsertionRecord>& records,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "strategy,batch,index_size,recall,qps,cumulative_update_seconds,audit_ok\n";
    for (const auto& r : records) {
        out << to_string(r.strategy) << ',' << r.batch << ',' << r.index_size << ','
            << r.recall << ',' << r.qps << ',' << r.cumulative_update_seconds << ','
            << (r.audit_ok ? 1 : 0) << '\n';
    }
}

void write_limited_csv(const std::vector<LimitedDataRecord>& records,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "fraction,strategy,status,recall,scan_fraction\n";
    for (const auto& r : records) {
        out << r.fraction << ',' << to_string(r.strategy) << ','
            << (r.skipped ? "SKIPPED" : "OK") << ',' << r.recall << ',' << r.scan_fraction
            << '\n';
    }
}

void write_manifest(const BenchConfig& cfg, const Dataset& ds, const Dataset& queries,
                    const std::string& path) {
    nlohmann::json j;
    j["tool_version"] = DCOBENCH_VERSION;
    j["timestamp"] = static_cast<std::int64_t>(
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
    j["seed"] = cfg.seed;
    j["dataset_fingerprint"] = ds.fingerprint();
    j["query_fingerprint"] = queries.fingerprint();
    nlohmann::json c;
    c["dataset"] = cfg.dataset_path;
    c["queries"] = cfg.query_path;
    c["truth"] = cfg.truth_path;
    c["metric"] = std::string(to_string(cfg.metric));
    c["index"] = cfg.index_kind;
    std::vector<std::string> names;
    for (auto s : cfg.strategies) names.emplace_back(to_string(s));
    c["strategies"] = names;
    c["k_list"] = cfg.ks;
    c["ef_grid"] = cfg.ef_grid;
    c["nprobe_grid"] = cfg.nprobe_grid;
    c["nlist"] = cfg.nlist;
    c["M"] = cfg.hnsw.M;
    c["ef_construction"] = cfg.hnsw.ef_construction;
    c["delta0"] = cfg.dco.sched.delta0;
    c["delta_d"] = cfg.dco.sched.delta_d;
    c["ads_eps0"] = cfg.dco.ads_eps0;
    c["dade_alpha"] = cfg.dco.dade_alpha;
    c["ddcres_m"] = cfg.dco.ddcres_m;
    c["pq_c"] = cfg.pq_c;
    c["pq_b"] = cfg.pq_b;
    c["repetitions"] = cfg.repetitions;
    j["config"] = c;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace dcobench
