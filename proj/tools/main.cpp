// Command line front end: preprocess | build | train | groundtruth | bench |
// insert-bench | limited-data. Options come from flags or a key=value config
// file (flags win). Exit codes: 0 ok, 1 runtime failure, 2 configuration
// error (bad value, missing artifact).

#include <CLI11.hpp>

#include "dcobench/bench.hpp"
#include "dcobench/io.hpp"
#include "dcobench/train.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using namespace dcobench;

namespace {

struct CliState {
    BenchConfig cfg;
    std::string strategies = "FDScanning";
    std::string ks = "20,100";
    std::string ef_grid = "100,200,400,800";
    std::string nprobe_grid = "8,16,32,64";
    std::string fractions = "0.01,0.1,1.0";
    std::string metric = "euclidean";
    std::string synthetic_kind;  // gaussian | lowrank | concat; empty = file input
    std::size_t synthetic_n = 0;
    std::size_t synthetic_dim = 0;
    std::size_t synthetic_rank = 0;
    std::string synthetic_source;
    std::string mode = "sweep";  // bench: sweep | construction
    std::string samples_csv;     // train: optional feature dump
};

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& s, const char* what, Parse parse) {
    std::vector<T> out;
    for (const auto& item : split_commas(s)) {
        try {
            out.push_back(parse(item));
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError(std::string("invalid ") + what + " entry: " + item);
        }
    }
    if (out.empty()) throw ConfigError(std::string(what) + " list is empty");
    return out;
}

void finalize(CliState& st) {
    st.cfg.strategies = parse_list<StrategyKind>(st.strategies, "strategy",
                                                 [](const std::string& s) {
                                                     return strategy_from_name(s);
                                                 });
    auto to_size = [](const std::string& s) { return std::stoull(s); };
    st.cfg.ks = parse_list<std::size_t>(st.ks, "k", to_size);
    st.cfg.ef_grid = parse_list<std::size_t>(st.ef_grid, "ef_grid", to_size);
    st.cfg.nprobe_grid = parse_list<std::size_t>(st.nprobe_grid, "nprobe_grid", to_size);
    st.cfg.fractions = parse_list<double>(st.fractions, "fraction",
                                          [](const std::string& s) { return std::stod(s); });
    st.cfg.metric = metric_from_name(st.metric);
    if (st.cfg.index_kind != "hnsw" && st.cfg.index_kind != "ivf") {
        throw ConfigError("index must be hnsw or ivf, got: " + st.cfg.index_kind);
    }
    if (!st.synthetic_kind.empty()) {
        SyntheticSpec spec;
        spec.n = st.synthetic_n;
        spec.dim = st.synthetic_dim;
        spec.rank = st.synthetic_rank;
        spec.source = st.synthetic_source;
        spec.seed = derive_seed(st.cfg.seed, "synthetic");
        if (st.synthetic_kind == "gaussian") spec.kind = SyntheticKind::IsotropicGaussian;
        else if (st.synthetic_kind == "lowrank") spec.kind = SyntheticKind::LowRank;
        else if (st.synthetic_kind == "concat") spec.kind = SyntheticKind::ConcatTokens;
        else throw ConfigError("synthetic kind must be gaussian, lowrank or concat");
        if (spec.n == 0 || spec.dim == 0) {
            throw ConfigError("synthetic data needs synthetic-n and synthetic-dim > 0");
        }
        st.cfg.synthetic = spec;
    }
    if (const char* env = std::getenv("DCOBENCH_OUT_DIR")) {
        st.cfg.out_dir = env;  // environment beats config and flags
    }
    fs::create_directories(st.cfg.out_dir);
}

void add_common(CLI::App* sub, CliState& st) {
    // options may appear in a config file and again as flags; the flag wins
    sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    sub->add_option("--dataset", st.cfg.dataset_path, "base vectors (fvecs)");
    sub->add_option("--queries", st.cfg.query_path, "query vectors (fvecs)");
    sub->add_option("--truth", st.cfg.truth_path, "ground truth ids (ivecs)");
    sub->add_option("--out-dir", st.cfg.out_dir,
                    "artifact/result directory (env DCOBENCH_OUT_DIR overrides)");
    sub->add_option("--metric", st.metric, "euclidean | ip | cosine");
    sub->add_option("--strategies", st.strategies, "comma list of strategy names");
    sub->add_option("--index", st.cfg.index_kind, "hnsw | ivf");
    sub->add_option("--k-list", st.ks, "comma list of k values");
    sub->add_option("--ef-grid", st.ef_grid, "HNSW efSearch sweep values");
    sub->add_option("--nprobe-grid", st.nprobe_grid, "IVF nprobe sweep values");
    sub->add_option("--nlist", st.cfg.nlist, "IVF partition count");
    sub->add_option("--hnsw-m", st.cfg.hnsw.M, "HNSW M");
    sub->add_option("--ef-construction", st.cfg.hnsw.ef_construction, "HNSW efConstruction");
    sub->add_option("--delta0", st.cfg.dco.sched.delta0, "first incremental test depth");
    sub->add_option("--delta-d", st.cfg.dco.sched.delta_d, "test depth step");
    sub->add_option("--ads-eps0", st.cfg.dco.ads_eps0, "ADSampling epsilon0");
    sub->add_option("--dade-alpha", st.cfg.dco.dade_alpha, "DADE significance level");
    sub->add_option("--ddcres-m", st.cfg.dco.ddcres_m, "DDCres deviation multiplier");
    sub->add_option("--pq-c", st.cfg.pq_c, "PQ subspaces (0 = auto)");
    sub->add_option("--pq-b", st.cfg.pq_b, "PQ bits per subspace");
    sub->add_option("--seed", st.cfg.seed, "root RNG seed");
    sub->add_option("--repetitions", st.cfg.repetitions, "timed repetitions per point");
    sub->add_option("--n-queries", st.cfg.n_queries, "queries sampled when none given");
    sub->add_option("--train-queries", st.cfg.train_queries, "classifier training queries");
    sub->add_option("--fractions", st.fractions, "limited-data fractions");
    sub->add_option("--synthetic-kind", st.synthetic_kind, "gaussian | lowrank | concat");
    sub->add_option("--synthetic-n", st.synthetic_n, "synthetic vector count");
    sub->add_option("--synthetic-dim", st.synthetic_dim, "synthetic dimensionality");
    sub->add_option("--synthetic-rank", st.synthetic_rank, "low-rank latent dimension");
    sub->add_option("--synthetic-source", st.synthetic_source, "token fvecs for concat");
}

std::string artifact_path(const BenchConfig& cfg, const char* name) {
    return (fs::path(cfg.out_dir) / name).string();
}

void require_file(const std::string& path, const char* what) {
    if (!fs::exists(path)) {
        throw ConfigError(std::string(what) + " not found: " + path +
                          " (run the producing subcommand first)");
    }
}

Dataset load_dataset(const BenchConfig& cfg) {
    if (!cfg.dataset_path.empty()) {
        require_file(cfg.dataset_path, "dataset");
        Dataset ds = read_fvecs(cfg.dataset_path);
        if (cfg.metric != Metric::Euclidean) return normalize_dataset(ds);
        return ds;
    }
    if (cfg.synthetic) {
        Dataset ds = gen_synthetic(*cfg.synthetic);
        if (cfg.metric != Metric::Euclidean) return normalize_dataset(ds);
        return ds;
    }
    throw ConfigError("no input: set --dataset or --synthetic-kind/-n/-dim");
}

Dataset load_queries(const BenchConfig& cfg, const Dataset& ds) {
    if (!cfg.query_path.empty()) {
        require_file(cfg.query_path, "queries");
        Dataset q = read_fvecs(cfg.query_path);
        if (q.dim() != ds.dim()) {
            throw ConfigError("query dimensionality " + std::to_string(q.dim()) +
                              " does not match dataset " + std::to_string(ds.dim()));
        }
        if (cfg.metric != Metric::Euclidean) return normalize_dataset(q);
        return q;
    }
    // no query file: sample in-distribution queries from the dataset
    std::mt19937_64 rng(derive_seed(cfg.seed, "queries"));
    std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
    std::vector<float> buf;
    buf.reserve(cfg.n_queries * ds.dim());
    for (std::size_t i = 0; i < cfg.n_queries; ++i) {
        const auto v = ds[pick(rng)];
        buf.insert(buf.end(), v.begin(), v.end());
    }
    return Dataset(ds.dim(), std::move(buf), ds.normalized());
}

void attach_saved_artifacts(DcoContext& ctx, const BenchConfig& cfg,
                            const std::vector<StrategyKind>& strategies) {
    if (std::any_of(strategies.begin(), strategies.end(), needs_pca)) {
        const auto p = artifact_path(cfg, "pca.dcok");
        require_file(p, "PCA model");
        ctx.attach_pca(load_pca(p));
    }
    if (std::any_of(strategies.begin(), strategies.end(), needs_ortho)) {
        const auto p = artifact_path(cfg, "ortho.dcok");
        require_file(p, "orthogonal projection");
        ctx.attach_ortho(load_ortho(p));
    }
    if (std::any_of(strategies.begin(), strategies.end(), needs_pq)) {
        const auto p = artifact_path(cfg, "pq.dcok");
        require_file(p, "PQ codebook");
        ctx.attach_codebook(load_codebook(p));
    }
    if (std::any_of(strategies.begin(), strategies.end(), is_classification)) {
        const auto prefix = artifact_path(cfg, "models");
        require_file(prefix + ".weights", "trained models");
        std::vector<LinearModel> pca_models, opq_models;
        for (auto& m : load_models(prefix)) {
            (m.trained_d < 0 ? opq_models : pca_models).push_back(std::move(m));
        }
        if (!pca_models.empty()) ctx.attach_pca_models(std::move(pca_models));
        if (!opq_models.empty()) ctx.attach_opq_models(std::move(opq_models));
    }
}

std::vector<KnnResult> load_or_compute_truth(const BenchConfig& cfg, const Dataset& ds,
                                             const Dataset& queries, std::size_t k) {
    if (!cfg.truth_path.empty() && fs::exists(cfg.truth_path)) {
        auto rows = read_ivecs(cfg.truth_path);
        if (rows.size() != queries.size()) {
            throw ConfigError("ground truth has " + std::to_string(rows.size()) +
                              " rows for " + std::to_string(queries.size()) + " queries");
        }
        std::vector<KnnResult> truth(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            truth[i].ids = std::move(rows[i]);
            truth[i].dists.reserve(truth[i].ids.size());
            for (std::uint32_t id : truth[i].ids) {
                truth[i].dists.push_back(cfg.metric == Metric::Euclidean
                                             ? squared_euclidean(ds[id], queries[i])
                                             : 2.f - 2.f * dot(ds[id], queries[i]));
            }
        }
        return truth;
    }
    return compute_ground_truth(ds, queries, k, cfg.metric);
}

// ---------------------------------------------------------------------------

int cmd_preprocess(const CliState& st) {
    const auto& cfg = st.cfg;
    Dataset ds = load_dataset(cfg);
    if (cfg.synthetic) {
        write_fvecs(ds, artifact_path(cfg, "dataset.fvecs"));
        std::cout << "wrote " << artifact_path(cfg, "dataset.fvecs") << " (" << ds.size()
                  << " x " << ds.dim() << ")\n";
    }
    DcoContext ctx(std::move(ds));
    attach_artifacts(ctx, cfg, cfg.strategies, ctx.data());
    if (ctx.has_pca()) {
        save_pca(ctx.pca(), artifact_path(cfg, "pca.dcok"));
        std::cout << "wrote " << artifact_path(cfg, "pca.dcok") << "\n";
    }
    if (ctx.has_ortho()) {
        save_ortho(ctx.ortho(), artifact_path(cfg, "ortho.dcok"));
        std::cout << "wrote " << artifact_path(cfg, "ortho.dcok") << "\n";
    }
    if (ctx.has_codebook()) {
        save_codebook(ctx.codebook(), artifact_path(cfg, "pq.dcok"));
        std::cout << "wrote " << artifact_path(cfg, "pq.dcok") << "\n";
    }
    return 0;
}

int cmd_build(const CliState& st) {
    const auto& cfg = st.cfg;
    DcoContext ctx(load_dataset(cfg));
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.index_kind == "ivf") {
        IvfIndex idx = build_ivf(ctx.data(), cfg.nlist, derive_seed(cfg.seed, "ivf"));
        save_ivf(idx, artifact_path(cfg, "ivf.dcok"));
    } else {
        const StrategyKind kind = cfg.strategies.front();
        if (is_classification(kind)) {
            throw ConfigError("classification strategies need a trained index and cannot "
                              "build one; build with an exact or hypothesis strategy");
        }
        attach_saved_artifacts(ctx, cfg, {kind});
        DcoStrategy dco(ctx, kind, cfg.dco);
        HnswIndex idx = HnswIndex::build(ctx, dco, cfg.hnsw);
        auto audit = idx.audit();
        if (!audit.ok) {
            std::cerr << "index audit failed:\n";
            for (const auto& v : audit.violations) std::cerr << "  " << v << "\n";
            return 1;
        }
        save_hnsw(idx, artifact_path(cfg, "hnsw.dcok"));
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
    std::cout << "built " << cfg.index_kind << " over " << ctx.data().size()
              << " vectors in " << secs << " s\n";
    return 0;
}

int cmd_train(const CliState& st) {
    const auto& cfg = st.cfg;
    DcoContext ctx(load_dataset(cfg));
    // training features need every rotated/coded view the classifiers consume
    std::vector<StrategyKind> wanted;
    for (auto s : cfg.strategies) {
        if (is_classification(s)) wanted.push_back(s);
    }
    if (wanted.empty()) wanted = {StrategyKind::DDCpca, StrategyKind::DDCopq};
    if (std::any_of(wanted.begin(), wanted.end(), needs_pca)) {
        const auto p = artifact_path(cfg, "pca.dcok");
        require_file(p, "PCA model");
        ctx.attach_pca(load_pca(p));
    }
    if (std::any_of(wanted.begin(), wanted.end(), needs_pq)) {
        const auto p = artifact_path(cfg, "pq.dcok");
        require_file(p, "PQ codebook");
        ctx.attach_codebook(load_codebook(p));
    }
    const auto hp = artifact_path(cfg, "hnsw.dcok");
    require_file(hp, "HNSW index");
    HnswIndex idx = load_hnsw(hp);

    SampleSet set = gen_training_samples(idx, ctx, cfg.ks,
                                         std::max<std::size_t>(cfg.train_queries, 100),
                                         cfg.dco.sched, derive_seed(cfg.seed, "train-samples"));
    if (!st.samples_csv.empty()) dump_samples_csv(set, st.samples_csv);
    auto models = fit_all_models(set, derive_seed(cfg.seed, "fit"));
    save_models(models, set.depth_feature_names, ctx.dim(), artifact_path(cfg, "models"));
    std::cout << "fitted " << models.size() << " models from " << set.samples.size()
              << " samples -> " << artifact_path(cfg, "models") << ".{manifest,weights}\n";
    for (const auto& m : models) {
        std::cout << "  k=" << m.trained_k << " d=" << m.trained_d
                  << " acc=" << m.held_out_accuracy
                  << " false_reject=" << m.held_out_false_reject << "\n";
    }
    return 0;
}

int cmd_groundtruth(const CliState& st) {
    const auto& cfg = st.cfg;
    Dataset ds = load_dataset(cfg);
    Dataset queries = load_queries(cfg, ds);
    const std::size_t k = *std::max_element(cfg.ks.begin(), cfg.ks.end());
    auto truth = compute_ground_truth(ds, queries, k, cfg.metric);
    std::vector<std::vector<std::uint32_t>> rows(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) rows[i] = truth[i].ids;
    const std::string out =
        cfg.truth_path.empty() ? artifact_path(cfg, "truth.ivecs") : cfg.truth_path;
    write_ivecs(rows, out);
    if (cfg.query_path.empty()) write_fvecs(queries, artifact_path(cfg, "queries.fvecs"));
    std::cout << "wrote " << out << " (" << rows.size() << " queries, k=" << k << ")\n";
    return 0;
}

int cmd_bench(const CliState& st) {
    const auto& cfg = st.cfg;
    Dataset ds = load_dataset(cfg);
    Dataset queries = load_queries(cfg, ds);
    DcoContext ctx(std::move(ds));
    attach_saved_artifacts(ctx, cfg, cfg.strategies);
    const std::size_t max_k = *std::max_element(cfg.ks.begin(), cfg.ks.end());
    auto truth = load_or_compute_truth(cfg, ctx.data(), queries, max_k);

    if (st.mode == "construction") {
        auto records = measure_construction(cfg, ctx, queries, truth);
        write_construction_csv(records, artifact_path(cfg, "construction.csv"));
        write_manifest(cfg, ctx.data(), queries, artifact_path(cfg, "manifest.json"));
        std::cout << "wrote " << artifact_path(cfg, "construction.csv") << "\n";
        return 0;
    }
    if (st.mode != "sweep") throw ConfigError("mode must be sweep or construction");

    std::optional<HnswIndex> hnsw;
    std::optional<IvfIndex> ivf;
    if (cfg.index_kind == "hnsw") {
        const auto p = artifact_path(cfg, "hnsw.dcok");
        if (fs::exists(p)) {
            hnsw = load_hnsw(p);
        } else {
            DcoStrategy fd(ctx, StrategyKind::FDScanning, cfg.dco);
            hnsw = HnswIndex::build(ctx, fd, cfg.hnsw);
        }
        if (hnsw->size() != ctx.data().size()) {
            throw ConfigError("saved index covers " + std::to_string(hnsw->size()) +
                              " vectors, dataset has " + std::to_string(ctx.data().size()));
        }
    } else {
        const auto p = artifact_path(cfg, "ivf.dcok");
        ivf = fs::exists(p) ? load_ivf(p)
                            : build_ivf(ctx.data(), cfg.nlist, derive_seed(cfg.seed, "ivf"));
    }

    auto records = run_sweep(cfg, ctx, hnsw ? &*hnsw : nullptr, ivf ? &*ivf : nullptr,
                             queries, truth);
    write_sweep_csv(records, artifact_path(cfg, "sweep.csv"));
    write_manifest(cfg, ctx.data(), queries, artifact_path(cfg, "manifest.json"));
    std::cout << "wrote " << artifact_path(cfg, "sweep.csv") << " ("
              << records.size() << " rows)\n";
    return 0;
}

int cmd_insert_bench(const CliState& st) {
    const auto& cfg = st.cfg;
    Dataset ds = load_dataset(cfg);
    Dataset queries = load_queries(cfg, ds);
    auto records = measure_insertion(cfg, ds, queries, cfg.metric);
    write_insertion_csv(records, artifact_path(cfg, "insertion.csv"));
    std::cout << "wrote " << artifact_path(cfg, "insertion.csv") << "\n";
    for (const auto& r : records) {
        if (!r.audit_ok) {
            std::cerr << "audit failed after batch " << r.batch << " ("
                      << to_string(r.strategy) << ")\n";
            return 1;
        }
    }
    return 0;
}

int cmd_limited_data(const CliState& st) {
    const auto& cfg = st.cfg;
    Dataset ds = load_dataset(cfg);
    Dataset queries = load_queries(cfg, ds);
    const std::size_t k = cfg.ks.front();
    auto truth = load_or_compute_truth(cfg, ds, queries, k);
    auto records = limited_data_study(cfg, ds, queries, truth);
    write_limited_csv(records, artifact_path(cfg, "limited.csv"));
    std::cout << "wrote " << artifact_path(cfg, "limited.csv") << "\n";
    return 0;
}

}  // namespace

// Expands `--config FILE` (or --config=FILE) into `--key value` pairs placed
// before the remaining flags, so explicit flags override file values.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    for (std::size_t i = 0; i < args.size(); ++i) {
        std::string path;
        std::size_t span = 0;
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            span = 2;
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            span = 1;
        } else {
            continue;
        }
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read config file: " + path);
        std::vector<std::string> expanded;
        std::string line;
        while (std::getline(in, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                const auto b = s.find_last_not_of(" \t\r");
                return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) continue;
            expanded.push_back("--" + key);
            expanded.push_back(value);
        }
        args.erase(args.begin() + i, args.begin() + i + span);
        args.insert(args.begin() + i, expanded.begin(), expanded.end());
        i += expanded.size() - 1;
    }
    return args;
}

int main(int argc, char** argv) {
    CLI::App app{"DCO-accelerated vector search benchmark toolkit"};
    app.footer("Options may also come from a key=value file via --config FILE;\n"
               "explicit flags override file values. DCOBENCH_OUT_DIR overrides out-dir.");
    app.require_subcommand(1);
    CliState st;

    auto* preprocess = app.add_subcommand(
        "preprocess", "fit rotation / PQ artifacts (and emit synthetic data)");
    auto* build = app.add_subcommand("build", "build and save an HNSW or IVF index");
    auto* train = app.add_subcommand("train", "fit classification models on an index");
    train->add_option("--samples-csv", st.samples_csv, "dump training features to CSV");
    auto* groundtruth =
        app.add_subcommand("groundtruth", "exact k-NN ids for the query set");
    auto* bench = app.add_subcommand("bench", "recall / QPS sweep or construction study");
    bench->add_option("--mode", st.mode, "sweep | construction");
    auto* insert = app.add_subcommand("insert-bench", "incremental insertion protocol");
    auto* limited = app.add_subcommand("limited-data", "artifact quality vs training fraction");
    for (auto* sub : {preprocess, build, train, groundtruth, bench, insert, limited}) {
        add_common(sub, st);
    }

    try {
        auto args = expand_config(argc, argv);
        std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    }

    try {
        finalize(st);
        if (preprocess->parsed()) return cmd_preprocess(st);
        if (build->parsed()) return cmd_build(st);
        if (train->parsed()) return cmd_train(st);
        if (groundtruth->parsed()) return cmd_groundtruth(st);
        if (bench->parsed()) return cmd_bench(st);
        if (insert->parsed()) return cmd_insert_bench(st);
        if (limited->parsed()) return cmd_limited_data(st);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
