#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dcobench/core.hpp"
#include "dcobench/dco.hpp"
#include "dcobench/index.hpp"
#include "dcobench/io.hpp"

namespace dcobench {

struct BenchConfig {
    std::string dataset_path;
    std::string query_path;  // optional distinct file (OOD queries)
    std::string truth_path;
    std::string out_dir = ".";
    std::optional<SyntheticSpec> synthetic;
    Metric metric = Metric::Euclidean;

    std::vector<StrategyKind> strategies;
    std::string index_kind = "hnsw";  // "hnsw" | "ivf"
    std::vector<std::size_t> ks{20, 100};
    // desk-scale sweep grids; the paper's full grids are efSearch 100..1500
    // step 100 and nprobe 20..400 step 20
    std::vector<std::size_t> ef_grid{100, 200, 400, 800};
    std::vector<std::size_t> nprobe_grid{8, 16, 32, 64};
    std::size_t nlist = 256;
    HnswParams hnsw;
    DcoParams dco;
    std::size_t pq_c = 0;  // 0 = auto (D/8 capped at 64)
    std::size_t pq_b = 8;

    std::uint64_t seed = 42;
    int repetitions = 3;
    std::size_t n_queries = 100;      // when queries are sampled/generated
    std::size_t train_queries = 200;  // classifier sample generation
    std::vector<double> fractions{0.01, 0.1, 1.0};
};

struct BenchRecord {
    StrategyKind strategy = StrategyKind::FDScanning;
    std::string index;
    std::size_t k = 0;
    std::string sweep_param;
    std::size_t sweep_value = 0;
    double recall = 0.0;
    double qps_query = 0.0;
    double qps_e2e = 0.0;
    double scan_fraction = 0.0;
    double preproc_ms = 0.0;
    std::uint64_t dco_count = 0;
    std::uint64_t within_count = 0;
};

struct ConstructionRecord {
    StrategyKind build_strategy = StrategyKind::FDScanning;
    double build_seconds = 0.0;
    double recall_fd_search = 0.0;  // searched with FDScanning
    double recall_delta_vs_fd_build = 0.0;
};

struct InsertionRecord {
    StrategyKind strategy = StrategyKind::FDScanning;
    std::size_t batch = 0;  // 0 = base build
    std::size_t index_size = 0;
    double recall = 0.0;
    double qps = 0.0;
    double cumulative_update_seconds = 0.0;
    bool audit_ok = false;
};

struct LimitedDataRecord {
    double fraction = 0.0;
    StrategyKind strategy = StrategyKind::FDScanning;
    bool skipped = false;  // classifier below its training floor
    double recall = 0.0;
    double scan_fraction = 0.0;
};

bool needs_pca(StrategyKind k);
bool needs_ortho(StrategyKind k);
bool needs_pq(StrategyKind k);

/// Fits and attaches every artifact the listed strategies need, using
/// `fit_set` as the training data (usually the dataset itself; the limited
/// data study passes subsets).
void attach_artifacts(DcoContext& ctx, const BenchConfig& cfg,
                      const std::vector<StrategyKind>& strategies, const Dataset& fit_set);

/// Generates samples on the given index and attaches fitted DDCpca/DDCopq
/// models for every k in the config.
void train_classifiers(DcoContext& ctx, const HnswIndex& index, const BenchConfig& cfg);

/// Ground truth for every query at the largest k, exact distances included.
std::vector<KnnResult> compute_ground_truth(const Dataset& ds, const Dataset& queries,
                                            std::size_t k, Metric metric);

std::vector<BenchRecord> run_sweep(const BenchConfig& cfg, const DcoContext& ctx,
                                   const HnswIndex* hnsw, const IvfIndex* ivf,
                                   const Dataset& queries,
                                   const std::vector<KnnResult>& truth);

std::vector<ConstructionRecord> measure_construction(const BenchConfig& cfg,
                                                     const DcoContext& ctx,
                                                     const Dataset& queries,
                                                     const std::vector<KnnResult>& truth);

std::vector<InsertionRecord> measure_insertion(const BenchConfig& cfg, const Dataset& full,
                                               const Dataset& queries, Metric metric);

std::vector<LimitedDataRecord> limited_data_study(const BenchConfig& cfg, const Dataset& full,
                                                  const Dataset& queries,
                                                  const std::vector<KnnResult>& truth);

void write_sweep_csv(const std::vector<BenchRecord>& records, const std::string& path);
void write_construction_csv(const std::vector<ConstructionRecord>&, const std::string& path);
void write_insertion_csv(const std::vector<InsertionRecord>&, const std::string& path);
void write_limited_csv(const std::vector<LimitedDataRecord>&, const std::string& path);

/// JSON run manifest: config echo, seeds, dataset fingerprints, tool version.
void write_manifest(const BenchConfig& cfg, const Dataset& ds, const Dataset& queries,
                    const std::string& path);

}  // namespace dcobench
