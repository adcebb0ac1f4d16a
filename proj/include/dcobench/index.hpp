#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dcobench/core.hpp"
#include "dcobench/dco.hpp"

namespace dcobench {

struct SearchResult {
    KnnResult knn;
    DcoStats stats;
};

struct HnswParams {
    std::size_t M = 16;
    std::size_t ef_construction = 500;
    std::uint64_t seed = 42;
};

/// HNSW graph over ids owned by a DcoContext. Candidate evaluation in the
/// layer-0 beam goes through the configured DCO strategy; upper-layer greedy
/// descent uses plain distances (few nodes are touched there).
class HnswIndex {
public:
    HnswIndex(std::size_t dim, HnswParams params);

    static HnswIndex build(const DcoContext& ctx, const DcoStrategy& dco, HnswParams params);

    /// Links the vector already appended to ctx under `id`. Exact or
    /// hypothesis strategies only.
    void insert(const DcoContext& ctx, const DcoStrategy& dco, std::uint32_t id);

    /// DCO events (candidate id, threshold) observed during a search;
    /// warm-up comparisons with the infinite sentinel are not recorded.
    using EventLog = std::vector<std::pair<std::uint32_t, float>>;

    SearchResult search(const DcoContext& ctx, const DcoStrategy& dco, VectorView q,
                        std::size_t k, std::size_t ef, DcoStats* stats = nullptr,
                        EventLog* events = nullptr) const;

    std::size_t size() const { return levels_.size(); }
    std::size_t dim() const { return dim_; }
    const HnswParams& params() const { return params_; }
    int max_level() const { return max_level_; }
    std::uint32_t entry_point() const { return entry_; }
    int level_of(std::uint32_t id) const { return levels_[id]; }
    const std::vector<std::uint32_t>& neighbors(std::uint32_t id, int level) const;

    struct AuditReport {
        bool ok = true;
        std::size_t nodes = 0;
        std::size_t edges = 0;
        double layer0_reachable_fraction = 0.0;
        std::vector<std::string> violations;
    };
    AuditReport audit() const;

    // persistence hooks (payload encode/decode lives in io)
    friend void save_hnsw(const HnswIndex&, const std::string&);
    friend HnswIndex load_hnsw(const std::string&);

private:
    struct Node {
        std::vector<std::vector<std::uint32_t>> links;  // per level
    };

    int random_level();
    std::size_t max_degree(int level) const { return level == 0 ? 2 * params_.M : params_.M; }

    // layer-0 beam search through the DCO; returns (id, dist) pairs sorted asc
    std::vector<std::pair<float, std::uint32_t>> search_layer0(
        const DcoContext& ctx, const DcoStrategy& dco, const QueryContext& qctx,
        std::uint32_t entry, float entry_dist, std::size_t ef, DcoStats& stats,
        EventLog* events = nullptr) const;

    // upper-layer beam with exact distances (used during construction)
    std::vector<std::pair<float, std::uint32_t>> search_layer_exact(
        const Dataset& store, VectorView q, std::uint32_t entry, float entry_dist,
        std::size_t ef, int level) const;

    std::vector<std::uint32_t> select_neighbors(
        const Dataset& store, std::vector<std::pair<float, std::uint32_t>> candidates,
        std::size_t m) const;

    std::size_t dim_;
    HnswParams params_;
    double level_mult_;
    std::mt19937_64 rng_;
    std::vector<int> levels_;
    std::vector<Node> nodes_;
    std::uint32_t entry_ = 0;
    int max_level_ = -1;

    mutable std::vector<std::uint32_t> visit_stamp_;
    mutable std::uint32_t visit_epoch_ = 0;
};

struct IvfIndex {
    std::size_t dim = 0;
    std::size_t nlist = 0;
    std::vector<float> centroids;        // nlist * dim
    std::vector<std::uint64_t> offsets;  // nlist + 1, into ids
    std::vector<std::uint32_t> ids;      // contiguous per-partition vector ids
};

IvfIndex build_ivf(const Dataset& ds, std::size_t nlist, std::uint64_t seed);

SearchResult search_ivf(const IvfIndex& idx, const DcoContext& ctx, const DcoStrategy& dco,
                        VectorView q, std::size_t k, std::size_t nprobe,
                        DcoStats* stats = nullptr);

}  // namespace dcobench
