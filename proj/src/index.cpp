#include "dcobench/index.hpp"

#include "dcobench/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace dcobench {

namespace {
constexpr float kInf = std::numeric_limits<float>::infinity();

using HeapEntry = std::pair<float, std::uint32_t>;  // (dist, id)
using MaxHeap = std::priority_queue<HeapEntry>;
using MinHeap = std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>>;
}  // namespace

// ---------------------------------------------------------------------------
// HNSW

HnswIndex::HnswIndex(std::size_t dim, HnswParams params)
    : dim_(dim),
      params_(params),
      level_mult_(1.0 / std::log(static_cast<double>(std::max<std::size_t>(params.M, 2)))),
      rng_(params.seed) {
    if (params_.M < 2) throw ConfigError("HNSW M must be >= 2");
    if (params_.ef_construction < params_.M) {
        throw ConfigError("efConstruction must be >= M");
    }
}

int HnswIndex::random_level() {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double r = u(rng_);
    if (r <= 0.0) r = std::numeric_limits<double>::min();
    return static_cast<int>(-std::log(r) * level_mult_);
}

const std::vector<std::uint32_t>& HnswIndex::neighbors(std::uint32_t id, int level) const {
    return nodes_[id].links[level];
}

std::vector<std::pair<float, std::uint32_t>> HnswIndex::search_layer_exact(
    const Dataset& store, VectorView q, std::uint32_t entry, float entry_dist,
    std::size_t ef, int level) const {
    MinHeap cands;
    MaxHeap results;
    std::vector<bool> visited(levels_.size(), false);
    cands.emplace(entry_dist, entry);
    results.emplace(entry_dist, entry);
    visited[entry] = true;

    while (!cands.empty()) {
        auto [cd, c] = cands.top();
        if (results.size() >= ef && cd > results.top().first) break;
        cands.pop();
        for (std::uint32_t e : nodes_[c].links[level]) {
            if (visited[e]) continue;
            visited[e] = true;
            const float d = squared_euclidean(store[e], q);
            if (results.size() < ef || d < results.top().first) {
                cands.emplace(d, e);
                results.emplace(d, e);
                if (results.size() > ef) results.pop();
            }
        }
    }
    std::vector<std::pair<float, std::uint32_t>> out;
    out.reserve(results.size());
    while (!results.empty()) {
        out.push_back(results.top());
        results.pop();
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::pair<float, std::uint32_t>> HnswIndex::search_layer0(
    const DcoContext& /*ctx*/, const DcoStrategy& dco, const QueryContext& qctx,
    std::uint32_t entry, float /*entry_dist*/, std::size_t ef, DcoStats& stats,
    EventLog* events) const {
    MinHeap cands;
    MaxHeap results;
    std::vector<bool> visited(levels_.size(), false);

    const DcoOutcome seed = dco.compare(qctx, entry, kInf);
    stats.add(seed);
    cands.emplace(seed.distance, entry);
    results.emplace(seed.distance, entry);
    visited[entry] = true;

    while (!cands.empty()) {
        auto [cd, c] = cands.top();
        if (results.size() >= ef && cd > results.top().first) break;
        cands.pop();
        for (std::uint32_t e : nodes_[c].links[0]) {
            if (visited[e]) continue;
            visited[e] = true;
            // tau is the worst retained candidate; infinite until the beam fills
            const float tau = results.size() >= ef ? results.top().first : kInf;
            if (events && tau < kInf) events->emplace_back(e, tau);
            const DcoOutcome out = dco.compare(qctx, e, tau);
            stats.add(out);
            if (!out.within) continue;
            if (results.size() < ef || out.distance < results.top().first) {
                cands.emplace(out.distance, e);
                results.emplace(out.distance, e);
                if (results.size() > ef) results.pop();
            }
        }
    }
    std::vector<std::pair<float, std::uint32_t>> out;
    out.reserve(results.size());
    while (!results.empty()) {
        out.push_back(results.top());
        results.pop();
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::uint32_t> HnswIndex::select_neighbors(
    const Dataset& store, std::vector<std::pair<float, std::uint32_t>> candidates,
    std::size_t m) const {
    std::sort(candidates.begin(), candidates.end());
    std::vector<std::uint32_t> selected;
    selected.reserve(m);
    for (const auto& [dist_cq, c] : candidates) {
        if (selected.size() >= m) break;
        bool keep = true;
        for (std::uint32_t s : selected) {
            if (squared_euclidean(store[c], store[s]) < dist_cq) {
                keep = false;
                break;
            }
        }
        if (keep) selected.push_back(c);
    }
    return selected;
}

HnswIndex HnswIndex::build(const DcoContext& ctx, const DcoStrategy& dco, HnswParams params) {
    if (is_classification(dco.kind())) {
        throw ConfigError("classification strategies cannot build an index: "
                          "they require an index for training");
    }
    if (ctx.data().size() == 0) throw std::invalid_argument("build on empty dataset");
    HnswIndex idx(ctx.data().dim(), params);
    idx.levels_.reserve(ctx.data().size());
    idx.nodes_.reserve(ctx.data().size());
    for (std::uint32_t id = 0; id < ctx.data().size(); ++id) {
        idx.insert(ctx, dco, id);
    }
    return idx;
}

void HnswIndex::insert(const DcoContext& ctx, const DcoStrategy& dco, std::uint32_t id) {
    if (is_classification(dco.kind())) {
        throw ConfigError("insertion requires an exact or hypothesis strategy");
    }
    const Dataset& store = ctx.data();
    if (store.dim() != dim_) throw std::invalid_argument("insert: dimension mismatch");
    if (id != levels_.size()) throw std::invalid_argument("insert: ids must be appended in order");

    const int level = random_level();
    levels_.push_back(level);
    nodes_.emplace_back();
    nodes_[id].links.resize(level + 1);

    if (id == 0) {
        entry_ = 0;
        max_level_ = level;
        return;
    }

    const VectorView v = store[id];
    std::uint32_t cur = entry_;
    float cur_dist = squared_euclidean(store[cur], v);

    for (int l = max_level_; l > level; --l) {
        bool improved = true;
        while (improved) {
            improved = false;
            for (std::uint32_t e : nodes_[cur].links[l]) {
                const float d = squared_euclidean(store[e], v);
                if (d < cur_dist) {
                    cur_dist = d;
                    cur = e;
                    improved = true;
                }
            }
        }
    }

    QueryContext qctx;
    DcoStats stats;
    bool qctx_ready = false;
    for (int l = std::min(level, max_level_); l >= 0; --l) {
        std::vector<std::pair<float, std::uint32_t>> cands;
        if (l == 0) {
            if (!qctx_ready) {
                dco.prepare_query(qctx, v);
                qctx_ready = true;
            }
            cands = search_layer0(ctx, dco, qctx, cur, cur_dist, params_.ef_construction, stats);
        } else {
            cands = search_layer_exact(store, v, cur, cur_dist, params_.ef_construction, l);
        }
        auto selected = select_neighbors(store, cands, params_.M);
        nodes_[id].links[l] = selected;
        for (std::uint32_t n : selected) {
            auto& nl = nodes_[n].links[l];
            nl.push_back(id);
            if (nl.size() > max_degree(l)) {
                std::vector<std::pair<float, std::uint32_t>> nc;
                nc.reserve(nl.size());
                for (std::uint32_t x : nl) {
                    nc.emplace_back(squared_euclidean(store[x], store[n]), x);
                }
                nl = select_neighbors(store, std::move(nc), max_degree(l));
            }
        }
        if (!cands.empty()) {
            cur = cands.front().second;
            cur_dist = cands.front().first;
        }
    }

    if (level > max_level_) {
        max_level_ = level;
        entry_ = id;
    }
}

SearchResult HnswIndex::search(const DcoContext& ctx, const DcoStrategy& dco, VectorView q,
                               std::size_t k, std::size_t ef, DcoStats* stats_out,
                               EventLog* events) const {
    if (k == 0 || k > size()) throw std::invalid_argument("k must be in [1, N]");
    if (ef < k) ef = k;
    const Dataset& store = ctx.data();

    SearchResult res;
    QueryContext qctx;
    dco.prepare_query(qctx, q);
    res.stats.preproc_seconds = qctx.preproc_seconds;

    std::uint32_t cur = entry_;
    float cur_dist = squared_euclidean(store[cur], q);
    for (int l = max_level_; l > 0; --l) {
        bool improved = true;
        while (improved) {
            improved = false;
            for (std::uint32_t e : nodes_[cur].links[l]) {
                const float d = squared_euclidean(store[e], q);
                if (d < cur_dist) {
                    cur_dist = d;
                    cur = e;
                    improved = true;
                }
            }
        }
    }

    auto beam = search_layer0(ctx, dco, qctx, cur, cur_dist, ef, res.stats, events);
    const std::size_t n = std::min(k, beam.size());
    res.knn.ids.reserve(n);
    res.knn.dists.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        res.knn.dists.push_back(beam[i].first);
        res.knn.ids.push_back(beam[i].second);
    }
    if (stats_out) stats_out->merge(res.stats);
    return res;
}

HnswIndex::AuditReport HnswIndex::audit() const {
    AuditReport rep;
    rep.nodes = levels_.size();
    const auto n = static_cast<std::uint32_t>(levels_.size());
    for (std::uint32_t id = 0; id < n; ++id) {
        const auto& node = nodes_[id];
        if (node.links.size() != static_cast<std::size_t>(levels_[id] + 1)) {
            rep.violations.push_back("node " + std::to_string(id) + ": layer count mismatch");
        }
        for (int l = 0; l < static_cast<int>(node.links.size()); ++l) {
            if (node.links[l].size() > max_degree(l)) {
                rep.violations.push_back("node " + std::to_string(id) + " level " +
                                         std::to_string(l) + ": degree bound exceeded");
            }
            for (std::uint32_t e : node.links[l]) {
                rep.edges++;
                if (e >= n) {
                    rep.violations.push_back("node " + std::to_string(id) +
                                             ": invalid edge target");
                } else if (levels_[e] < l) {
                    rep.violations.push_back("node " + std::to_string(id) + " level " +
                                             std::to_string(l) + ": edge to lower-level node");
                }
            }
        }
    }
    // layer-0 reachability from the entry point
    std::vector<bool> seen(n, false);
    std::vector<std::uint32_t> stack{entry_};
    seen[entry_] = true;
    std::size_t reached = 0;
    while (!stack.empty()) {
        const std::uint32_t c = stack.back();
        stack.pop_back();
        ++reached;
        for (std::uint32_t e : nodes_[c].links[0]) {
            if (e < n && !seen[e]) {
                seen[e] = true;
                stack.push_back(e);
            }
        }
    }
    rep.layer0_reachable_fraction = n == 0 ? 0.0 : static_cast<double>(reached) / n;
    if (rep.layer0_reachable_fraction < 0.99) {
        rep.violations.push_back("layer-0 reachability below 99%");
    }
    rep.ok = rep.violations.empty();
    return rep;
}

// ---------------------------------------------------------------------------
// IVF

IvfIndex build_ivf(const Dataset& ds, std::size_t nlist, std::uint64_t seed) {
    if (nlist == 0 || nlist > ds.size()) {
        throw std::invalid_argument("nlist must be in [1, N]");
    }
    KmeansResult km = kmeans(ds.raw().data(), ds.size(), ds.dim(), nlist, 25, seed);

    IvfIndex idx;
    idx.dim = ds.dim();
    idx.nlist = nlist;
    idx.centroids = std::move(km.centroids);
    idx.offsets.assign(nlist + 1, 0);
    for (std::uint32_t a : km.assign) ++idx.offsets[a + 1];
    for (std::size_t i = 1; i <= nlist; ++i) idx.offsets[i] += idx.offsets[i - 1];
    idx.ids.resize(ds.size());
    std::vector<std::uint64_t> cursor(idx.offsets.begin(), idx.offsets.end() - 1);
    for (std::uint32_t i = 0; i < ds.size(); ++i) {
        idx.ids[cursor[km.assign[i]]++] = i;  // ascending ids within a partition
    }
    return idx;
}

SearchResult search_ivf(const IvfIndex& idx, const DcoContext& ctx, const DcoStrategy& dco,
                        VectorView q, std::size_t k, std::size_t nprobe, DcoStats* stats_out) {
    if (k == 0 || k > ctx.data().size()) throw std::invalid_argument("k must be in [1, N]");
    if (nprobe == 0 || nprobe > idx.nlist) {
        throw std::invalid_argument("nprobe must be in [1, nlist]");
    }
    if (q.size() != idx.dim) throw std::invalid_argument("query dimension mismatch");

    SearchResult res;
    QueryContext qctx;
    dco.prepare_query(qctx, q);
    res.stats.preproc_seconds = qctx.preproc_seconds;

    std::vector<std::pair<float, std::uint32_t>> parts(idx.nlist);
    for (std::size_t p = 0; p < idx.nlist; ++p) {
        parts[p] = {squared_euclidean(
                        VectorView(idx.centroids.data() + p * idx.dim, idx.dim), q),
                    static_cast<std::uint32_t>(p)};
    }
    std::partial_sort(parts.begin(), parts.begin() + nprobe, parts.end());

    MaxHeap heap;  // k best so far
    for (std::size_t p = 0; p < nprobe; ++p) {
        const std::uint32_t part = parts[p].second;
        for (std::uint64_t i = idx.offsets[part]; i < idx.offsets[part + 1]; ++i) {
            const std::uint32_t id = idx.ids[i];
            const float tau = heap.size() >= k ? heap.top().first : kInf;
            const DcoOutcome out = dco.compare(qctx, id, tau);
            res.stats.add(out);
            if (!out.within) continue;
            if (heap.size() < k) {
                heap.emplace(out.distance, id);
            } else if (out.distance < heap.top().first) {
                heap.pop();
                heap.emplace(out.distance, id);
            }
        }
    }
    if (heap.size() < k) {
        throw std::runtime_error("search_ivf: probed partitions hold fewer than k vectors; "
                                 "increase nprobe");
    }
    res.knn.ids.resize(k);
    res.knn.dists.resize(k);
    for (std::size_t i = k; i-- > 0;) {
        res.knn.dists[i] = heap.top().first;
        res.knn.ids[i] = heap.top().second;
        heap.pop();
    }
    if (stats_out) stats_out->merge(res.stats);
    return res;
}

}  // namespace dcobench
