// Python surface over the core operations: exact k-NN, synthetic data, and
// an HNSW searcher that can run any of the distance-comparison strategies.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dcobench/bench.hpp"
#include "dcobench/io.hpp"
#include "dcobench/train.hpp"

#include <map>
#include <memory>

namespace py = pybind11;
using namespace dcobench;

namespace {

Dataset dataset_from_array(py::array_t<float, py::array::c_style | py::array::forcecast> arr,
                           bool normalized) {
    if (arr.ndim() != 2) throw py::value_error("expected a 2-D float array (n, d)");
    const auto n = static_cast<std::size_t>(arr.shape(0));
    const auto d = static_cast<std::size_t>(arr.shape(1));
    std::vector<float> buf(arr.data(), arr.data() + n * d);
    return Dataset(d, std::move(buf), normalized);
}

std::vector<float> vector_from_array(
    py::array_t<float, py::array::c_style | py::array::forcecast> arr) {
    if (arr.ndim() != 1) throw py::value_error("expected a 1-D float array");
    return std::vector<float>(arr.data(), arr.data() + arr.shape(0));
}

py::array_t<float> dataset_to_array(const Dataset& ds) {
    py::array_t<float> out({static_cast<py::ssize_t>(ds.size()),
                            static_cast<py::ssize_t>(ds.dim())});
    std::copy(ds.raw().begin(), ds.raw().end(), out.mutable_data());
    return out;
}

py::tuple knn_to_tuple(const KnnResult& r) {
    const std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(r.ids.size())};
    py::array_t<std::uint32_t> ids(shape);
    py::array_t<float> dists(shape);
    std::copy(r.ids.begin(), r.ids.end(), ids.mutable_data());
    std::copy(r.dists.begin(), r.dists.end(), dists.mutable_data());
    return py::make_tuple(ids, dists);
}

/// Owns a dataset, its fitted artifacts and an HNSW index; strategies are
/// constructed on demand and cached per (name, k).
class HnswSearcher {
public:
    HnswSearcher(py::array_t<float, py::array::c_style | py::array::forcecast> data,
                 bool normalized, std::size_t M, std::size_t ef_construction,
                 std::uint64_t seed)
        : ctx_(dataset_from_array(std::move(data), normalized)), seed_(seed) {
        params_.M = M;
        params_.ef_construction = ef_construction;
        params_.seed = seed;
        DcoStrategy fd(ctx_, StrategyKind::FDScanning);
        index_ = std::make_unique<HnswIndex>(HnswIndex::build(ctx_, fd, params_));
    }

    void fit_artifacts(const std::vector<std::string>& strategy_names) {
        std::vector<StrategyKind> kinds;
        for (const auto& n : strategy_names) kinds.push_back(strategy_from_name(n));
        BenchConfig cfg;
        cfg.seed = seed_;
        attach_artifacts(ctx_, cfg, kinds, ctx_.data());
        cache_.clear();
    }

    void train(const std::vector<std::size_t>& ks, std::size_t n_queries) {
        SampleSet set = gen_training_samples(*index_, ctx_, ks, n_queries, ScanSchedule{},
                                             derive_seed(seed_, "train-samples"));
        std::vector<LinearModel> pca_models, opq_models;
        for (auto& m : fit_all_models(set, derive_seed(seed_, "fit"))) {
            (m.trained_d < 0 ? opq_models : pca_models).push_back(std::move(m));
        }
        if (!pca_models.empty()) ctx_.attach_pca_models(std::move(pca_models));
        if (!opq_models.empty()) ctx_.attach_opq_models(std::move(opq_models));
        cache_.clear();
    }

    py::tuple search(py::array_t<float, py::array::c_style | py::array::forcecast> q,
                     std::size_t k, std::size_t ef, const std::string& strategy) {
        const auto vec = vector_from_array(std::move(q));
        DcoStats stats;
        SearchResult r =
            index_->search(ctx_, get_strategy(strategy, k), vec, k, ef, &stats);
        const double scan_fraction =
            stats.invocations == 0
                ? 0.0
                : static_cast<double>(stats.dims_scanned) /
                      (static_cast<double>(stats.invocations) * ctx_.dim());
        py::tuple knn = knn_to_tuple(r.knn);
        return py::make_tuple(knn[0], knn[1], scan_fraction);
    }

    std::uint32_t add(py::array_t<float, py::array::c_style | py::array::forcecast> v) {
        const auto vec = vector_from_array(std::move(v));
        const std::uint32_t id = ctx_.append(vec);
        DcoStrategy fd(ctx_, StrategyKind::FDScanning);
        index_->insert(ctx_, fd, id);
        return id;
    }

    std::size_t size() const { return index_->size(); }
    bool audit() const { return index_->audit().ok; }

private:
    const DcoStrategy& get_strategy(const std::string& name, std::size_t k) {
        const auto kind = strategy_from_name(name);
        const auto key = std::make_pair(kind, k);
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            DcoParams p;
            p.k = k;
            it = cache_.emplace(key, DcoStrategy(ctx_, kind, p)).first;
        }
        return it->second;
    }

    DcoContext ctx_;
    HnswParams params_;
    std::uint64_t seed_;
    std::unique_ptr<HnswIndex> index_;
    std::map<std::pair<StrategyKind, std::size_t>, DcoStrategy> cache_;
};

}  // namespace

PYBIND11_MODULE(_dcobench, m) {
    m.doc() = "vector search with pluggable distance-comparison strategies";

    m.def("strategy_names", &strategy_names);

    m.def(
        "knn",
        [](py::array_t<float, py::array::c_style | py::array::forcecast> data,
           py::array_t<float, py::array::c_style | py::array::forcecast> q, std::size_t k,
           const std::string& metric) {
            const Metric mm = metric_from_name(metric);
            Dataset ds = dataset_from_array(std::move(data), mm != Metric::Euclidean);
            return knn_to_tuple(brute_force_knn(ds, vector_from_array(std::move(q)), k, mm));
        },
        py::arg("data"), py::arg("q"), py::arg("k"), py::arg("metric") = "euclidean",
        "exact k nearest neighbours; returns (ids, squared distances)");

    m.def(
        "recall",
        [](const std::vector<std::uint32_t>& got, const std::vector<std::uint32_t>& want,
           std::size_t k) {
            KnnResult a, b;
            a.ids = got;
            b.ids = want;
            return recall(a, b, k);
        },
        py::arg("got"), py::arg("want"), py::arg("k"));

    m.def(
        "synthetic_gaussian",
        [](std::size_t n, std::size_t dim, std::uint64_t seed) {
            SyntheticSpec spec;
            spec.n = n;
            spec.dim = dim;
            spec.seed = seed;
            return dataset_to_array(gen_synthetic(spec));
        },
        py::arg("n"), py::arg("dim"), py::arg("seed") = 42);

    py::class_<HnswSearcher>(m, "HnswSearcher")
        .def(py::init<py::array_t<float, py::array::c_style | py::array::forcecast>, bool,
                      std::size_t, std::size_t, std::uint64_t>(),
             py::arg("data"), py::arg("normalized") = false, py::arg("M") = 16,
             py::arg("ef_construction") = 500, py::arg("seed") = 42)
        .def("fit_artifacts", &HnswSearcher::fit_artifacts, py::arg("strategies"))
        .def("train", &HnswSearcher::train, py::arg("ks"), py::arg("n_queries") = 200)
        .def("search", &HnswSearcher::search, py::arg("q"), py::arg("k"), py::arg("ef"),
             py::arg("strategy") = "FDScanning",
             "returns (ids, squared distances, scan_fraction)")
        .def("add", &HnswSearcher::add, py::arg("v"))
        .def("audit", &HnswSearcher::audit)
        .def("__len__", &HnswSearcher::size);

    py::register_exception<ConfigError>(m, "ConfigError");
}
