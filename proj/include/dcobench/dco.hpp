#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dcobench/core.hpp"
#include "dcobench/quantize.hpp"
#include "dcobench/transform.hpp"

namespace dcobench {

/// Raised when a strategy is constructed without a required artifact or a
/// configuration value is invalid. Never thrown mid-query.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class StrategyKind : std::uint8_t {
    FDScanning,
    PDScanning,
    PDScanningPlus,
    ADSampling,
    DADE,
    DDCres,
    DDCpca,
    DDCopq,
};

constexpr std::size_t kStrategyCount = 8;
StrategyKind strategy_from_name(std::string_view name);
std::string_view to_string(StrategyKind k);
std::vector<std::string> strategy_names();
bool is_exact(StrategyKind k);
bool is_classification(StrategyKind k);

struct ScanSchedule {
    std::uint32_t delta0 = 32;
    std::uint32_t delta_d = 32;
};

/// Test depths delta0, delta0+delta_d, ... strictly below D.
std::vector<std::uint32_t> scheduled_depths(const ScanSchedule& s, std::size_t dim);

struct DcoParams {
    ScanSchedule sched;
    float ads_eps0 = 2.1f;    // ADSampling: eps_d = eps0 / sqrt(d)
    float dade_alpha = 0.05f; // DADE significance level
    float ddcres_m = 3.0f;    // DDCres deviation multiplier
    std::size_t k = 20;       // query parameter the classifiers were trained for
};

struct DcoOutcome {
    bool within = false;
    float distance = 0.f;              // exact squared distance, valid iff within
    std::uint32_t dims_scanned = 0;
    std::uint32_t code_ops = 0;        // PQ table lookups (DDCopq only)
};

struct DcoStats {
    std::uint64_t invocations = 0;
    std::uint64_t dims_scanned = 0;
    std::uint64_t within = 0;
    std::uint64_t above = 0;
    std::uint64_t code_ops = 0;
    double preproc_seconds = 0.0;

    void add(const DcoOutcome& o) {
        ++invocations;
        dims_scanned += o.dims_scanned;
        code_ops += o.code_ops;
        if (o.within) ++within; else ++above;
    }
    void merge(const DcoStats& s);
};

struct LinearModel {
    std::vector<float> weights;
    float bias = 0.f;
    std::uint32_t trained_k = 0;
    std::int32_t trained_d = -1;  // -1 for the PQ-feature model
    float held_out_accuracy = 0.f;
    float held_out_false_reject = 0.f;

    float score(const float* feat) const {
        float s = bias;
        for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * feat[i];
        return s;
    }
};

/// Per-query scratch: rotated query, DDCres tail variances, PQ lookup table.
/// Built once per query by DcoStrategy::prepare_query and confined to one
/// executor.
struct QueryContext {
    StrategyKind kind = StrategyKind::FDScanning;
    std::vector<float> raw;
    std::vector<float> rotated;
    float q_norm_sq = 0.f;           // centered rotated query norm (DDCres)
    std::vector<float> tail_var;     // D+1 suffix sums of (q_i * sigma_i)^2
    std::vector<float> lut;          // c * 2^b (DDCopq)
    double preproc_seconds = 0.0;
};

/// Shared artifact store over one dataset: rotated copies, norms, PQ codes,
/// trained models. Strategies hold a reference into it; append() extends
/// every attached per-vector store so insertion keeps them aligned.
class DcoContext {
public:
    explicit DcoContext(Dataset ds);

    const Dataset& data() const { return data_; }
    std::size_t dim() const { return data_.dim(); }

    void attach_pca(PcaModel m);
    void attach_ortho(OrthoProjection p);
    void attach_codebook(PqCodebook cb);
    void attach_pca_models(std::vector<LinearModel> models);  // per (k, d)
    void attach_opq_models(std::vector<LinearModel> models);  // per k

    bool has_pca() const { return pca_.has_value(); }
    bool has_ortho() const { return ortho_.has_value(); }
    bool has_codebook() const { return codebook_.has_value(); }

    const PcaModel& pca() const;
    const OrthoProjection& ortho() const;
    const PqCodebook& codebook() const;
    const Dataset& pca_rotated() const;
    const Dataset& ortho_rotated() const;
    const std::vector<float>& rotated_norms() const;  // ||o||^2 of centered rotated
    const PqCodes& codes() const;

    const LinearModel* pca_model(std::size_t k, std::uint32_t d) const;
    const LinearModel* opq_model(std::size_t k) const;
    const std::map<std::pair<std::uint32_t, std::int32_t>, LinearModel>& models() const {
        return models_;
    }

    /// Appends to the dataset and to every attached per-vector store.
    std::uint32_t append(VectorView v);

private:
    Dataset data_;
    std::optional<PcaModel> pca_;
    std::optional<OrthoProjection> ortho_;
    std::optional<PqCodebook> codebook_;
    Dataset pca_rotated_;
    Dataset ortho_rotated_;
    std::vector<float> rotated_norms_;
    PqCodes codes_;
    std::map<std::pair<std::uint32_t, std::int32_t>, LinearModel> models_;
};

/// DADE per-depth tolerances from an empirical quantile calibration on
/// sampled dataset pairs; deterministic under seed.
std::vector<float> calibrate_dade_eps(const DcoContext& ctx, const ScanSchedule& sched,
                                      float alpha, std::size_t n_pairs, std::uint64_t seed);

/// One DCO strategy behind the common compare() contract. Immutable after
/// construction; fails fast if a required artifact is missing.
class DcoStrategy {
public:
    DcoStrategy(const DcoContext& ctx, StrategyKind kind, DcoParams params = {});

    StrategyKind kind() const { return kind_; }
    const DcoParams& params() const { return params_; }
    const std::vector<float>& dade_eps() const { return dade_eps_; }

    /// Builds per-query state (rotation, tail variances, PQ table) and
    /// records the wall time spent as online pre-processing.
    void prepare_query(QueryContext& q, VectorView query) const;

    /// Decides dis(o, q) <= tau (squared domain). Within outcomes carry the
    /// exact squared distance of the (rotated) pair.
    DcoOutcome compare(const QueryContext& q, std::uint32_t id, float tau_sq) const;

private:
    DcoOutcome fd_scan(VectorView o, VectorView q, float tau_sq) const;
    DcoOutcome pd_scan(VectorView o, VectorView q, float tau_sq) const;
    DcoOutcome ads_compare(VectorView o, VectorView q, float tau_sq) const;
    DcoOutcome dade_compare(VectorView o, VectorView q, float tau_sq) const;
    DcoOutcome ddcres_compare(const QueryContext& q, std::uint32_t id, float tau_sq) const;
    DcoOutcome ddcpca_compare(const QueryContext& q, std::uint32_t id, float tau_sq) const;
    DcoOutcome ddcopq_compare(const QueryContext& q, std::uint32_t id, float tau_sq) const;

    const DcoContext& ctx_;
    StrategyKind kind_;
    DcoParams params_;
    std::vector<float> dade_eps_;                 // per scheduled depth
    std::vector<float> dade_scale_;               // eigen_prefix[D]/eigen_prefix[d], size D+1
    std::vector<const LinearModel*> depth_models_;  // DDCpca, per scheduled depth
    const LinearModel* opq_model_ = nullptr;
    std::vector<std::uint32_t> depths_;
};

/// Hypothesis-test primitives, exposed for direct verification.
bool ads_test(float partial_sq, std::uint32_t d, std::size_t dim, float tau_sq, float eps0);
bool dade_test(float partial_sq, float scale_d, float eps_d, float tau_sq);
bool ddcres_test(float partial_dist_sq, float tail_var_d, float m, float tau_sq);

}  // namespace dcobench
