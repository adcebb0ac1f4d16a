#include "dcobench/dco.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace dcobench {

namespace {
const char* kNames[kStrategyCount] = {
    "FDScanning", "PDScanning", "PDScanningPlus", "ADSampling",
    "DADE",       "DDCres",     "DDCpca",         "DDCopq",
};
}

StrategyKind strategy_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kStrategyCount; ++i) {
        if (name == kNames[i]) return static_cast<StrategyKind>(i);
    }
    std::string msg = "unknown strategy '" + std::string(name) + "'; valid names:";
    for (auto n : kNames) msg += std::string(" ") + n;
    throw ConfigError(msg);
}

std::string_view to_string(StrategyKind k) { return kNames[static_cast<std::size_t>(k)]; }

std::vector<std::string> strategy_names() {
    return std::vector<std::string>(std::begin(kNames), std::end(kNames));
}

bool is_exact(StrategyKind k) {
    return k == StrategyKind::FDScanning || k == StrategyKind::PDScanning ||
           k == StrategyKind::PDScanningPlus;
}

bool is_classification(StrategyKind k) {
    return k == StrategyKind::DDCpca || k == StrategyKind::DDCopq;
}

std::vector<std::uint32_t> scheduled_depths(const ScanSchedule& s, std::size_t dim) {
    if (s.delta0 < 1 || s.delta_d < 1) throw ConfigError("scan schedule steps must be >= 1");
    std::vector<std::uint32_t> out;
    for (std::uint32_t d = s.delta0; d < dim; d += s.delta_d) out.push_back(d);
    return out;
}

void DcoStats::merge(const DcoStats& s) {
    invocations += s.invocations;
    dims_scanned += s.dims_scanned;
    within += s.within;
    above += s.above;
    code_ops += s.code_ops;
    preproc_seconds += s.preproc_seconds;
}

// ---------------------------------------------------------------------------
// DcoContext

DcoContext::DcoContext(Dataset ds) : data_(std::move(ds)) {}

void DcoContext::attach_pca(PcaModel m) {
    if (m.dim != data_.dim()) throw ConfigError("PCA model dimension mismatch");
    pca_ = std::move(m);
    pca_rotated_ = rotate_dataset(*pca_, data_, /*center=*/true);
    rotated_norms_.resize(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) {
        const auto v = pca_rotated_[i];
        rotated_norms_[i] = dot(v, v);
    }
}

void DcoContext::attach_ortho(OrthoProjection p) {
    if (p.dim != data_.dim()) throw ConfigError("orthogonal projection dimension mismatch");
    ortho_ = std::move(p);
    ortho_rotated_ = rotate_dataset(*ortho_, data_);
}

void DcoContext::attach_codebook(PqCodebook cb) {
    if (cb.dim != data_.dim()) throw ConfigError("codebook dimension mismatch");
    codebook_ = std::move(cb);
    codes_ = encode_all(*codebook_, data_);
}

void DcoContext::attach_pca_models(std::vector<LinearModel> models) {
    for (auto& m : models) {
        if (m.trained_d < 0) throw ConfigError("per-depth model with unset depth");
        models_[{m.trained_k, m.trained_d}] = std::move(m);
    }
}

void DcoContext::attach_opq_models(std::vector<LinearModel> models) {
    for (auto& m : models) models_[{m.trained_k, -1}] = std::move(m);
}

const PcaModel& DcoContext::pca() const {
    if (!pca_) throw ConfigError("PCA model not attached");
    return *pca_;
}
const OrthoProjection& DcoContext::ortho() const {
    if (!ortho_) throw ConfigError("orthogonal projection not attached");
    return *ortho_;
}
const PqCodebook& DcoContext::codebook() const {
    if (!codebook_) throw ConfigError("PQ codebook not attached");
    return *codebook_;
}
const Dataset& DcoContext::pca_rotated() const {
    if (!pca_) throw ConfigError("PCA model not attached");
    return pca_rotated_;
}
const Dataset& DcoContext::ortho_rotated() const {
    if (!ortho_) throw ConfigError("orthogonal projection not attached");
    return ortho_rotated_;
}
const std::vector<float>& DcoContext::rotated_norms() const {
    if (!pca_) throw ConfigError("PCA model not attached");
    return rotated_norms_;
}
const PqCodes& DcoContext::codes() const {
    if (!codebook_) throw ConfigError("PQ codebook not attached");
    return codes_;
}

const LinearModel* DcoContext::pca_model(std::size_t k, std::uint32_t d) const {
    auto it = models_.find({static_cast<std::uint32_t>(k), static_cast<std::int32_t>(d)});
    return it == models_.end() ? nullptr : &it->second;
}

const LinearModel* DcoContext::opq_model(std::size_t k) const {
    auto it = models_.find({static_cast<std::uint32_t>(k), -1});
    return it == models_.end() ? nullptr : &it->second;
}

std::uint32_t DcoContext::append(VectorView v) {
    const auto id = static_cast<std::uint32_t>(data_.size());
    data_.append(v);
    if (pca_) {
        auto r = apply_rotation(*pca_, v, /*center=*/true);
        pca_rotated_.append(VectorView(r.data(), r.size()));
        rotated_norms_.push_back(dot(VectorView(r.data(), r.size()),
                                     VectorView(r.data(), r.size())));
    }
    if (ortho_) {
        auto r = apply_rotation(*ortho_, v);
        ortho_rotated_.append(VectorView(r.data(), r.size()));
    }
    if (codebook_) {
        std::vector<std::uint16_t> code(codebook_->c);
        encode(*codebook_, v, code.data());
        codes_.append(code.data());
    }
    return id;
}

// ---------------------------------------------------------------------------
// Hypothesis-test primitives

bool ads_test(float partial_sq, std::uint32_t d, std::size_t dim, float tau_sq, float eps0) {
    if (d == 0) throw std::invalid_argument("ads_test: d must be >= 1");
    const float eps = eps0 / std::sqrt(static_cast<float>(d));
    const float est = partial_sq * (static_cast<float>(dim) / static_cast<float>(d));
    return est > (1.f + eps) * (1.f + eps) * tau_sq;
}

bool dade_test(float partial_sq, float scale_d, float eps_d, float tau_sq) {
    return scale_d * partial_sq > (1.f + eps_d) * (1.f + eps_d) * tau_sq;
}

bool ddcres_test(float partial_dist_sq, float tail_var_d, float m, float tau_sq) {
    return partial_dist_sq - 2.f * m * std::sqrt(tail_var_d) > tau_sq;
}

// ---------------------------------------------------------------------------
// DADE calibration

std::vector<float> calibrate_dade_eps(const DcoContext& ctx, const ScanSchedule& sched,
                                      float alpha, std::size_t n_pairs, std::uint64_t seed) {
    if (alpha <= 0.f || alpha >= 1.f) throw ConfigError("dade_alpha must lie in (0, 1)");
    const Dataset& rot = ctx.pca_rotated();
    const std::size_t n = rot.size();
    const std::size_t dim = rot.dim();
    const auto depths = scheduled_depths(sched, dim);
    if (depths.empty()) return {};

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::vector<float>> ratios(depths.size());
    for (auto& r : ratios) r.reserve(n_pairs);

    for (std::size_t p = 0; p < n_pairs; ++p) {
        const std::size_t i = pick(rng);
        std::size_t j = pick(rng);
        if (j == i) j = (j + 1) % n;
        const auto a = rot[i];
        const auto b = rot[j];
        float partial = 0.f;
        std::size_t prev = 0;
        const float full = squared_euclidean(a, b);
        if (full <= 0.f) continue;
        for (std::size_t t = 0; t < depths.size(); ++t) {
            partial += partial_sq_dist(a, b, prev, depths[t]);
            prev = depths[t];
            const double scale = ctx.pca().eigen_prefix[dim] /
                                 std::max(ctx.pca().eigen_prefix[depths[t]], 1e-30);
            ratios[t].push_back(static_cast<float>(std::sqrt(scale * partial / full)));
        }
    }

    std::vector<float> eps(depths.size(), 0.f);
    for (std::size_t t = 0; t < depths.size(); ++t) {
        auto& r = ratios[t];
        if (r.empty()) continue;
        std::sort(r.begin(), r.end());
        const std::size_t idx = std::min(
            r.size() - 1,
            static_cast<std::size_t>(std::ceil((1.0 - alpha) * r.size())));
        eps[t] = std::max(0.f, r[idx] - 1.f);
    }
    return eps;
}

// ---------------------------------------------------------------------------
// DcoStrategy

DcoStrategy::DcoStrategy(const DcoContext& ctx, StrategyKind kind, DcoParams params)
    : ctx_(ctx), kind_(kind), params_(params) {
    const std::size_t dim = ctx.dim();
    if (params_.sched.delta0 < 1 || params_.sched.delta_d < 1) {
        throw ConfigError("scan schedule steps must be >= 1");
    }
    depths_ = scheduled_depths(params_.sched, dim);

    switch (kind_) {
        case StrategyKind::FDScanning:
        case StrategyKind::PDScanning:
            break;
        case StrategyKind::PDScanningPlus:
            (void)ctx_.pca_rotated();
            break;
        case StrategyKind::ADSampling:
            if (params_.ads_eps0 <= 0.f) throw ConfigError("ads_eps0 must be > 0");
            (void)ctx_.ortho_rotated();
            break;
        case StrategyKind::DADE: {
            (void)ctx_.pca_rotated();
            dade_scale_.assign(dim + 1, 1.f);
            const auto& prefix = ctx_.pca().eigen_prefix;
            for (std::size_t d = 1; d <= dim; ++d) {
                dade_scale_[d] = static_cast<float>(prefix[dim] / std::max(prefix[d], 1e-30));
            }
            dade_eps_ = calibrate_dade_eps(ctx_, params_.sched, params_.dade_alpha,
                                           100000, derive_seed(20250826, "dade-calib"));
            break;
        }
        case StrategyKind::DDCres:
            if (params_.ddcres_m <= 0.f) throw ConfigError("ddcres_m must be > 0");
            (void)ctx_.pca_rotated();
            (void)ctx_.rotated_norms();
            break;
        case StrategyKind::DDCpca: {
            (void)ctx_.pca_rotated();
            depth_models_.reserve(depths_.size());
            for (auto d : depths_) {
                const LinearModel* m = ctx_.pca_model(params_.k, d);
                if (!m) {
                    throw ConfigError("DDCpca model missing for k=" +
                                      std::to_string(params_.k) + ", d=" + std::to_string(d));
                }
                depth_models_.push_back(m);
            }
            break;
        }
        case StrategyKind::DDCopq: {
            (void)ctx_.codebook();
            (void)ctx_.codes();
            opq_model_ = ctx_.opq_model(params_.k);
            if (!opq_model_) {
                throw ConfigError("DDCopq model missing for k=" + std::to_string(params_.k));
            }
            break;
        }
    }
}

void DcoStrategy::prepare_query(QueryContext& q, VectorView query) const {
    if (query.size() != ctx_.dim()) throw std::invalid_argument("query dimension mismatch");
    const auto t0 = std::chrono::steady_clock::now();
    q.kind = kind_;
    q.raw.assign(query.begin(), query.end());
    q.rotated.clear();
    q.tail_var.clear();
    q.lut.clear();
    q.q_norm_sq = 0.f;

    switch (kind_) {
        case StrategyKind::FDScanning:
        case StrategyKind::PDScanning:
            break;
        case StrategyKind::PDScanningPlus:
        case StrategyKind::DADE:
        case StrategyKind::DDCpca:
            q.rotated = apply_rotation(ctx_.pca(), query, /*center=*/true);
            break;
        case StrategyKind::ADSampling:
            q.rotated = apply_rotation(ctx_.ortho(), query);
            break;
        case StrategyKind::DDCres: {
            q.rotated = apply_rotation(ctx_.pca(), query, /*center=*/true);
            const std::size_t dim = ctx_.dim();
            q.q_norm_sq = dot(VectorView(q.rotated), VectorView(q.rotated));
            const auto& sigma = ctx_.pca().sigma;
            q.tail_var.assign(dim + 1, 0.f);
            for (std::size_t j = dim; j-- > 0;) {
                const float t = q.rotated[j] * sigma[j];
                q.tail_var[j] = q.tail_var[j + 1] + t * t;
            }
            break;
        }
        case StrategyKind::DDCopq:
            q.lut = build_lut(ctx_.codebook(), query);
            break;
    }
    q.preproc_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

DcoOutcome DcoStrategy::compare(const QueryContext& q, std::uint32_t id, float tau_sq) const {
    if (tau_sq < 0.f) throw std::invalid_argument("tau_sq must be >= 0");
    switch (kind_) {
        case StrategyKind::FDScanning:
            return fd_scan(ctx_.data()[id], VectorView(q.raw), tau_sq);
        case StrategyKind::PDScanning:
            return pd_scan(ctx_.data()[id], VectorView(q.raw), tau_sq);
        case StrategyKind::PDScanningPlus:
            return pd_scan(ctx_.pca_rotated()[id], VectorView(q.rotated), tau_sq);
        case StrategyKind::ADSampling:
            return ads_compare(ctx_.ortho_rotated()[id], VectorView(q.rotated), tau_sq);
        case StrategyKind::DADE:
            return dade_compare(ctx_.pca_rotated()[id], VectorView(q.rotated), tau_sq);
        case StrategyKind::DDCres:
            return ddcres_compare(q, id, tau_sq);
        case StrategyKind::DDCpca:
            return ddcpca_compare(q, id, tau_sq);
        case StrategyKind::DDCopq:
            return ddcopq_compare(q, id, tau_sq);
    }
    throw std::logic_error("unreachable");
}

DcoOutcome DcoStrategy::fd_scan(VectorView o, VectorView q, float tau_sq) const {
    const float dist = squared_euclidean(o, q);
    DcoOutcome out;
    out.dims_scanned = static_cast<std::uint32_t>(o.size());
    out.within = dist <= tau_sq;  // boundary inclusive
    if (out.within) out.distance = dist;
    return out;
}

DcoOutcome DcoStrategy::pd_scan(VectorView o, VectorView q, float tau_sq) const {
    const std::size_t dim = o.size();
    std::uint32_t d = 0;
    float partial = 0.f;
    while (d < dim) {
        const std::uint32_t next = static_cast<std::uint32_t>(
            std::min<std::size_t>(dim, d == 0 ? params_.sched.delta0 : d + params_.sched.delta_d));
        partial += partial_sq_dist(o, q, d, next);
        d = next;
        if (partial > tau_sq) return {false, 0.f, d, 0};
    }
    return {true, partial, d, 0};
}

DcoOutcome DcoStrategy::ads_compare(VectorView o, VectorView q, float tau_sq) const {
    const std::size_t dim = o.size();
    std::uint32_t d = 0;
    float partial = 0.f;
    while (true) {
        const std::uint32_t next = static_cast<std::uint32_t>(
            std::min<std::size_t>(dim, d == 0 ? params_.sched.delta0 : d + params_.sched.delta_d));
        partial += partial_sq_dist(o, q, d, next);
        d = next;
        if (d == dim) break;
        if (ads_test(partial, d, dim, tau_sq, params_.ads_eps0)) return {false, 0.f, d, 0};
    }
    // terminal exact comparison: D/d = 1
    const bool within = partial <= tau_sq;
    return {within, within ? partial : 0.f, d, 0};
}

DcoOutcome DcoStrategy::dade_compare(VectorView o, VectorView q, float tau_sq) const {
    const std::size_t dim = o.size();
    std::uint32_t d = 0;
    float partial = 0.f;
    std::size_t step = 0;
    while (true) {
        const std::uint32_t next = static_cast<std::uint32_t>(
            std::min<std::size_t>(dim, d == 0 ? params_.sched.delta0 : d + params_.sched.delta_d));
        partial += partial_sq_dist(o, q, d, next);
        d = next;
        if (d == dim) break;
        if (dade_test(partial, dade_scale_[d], dade_eps_[step], tau_sq)) {
            return {false, 0.f, d, 0};
        }
        ++step;
    }
    const bool within = partial <= tau_sq;  // scale[D] == 1
    return {within, within ? partial : 0.f, d, 0};
}

DcoOutcome DcoStrategy::ddcres_compare(const QueryContext& q, std::uint32_t id,
                                       float tau_sq) const {
    const VectorView o = ctx_.pca_rotated()[id];
    const VectorView qr(q.rotated);
    const float norms = ctx_.rotated_norms()[id] + q.q_norm_sq;
    const std::size_t dim = o.size();
    std::uint32_t d = 0;
    float cross = 0.f;
    while (true) {
        const std::uint32_t next = static_cast<std::uint32_t>(
            std::min<std::size_t>(dim, d == 0 ? params_.sched.delta0 : d + params_.sched.delta_d));
        cross += partial_dot(o, qr, d, next);
        d = next;
        const float partial_dist = norms - 2.f * cross;
        if (d == dim) {
            // tail variance is zero; the decomposition is the exact distance
            const float dist = std::max(partial_dist, 0.f);
            const bool within = dist <= tau_sq;
            return {within, within ? dist : 0.f, d, 0};
        }
        if (ddcres_test(partial_dist, q.tail_var[d], params_.ddcres_m, tau_sq)) {
            return {false, 0.f, d, 0};
        }
    }
}

DcoOutcome DcoStrategy::ddcpca_compare(const QueryContext& q, std::uint32_t id,
                                       float tau_sq) const {
    const VectorView o = ctx_.pca_rotated()[id];
    const VectorView qr(q.rotated);
    const std::size_t dim = o.size();
    const bool warmup = !(tau_sq < std::numeric_limits<float>::infinity());
    std::uint32_t d = 0;
    float partial = 0.f;
    std::size_t step = 0;
    while (true) {
        const std::uint32_t next = static_cast<std::uint32_t>(
            std::min<std::size_t>(dim, d == 0 ? params_.sched.delta0 : d + params_.sched.delta_d));
        partial += partial_sq_dist(o, qr, d, next);
        d = next;
        if (d == dim) break;
        if (!warmup) {
            const float feat[3] = {partial, tau_sq,
                                   static_cast<float>(d) / static_cast<float>(dim)};
            if (depth_models_[step]->score(feat) > 0.f) return {false, 0.f, d, 0};
        }
        ++step;
    }
    const bool within = partial <= tau_sq;
    return {within, within ? partial : 0.f, d, 0};
}

DcoOutcome DcoStrategy::ddcopq_compare(const QueryContext& q, std::uint32_t id,
                                       float tau_sq) const {
    const std::size_t dim = ctx_.dim();
    const auto c = static_cast<std::uint32_t>(ctx_.codebook().c);
    const bool warmup = !(tau_sq < std::numeric_limits<float>::infinity());
    if (!warmup) {
        const float approx = pq_distance(ctx_.codebook(), ctx_.codes().of(id), q.lut);
        const float feat[2] = {approx, tau_sq};
        if (opq_model_->score(feat) > 0.f) return {false, 0.f, 0, c};
    }
    // negative prediction: verify by scanning all dimensions
    const float dist = squared_euclidean(ctx_.data()[id], VectorView(q.raw));
    const bool within = dist <= tau_sq;
    return {within, within ? dist : 0.f, static_cast<std::uint32_t>(dim),
            warmup ? 0u : c};
}

}  // namespace dcobench
