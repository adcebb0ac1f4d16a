#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcobench/dco.hpp"
#include "dcobench/index.hpp"

namespace dcobench {

struct TrainingSample {
    std::uint32_t k = 0;
    std::int32_t d = -1;          // scan depth; -1 marks the PQ-feature sample
    std::vector<float> features;  // (dis'^2, tau^2, d/D) or (pq_dist, tau^2)
    bool above = false;           // truth of dis > tau, from the exact distance
    std::uint32_t query_id = 0;
};

struct SampleSet {
    std::vector<std::string> depth_feature_names{"partial_sq", "tau_sq", "depth_frac"};
    std::vector<std::string> pq_feature_names{"pq_dist", "tau_sq"};
    std::vector<TrainingSample> samples;
    bool below_sample_floor = false;  // fewer than 10k samples gathered
};

/// Replays index searches with an exact strategy, recording (candidate,
/// threshold) events, and derives per-depth features plus exact labels.
/// PQ-feature samples are emitted too when a codebook is attached.
/// Deterministic under seed; queries are drawn from the dataset itself.
SampleSet gen_training_samples(const HnswIndex& index, const DcoContext& ctx,
                               const std::vector<std::size_t>& ks, std::size_t n_queries,
                               const ScanSchedule& sched, std::uint64_t seed,
                               std::size_t max_events_per_query = 200);

struct FitOptions {
    int iterations = 500;
    float learning_rate = 0.5f;
    float false_reject_weight = 5.f;  // cost of predicting above on a within sample
    float holdout_fraction = 0.2f;
    float max_false_reject = 0.05f;   // post-fit bias guard on the held-out split
};

/// Weighted logistic regression by full-batch gradient descent over
/// standardized features. score > 0 predicts above.
LinearModel fit_linear(const std::vector<TrainingSample>& samples, std::uint64_t seed,
                       const FitOptions& opts = {});

/// Loss and analytic gradient at an arbitrary parameter point, for
/// finite-difference verification. Parameter layout: weights..., bias.
double logistic_loss(const std::vector<TrainingSample>& samples,
                     const std::vector<float>& params, float false_reject_weight,
                     std::vector<double>* grad_out = nullptr);

/// Fits every M_{k,d} plus the per-k PQ model present in the sample set.
std::vector<LinearModel> fit_all_models(const SampleSet& set, std::uint64_t seed,
                                        const FitOptions& opts = {});

void dump_samples_csv(const SampleSet& set, const std::string& path);

}  // namespace dcobench
