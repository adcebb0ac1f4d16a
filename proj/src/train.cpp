#include "dcobench/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>

namespace dcobench {

namespace {

double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return 0.0;
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

SampleSet gen_training_samples(const HnswIndex& index, const DcoContext& ctx,
                               const std::vector<std::size_t>& ks, std::size_t n_queries,
                               const ScanSchedule& sched, std::uint64_t seed,
                               std::size_t max_events_per_query) {
    if (n_queries < 100) {
        throw std::invalid_argument("gen_training_samples: need at least 100 queries");
    }
    if (ks.empty()) throw std::invalid_argument("gen_training_samples: empty k list");

    const Dataset& data = ctx.data();
    const Dataset& rotated = ctx.pca_rotated();  // classifiers scan PCA coordinates
    const std::size_t dim = data.dim();
    // terminal depth included: the d=D group anchors the feature scale even
    // though the scan loop decides exactly there
    auto depths = scheduled_depths(sched, dim);
    depths.push_back(static_cast<std::uint32_t>(dim));
    const bool with_pq = ctx.has_codebook();

    DcoStrategy exact(ctx, StrategyKind::FDScanning, DcoParams{.sched = sched});
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);

    SampleSet set;
    for (std::size_t qi = 0; qi < n_queries; ++qi) {
        const auto query_id = static_cast<std::uint32_t>(pick(rng));
        const VectorView q = data[query_id];
        const auto q_rot = apply_rotation(ctx.pca(), q, /*center=*/true);
        std::vector<float> lut;
        if (with_pq) lut = build_lut(ctx.codebook(), q);

        for (std::size_t k : ks) {
            HnswIndex::EventLog events;
            const std::size_t ef = std::max<std::size_t>(k, 200);
            index.search(ctx, exact, q, std::min(k, index.size()), ef, nullptr, &events);

            // deterministic stride subsample keeps the set size bounded
            std::size_t stride = 1;
            if (events.size() > max_events_per_query) {
                stride = events.size() / max_events_per_query;
            }
            for (std::size_t e = 0; e < events.size(); e += stride) {
                const auto [oid, tau_sq] = events[e];
                const float exact_dist = squared_euclidean(data[oid], q);
                const bool above = exact_dist > tau_sq;

                const VectorView o_rot = rotated[oid];
                float partial = 0.f;
                std::size_t prev = 0;
                for (std::uint32_t d : depths) {
                    partial += partial_sq_dist(o_rot, VectorView(q_rot), prev, d);
                    prev = d;
                    TrainingSample s;
                    s.k = static_cast<std::uint32_t>(k);
                    s.d = static_cast<std::int32_t>(d);
                    s.features = {partial, tau_sq,
                                  static_cast<float>(d) / static_cast<float>(dim)};
                    s.above = above;
                    s.query_id = query_id;
                    set.samples.push_back(std::move(s));
                }
                if (with_pq) {
                    TrainingSample s;
                    s.k = static_cast<std::uint32_t>(k);
                    s.d = -1;
                    s.features = {pq_distance(ctx.codebook(), ctx.codes().of(oid), lut),
                                  tau_sq};
                    s.above = above;
                    s.query_id = query_id;
                    set.samples.push_back(std::move(s));
                }
            }
        }
    }

    // order-independent merge contract: deterministic final order
    std::stable_sort(set.samples.begin(), set.samples.end(),
                     [](const TrainingSample& a, const TrainingSample& b) {
                         if (a.query_id != b.query_id) return a.query_id < b.query_id;
                         if (a.k != b.k) return a.k < b.k;
                         return a.d < b.d;
                     });

    if (set.samples.size() < 10000) {
        set.below_sample_floor = true;
        std::cerr << "warning: only " << set.samples.size()
                  << " training samples gathered; classifiers want at least 10000\n";
    }
    return set;
}

double logistic_loss(const std::vector<TrainingSample>& samples,
                     const std::vector<float>& params, float false_reject_weight,
                     std::vector<double>* grad_out) {
    if (samples.empty()) throw std::invalid_argument("logistic_loss: no samples");
    const std::size_t nfeat = samples.front().features.size();
    if (params.size() != nfeat + 1) throw std::invalid_argument("logistic_loss: bad params");

    double loss = 0.0, wsum = 0.0;
    if (grad_out) grad_out->assign(nfeat + 1, 0.0);
    for (const auto& s : samples) {
        double z = params[nfeat];
        // promote before multiplying: float*float products round at 2^-24 and
        // that jitter dominates finite-difference checks of the gradient
        for (std::size_t j = 0; j < nfeat; ++j) {
            z += static_cast<double>(params[j]) * static_cast<double>(s.features[j]);
        }
        const double y = s.above ? 1.0 : -1.0;
        const double w = s.above ? 1.0 : false_reject_weight;
        loss += w * softplus(-y * z);
        wsum += w;
        if (grad_out) {
            const double g = -w * y * sigmoid(-y * z);
            for (std::size_t j = 0; j < nfeat; ++j) (*grad_out)[j] += g * s.features[j];
            (*grad_out)[nfeat] += g;
        }
    }
    loss /= wsum;
    if (grad_out) {
        for (auto& g : *grad_out) g /= wsum;
    }
    return loss;
}

LinearModel fit_linear(const std::vector<TrainingSample>& samples, std::uint64_t seed,
                       const FitOptions& opts) {
    if (samples.size() < 200) {
        throw std::invalid_argument("fit_linear: need at least 200 samples, got " +
                                    std::to_string(samples.size()));
    }
    std::size_t n_above = 0;
    for (const auto& s : samples) n_above += s.above ? 1 : 0;
    if (n_above == 0) throw std::invalid_argument("fit_linear: single-class sample set (all within)");
    if (n_above == samples.size()) {
        throw std::invalid_argument("fit_linear: single-class sample set (all above)");
    }

    const std::size_t nfeat = samples.front().features.size();
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const auto n_hold = static_cast<std::size_t>(
        static_cast<double>(samples.size()) * opts.holdout_fraction);
    std::vector<TrainingSample> train, hold;
    train.reserve(samples.size() - n_hold);
    hold.reserve(n_hold);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_hold ? hold : train).push_back(samples[order[i]]);
    }

    // feature standardization from the training split
    std::vector<double> mu(nfeat, 0.0), sd(nfeat, 0.0);
    for (const auto& s : train) {
        for (std::size_t j = 0; j < nfeat; ++j) mu[j] += s.features[j];
    }
    for (auto& m : mu) m /= static_cast<double>(train.size());
    for (const auto& s : train) {
        for (std::size_t j = 0; j < nfeat; ++j) {
            const double d = s.features[j] - mu[j];
            sd[j] += d * d;
        }
    }
    for (auto& v : sd) {
        v = std::sqrt(v / static_cast<double>(train.size()));
        if (v < 1e-12) v = 1.0;
    }
    std::vector<TrainingSample> std_train = train;
    for (auto& s : std_train) {
        for (std::size_t j = 0; j < nfeat; ++j) {
            s.features[j] = static_cast<float>((s.features[j] - mu[j]) / sd[j]);
        }
    }

    std::vector<float> params(nfeat + 1, 0.f);
    std::vector<double> grad;
    for (int it = 0; it < opts.iterations; ++it) {
        logistic_loss(std_train, params, opts.false_reject_weight, &grad);
        const float lr = opts.learning_rate / (1.f + 0.01f * static_cast<float>(it));
        for (std::size_t j = 0; j <= nfeat; ++j) {
            params[j] -= lr * static_cast<float>(grad[j]);
        }
    }

    LinearModel model;
    model.trained_k = samples.front().k;
    model.trained_d = samples.front().d;
    model.weights.resize(nfeat);
    double bias = params[nfeat];
    for (std::size_t j = 0; j < nfeat; ++j) {
        model.weights[j] = static_cast<float>(params[j] / sd[j]);
        bias -= params[j] * mu[j] / sd[j];
    }
    model.bias = static_cast<float>(bias);

    auto evaluate = [&](const LinearModel& m, double& acc, double& fr) {
        std::size_t correct = 0, within_total = 0, false_rejects = 0;
        for (const auto& s : hold) {
            const bool pred = m.score(s.features.data()) > 0.f;
            if (pred == s.above) ++correct;
            if (!s.above) {
                ++within_total;
                if (pred) ++false_rejects;
            }
        }
        acc = hold.empty() ? 0.0 : static_cast<double>(correct) / hold.size();
        fr = within_total == 0 ? 0.0 : static_cast<double>(false_rejects) / within_total;
    };

    double acc = 0.0, fr = 0.0;
    evaluate(model, acc, fr);
    if (fr > opts.max_false_reject) {
        // lower the decision score until at most max_false_reject of the
        // held-out within samples are rejected: a false reject silently
        // drops a true neighbor, a false accept only costs one full scan
        std::vector<float> scores;
        for (const auto& s : hold) {
            if (!s.above) scores.push_back(model.score(s.features.data()));
        }
        std::sort(scores.begin(), scores.end());
        const auto allowed = static_cast<std::size_t>(
            opts.max_false_reject * static_cast<double>(scores.size()));
        const float pivot = scores[scores.size() - allowed - 1];
        if (pivot > 0.f) model.bias -= pivot + 1e-6f;
        evaluate(model, acc, fr);
    }
    model.held_out_accuracy = static_cast<float>(acc);
    model.held_out_false_reject = static_cast<float>(fr);
    return model;
}

std::vector<LinearModel> fit_all_models(const SampleSet& set, std::uint64_t seed,
                                        const FitOptions& opts) {
    std::map<std::pair<std::uint32_t, std::int32_t>, std::vector<TrainingSample>> groups;
    for (const auto& s : set.samples) groups[{s.k, s.d}].push_back(s);

    std::vector<LinearModel> out;
    out.reserve(groups.size());
    for (auto& [key, samples] : groups) {
        const std::uint64_t gseed = derive_seed(
            seed, "fit-k" + std::to_string(key.first) + "-d" + std::to_string(key.second));
        try {
            out.push_back(fit_linear(samples, gseed, opts));
        } catch (const std::invalid_argument& e) {
            // degenerate group: fall back to a model that never rejects early,
            // the safe direction for recall
            std::cerr << "warning: k=" << key.first << " d=" << key.second << ": " << e.what()
                      << "; emitting pass-through model\n";
            LinearModel m;
            m.trained_k = key.first;
            m.trained_d = key.second;
            m.weights.assign(samples.front().features.size(), 0.f);
            m.bias = -1.f;
            std::size_t correct = 0;
            for (const auto& s : samples) correct += s.above ? 0 : 1;
            m.held_out_accuracy =
                static_cast<float>(correct) / static_cast<float>(samples.size());
            out.push_back(std::move(m));
        }
    }
    return out;
}

void dump_samples_csv(const SampleSet& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "k,d,partial_sq,tau_sq,depth_frac,label\n";
    for (const auto& s : set.samples) {
        out << s.k << "," << s.d << "," << s.features[0] << "," << s.features[1] << ",";
        if (s.features.size() > 2) out << s.features[2];
        out << "," << (s.above ? "above" : "within") << "\n";
    }
}

}  // namespace dcobench
