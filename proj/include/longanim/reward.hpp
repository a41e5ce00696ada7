#pragma once

// Colour-consistency reward on memory key/value features and the
// score-function (likelihood-ratio) update that optimizes it without
// differentiating the reward.

#include <deque>
#include <functional>
#include <numeric>
#include <vector>

#include "dglm.hpp"

namespace longanim {

struct KvFeatures {
    std::vector<Tensor> k, v;  // per memory layer, [segments, kv]
};

inline double kv_distance(const KvFeatures& a, const KvFeatures& b) {
    if (a.k.size() != b.k.size() || a.v.size() != b.v.size()) throw ShapeError("reward: layer count mismatch");
    double d = 0.0;
    auto acc = [&](const Tensor& x, const Tensor& y) {
        require_same_shape(x, y, "reward features");
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double e = static_cast<double>(x[i]) - y[i];
            d += e * e;
        }
    };
    for (std::size_t m = 0; m < a.k.size(); ++m) acc(a.k[m], b.k[m]);
    for (std::size_t m = 0; m < a.v.size(); ++m) acc(a.v[m], b.v[m]);
    return d;
}

// Higher is better; identical features give 0.
inline double reward_from_features(const KvFeatures& gen, const KvFeatures& ref) { return -kv_distance(ref, gen); }

inline std::vector<Tensor> video_frame_features(const FrameFeatureExtractor& fx, const Tensor& video) {
    if (video.ndim() != 4 || video.dim(0) == 0) throw ContractError("reward: empty video");
    std::vector<Tensor> out;
    const std::size_t per = video.size() / video.dim(0);
    for (std::size_t f = 0; f < video.dim(0); ++f) {
        Tensor one({video.dim(1), video.dim(2), video.dim(3)},
                   std::vector<float>(video.ptr() + f * per, video.ptr() + (f + 1) * per));
        out.push_back(fx(one));
    }
    return out;
}

inline KvFeatures kv_features(const Summarizer& sum, const std::vector<Tensor>& frame_feats, const std::vector<Span>& spans) {
    MemoryCache c = build_cache(sum, summarize(sum, frame_feats, spans), 1);
    KvFeatures out;
    for (const auto& l : c.layers) {
        out.k.push_back(l.k_g);
        out.v.push_back(l.v_g);
    }
    return out;
}

// Feature extractor used by the reward: video [T,H,W,3] and the spans to
// summarize over (taken from the reference so both sides align row by row).
using KvExtractor = std::function<KvFeatures(const Tensor& video, const std::vector<Span>& spans)>;
using SpanPlanner = std::function<std::vector<Span>(const Tensor& video)>;

inline double compute_reward(const KvExtractor& extract, const SpanPlanner& plan, const Tensor& gen, const Tensor& ref) {
    if (gen.ndim() != 4 || ref.ndim() != 4 || gen.dim(0) == 0 || ref.dim(0) == 0)
        throw ContractError("compute_reward: empty video");
    require_same_shape(gen, ref, "compute_reward");
    const auto spans = plan(ref);
    return reward_from_features(extract(gen, spans), extract(ref, spans));
}

struct RewardModel {
    const FrameFeatureExtractor* fx = nullptr;
    const Summarizer* sum = nullptr;
    double theta = 0.1;

    std::vector<Span> spans(const Tensor& video) const { return dynamic_segment(video_frame_features(*fx, video), theta); }

    KvFeatures features(const Tensor& video, const std::vector<Span>& sp) const {
        return kv_features(*sum, video_frame_features(*fx, video), sp);
    }

    double operator()(const Tensor& gen, const Tensor& ref) const {
        return compute_reward([this](const Tensor& v, const std::vector<Span>& sp) { return features(v, sp); },
                              [this](const Tensor& v) { return spans(v); }, gen, ref);
    }
};

// Moving average over the last `window` rewards.
class MovingBaseline {
   public:
    explicit MovingBaseline(std::size_t window = 64) : window_(window) {}

    bool empty() const { return hist_.empty(); }
    double value() const {
        if (hist_.empty()) return 0.0;
        return std::accumulate(hist_.begin(), hist_.end(), 0.0) / static_cast<double>(hist_.size());
    }
    void push(double r) {
        hist_.push_back(r);
        while (hist_.size() > window_) hist_.pop_front();
    }

   private:
    std::size_t window_;
    std::deque<double> hist_;
};

// Score-function estimate of d E[r] / d theta from per-sample rewards and
// per-sample summed transition scores sum_t grad log p(z_{t-1} | z_t).
inline std::vector<double> policy_gradient(const std::vector<double>& rewards,
                                           const std::vector<std::vector<double>>& scores, double baseline) {
    if (rewards.empty() || scores.size() != rewards.size()) {
        throw ContractError("policy gradient: every sample needs its transition scores");
    }
    const std::size_t n = scores[0].size();
    std::vector<double> g(n, 0.0);
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        if (scores[i].size() != n) throw ShapeError("policy gradient: score sizes differ");
        const double adv = rewards[i] - baseline;
        for (std::size_t j = 0; j < n; ++j) g[j] += adv * scores[i][j];
    }
    for (auto& v : g) v /= static_cast<double>(rewards.size());
    return g;
}

// Ascent step on a flat parameter vector.
inline void apply_update(std::vector<double>& params, const std::vector<double>& grad, double lr) {
    if (params.size() != grad.size()) throw ShapeError("update: size mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) params[i] += lr * grad[i];
}

// One-dimensional two-step chain: z_2 ~ N(0,1), z_{t-1} ~ N(theta + 0.5 z_t, 1),
// reward -(z_0 - 1)^2. The transition mean is the only place theta enters.
struct GaussianChain1D {
    double theta = 0.0;
    double target = 1.0;

    struct Draw {
        double z0 = 0.0;
        double score = 0.0;  // d/dtheta of sum_t log p(z_{t-1} | z_t)
        double reward = 0.0;
    };

    // Uses three normals (n2, n1, n0) so the same noise can be replayed.
    Draw run(double th, double n2, double n1, double n0) const {
        Draw d;
        const double z2 = n2;
        const double m1 = th + 0.5 * z2, z1 = m1 + n1;
        const double m0 = th + 0.5 * z1, z0 = m0 + n0;
        d.z0 = z0;
        d.score = (z1 - m1) + (z0 - m0);
        d.reward = -(z0 - target) * (z0 - target);
        return d;
    }

    struct Estimate {
        double mean = 0.0, std_error = 0.0;
    };

    Estimate score_function(std::size_t samples, Rng& rng, double baseline = 0.0) const {
        double s = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < samples; ++i) {
            const double a = rng.normal(), b = rng.normal(), c = rng.normal();
            const Draw d = run(theta, a, b, c);
            const double g = (d.reward - baseline) * d.score;
            s += g;
            s2 += g * g;
        }
        const double n = static_cast<double>(samples), mean = s / n;
        return {mean, std::sqrt(std::max(0.0, s2 / n - mean * mean) / n)};
    }

    // Central difference of E[r] with common random numbers.
    double finite_difference(std::size_t samples, Rng& rng, double h = 1e-4) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < samples; ++i) {
            const double a = rng.normal(), b = rng.normal(), c = rng.normal();
            acc += run(theta + h, a, b, c).reward - run(theta - h, a, b, c).reward;
        }
        return acc / (2.0 * h * static_cast<double>(samples));
    }

    // Closed form: z_0 = 1.5 theta + noise, so dE[r]/dtheta = -3 (1.5 theta - target).
    double analytic() const { return -3.0 * (1.5 * theta - target); }
};

}  // namespace longanim
