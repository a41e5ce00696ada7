#pragma once

// Dynamic global-local memory. Committed frames are reduced to unit frame
// features, split into 2/4/8-frame spans by how much they change, folded
// into one summary per span by a frozen stacked recurrence, and exposed as
// per-layer key/value rows. A stack of cross-attention layers fuses those
// rows into the control branch's hybrid feature.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "nn.hpp"
#include "sketch_dit.hpp"
#include "tensor.hpp"

namespace longanim {

// ---------------------------------------------------------------------------
// Frame features

struct FrameFeatureExtractor {
    std::size_t patch = 4;
    Tensor proj;  // [3 p^2, D_f]
    Tensor bias;  // [D_f]

    FrameFeatureExtractor() = default;
    FrameFeatureExtractor(std::size_t p, std::size_t dim, Rng& rng)
        : patch(p),
          proj(rng.normal_tensor({3 * p * p, dim}, 2.0f / std::sqrt(static_cast<float>(3 * p * p)))),
          bias(rng.normal_tensor({dim}, 0.5f)) {}

    std::size_t dim() const { return bias.size(); }

    // frame: [H, W, 3] in [0,1] -> unit vector [D_f]
    Tensor operator()(const Tensor& frame) const {
        if (frame.ndim() != 3 || frame.dim(2) != 3) throw ShapeError("frame feature: expected [H,W,3]");
        const std::size_t h = frame.dim(0), w = frame.dim(1), p = patch;
        if (h % p || w % p) throw ShapeError("frame feature: size not divisible by patch");
        const std::size_t n = (h / p) * (w / p), pd = 3 * p * p, d = dim();
        Tensor patches({n, pd});
        std::size_t r = 0;
        for (std::size_t py = 0; py < h / p; ++py)
            for (std::size_t px = 0; px < w / p; ++px, ++r)
                for (std::size_t y = 0; y < p; ++y)
                    for (std::size_t x = 0; x < p; ++x)
                        for (std::size_t c = 0; c < 3; ++c)
                            patches.at(r, (y * p + x) * 3 + c) = 2.0f * frame[((py * p + y) * w + px * p + x) * 3 + c] - 1.0f;
        Tensor e({n, d});
        kernel::gemm_nn(patches.ptr(), proj.ptr(), e.ptr(), n, pd, d);
        std::vector<double> mean(d, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) mean[j] += std::tanh(static_cast<double>(e.at(i, j)) + bias[j]);
        double norm = 0.0;
        for (double v : mean) norm += v * v;
        norm = std::sqrt(norm);
        Tensor out({d});
        if (norm < 1e-12) {
            out[0] = 1.0f;
            return out;
        }
        for (std::size_t j = 0; j < d; ++j) out[j] = static_cast<float>(mean[j] / norm);
        return out;
    }
};

inline double cosine_change(const Tensor& a, const Tensor& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0 || nb == 0) return 1.0;
    return 1.0 - dot / std::sqrt(na * nb);
}

// ---------------------------------------------------------------------------
// Dynamic segmentation

struct Span {
    std::size_t start = 0, length = 0;
    bool operator==(const Span&) const = default;
};

struct SegmentationResult {
    std::vector<Span> spans;
    // Spans before this index were chosen with a full 8-frame look-ahead and
    // will not change when more frames are appended.
    std::size_t final_count = 0;
};

// Greedy left to right: the longest of 8, 4, 2 frames whose adjacent changes
// all stay below theta, else 2. A calm tail shorter than 8 is kept whole; an
// agitated one is cut into 2s with a possible 1-frame end.
inline SegmentationResult dynamic_segment_detail(const std::vector<Tensor>& features, double theta,
                                                 std::size_t offset = 0) {
    SegmentationResult res;
    const std::size_t n = features.size();
    std::vector<double> change(n > 0 ? n - 1 : 0);
    for (std::size_t i = 0; i + 1 < n; ++i) change[i] = cosine_change(features[i], features[i + 1]);
    auto calm = [&](std::size_t from, std::size_t len) {
        for (std::size_t i = from; i + 1 < from + len; ++i)
            if (!(change[i] < theta)) return false;
        return true;
    };
    std::size_t c = 0;
    while (c < n) {
        const std::size_t r = n - c;
        std::size_t take = 0;
        if (r < 8 && calm(c, r)) {
            take = r;
        } else {
            for (std::size_t w : {8u, 4u, 2u}) {
                if (w <= r && calm(c, w)) {
                    take = w;
                    break;
                }
            }
            if (take == 0) take = std::min<std::size_t>(2, r);
        }
        if (r >= 8) res.final_count = res.spans.size() + 1;
        res.spans.push_back({offset + c, take});
        c += take;
    }
    return res;
}

inline std::vector<Span> dynamic_segment(const std::vector<Tensor>& features, double theta) {
    if (features.empty()) throw ContractError("dynamic_segment: need at least one frame");
    return dynamic_segment_detail(features, theta).spans;
}

// ---------------------------------------------------------------------------
// Summarizer: layer l keeps s^l_g = tanh(A_l s^l_{g-1} + B_l s^{l-1}_g) with
// s^0_g the mean frame feature of span g and s^l_0 = 0. Frozen.

struct Summarizer {
    std::vector<Tensor> a;  // [D_s, D_s]
    std::vector<Tensor> b;  // [D_s, D_in]
    std::size_t first = 3, count = 4;  // extracted layers, 1-based
    std::vector<Tensor> k, v;          // per extracted layer [kv, D_s]

    using State = std::vector<std::vector<float>>;  // per layer [D_s]

    Summarizer() = default;
    Summarizer(std::size_t in_dim, std::size_t dim, std::size_t layers, std::size_t first_layer, std::size_t n_extract,
               std::size_t kv_dim, Rng& rng)
        : first(first_layer), count(n_extract) {
        if (first_layer == 0 || first_layer + n_extract - 1 > layers) throw ContractError("summarizer: bad layer range");
        for (std::size_t l = 0; l < layers; ++l) {
            const std::size_t fan = l == 0 ? in_dim : dim;
            a.push_back(rng.normal_tensor({dim, dim}, 0.6f / std::sqrt(static_cast<float>(dim))));
            b.push_back(rng.normal_tensor({dim, fan}, 1.5f / std::sqrt(static_cast<float>(fan))));
        }
        for (std::size_t m = 0; m < n_extract; ++m) {
            k.push_back(rng.normal_tensor({kv_dim, dim}, 1.0f / std::sqrt(static_cast<float>(dim))));
            v.push_back(rng.normal_tensor({kv_dim, dim}, 1.0f / std::sqrt(static_cast<float>(dim))));
        }
    }

    static Summarizer from_config(const RunConfig& cfg, Rng& rng) {
        return Summarizer(cfg.frame_feature_dim, cfg.summary_dim, cfg.summarizer_layers, cfg.memory_first_layer,
                          cfg.memory_layers, cfg.kv_dim, rng);
    }

    std::size_t layers() const { return a.size(); }
    std::size_t dim() const { return a.empty() ? 0 : a[0].rows(); }
    std::size_t kv_dim() const { return k.empty() ? 0 : k[0].rows(); }

    State initial() const { return State(layers(), std::vector<float>(dim(), 0.0f)); }

    static std::vector<float> affine_tanh(const Tensor& a, const std::vector<float>& prev, const Tensor& b,
                                          const float* in) {
        const std::size_t d = a.rows(), fan = b.cols();
        std::vector<float> out(d);
        for (std::size_t i = 0; i < d; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc += static_cast<double>(a.at(i, j)) * prev[j];
            for (std::size_t j = 0; j < fan; ++j) acc += static_cast<double>(b.at(i, j)) * in[j];
            out[i] = static_cast<float>(std::tanh(acc));
        }
        return out;
    }

    // Advances every layer by one span with input u (mean feature).
    State step(const State& prev, const std::vector<float>& u) const {
        State next(layers());
        const float* in = u.data();
        for (std::size_t l = 0; l < layers(); ++l) {
            next[l] = affine_tanh(a[l], prev[l], b[l], in);
            in = next[l].data();
        }
        return next;
    }

    std::vector<float> key(std::size_t m, const std::vector<float>& s) const { return apply(k[m], s); }
    std::vector<float> value(std::size_t m, const std::vector<float>& s) const { return apply(v[m], s); }

    static std::vector<float> apply(const Tensor& w, const std::vector<float>& s) {
        std::vector<float> out(w.rows());
        for (std::size_t i = 0; i < w.rows(); ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < w.cols(); ++j) acc += static_cast<double>(w.at(i, j)) * s[j];
            out[i] = static_cast<float>(acc);
        }
        return out;
    }
};

struct SegmentSummary {
    Span span;
    Summarizer::State state;  // all layers after this span
};

inline std::vector<float> mean_feature(const std::vector<Tensor>& features, Span span) {
    const std::size_t d = features.at(span.start).size();
    std::vector<double> acc(d, 0.0);
    for (std::size_t f = span.start; f < span.start + span.length; ++f)
        for (std::size_t j = 0; j < d; ++j) acc[j] += features.at(f)[j];
    std::vector<float> out(d);
    for (std::size_t j = 0; j < d; ++j) out[j] = static_cast<float>(acc[j] / static_cast<double>(span.length));
    return out;
}

inline std::vector<SegmentSummary> summarize(const Summarizer& sum, const std::vector<Tensor>& features,
                                             const std::vector<Span>& spans,
                                             const Summarizer::State* start_state = nullptr) {
    std::size_t expect = spans.empty() ? 0 : spans.front().start;
    for (const auto& s : spans) {
        if (s.start != expect || s.length == 0) throw ContractError("summarize: spans do not tile the history");
        expect += s.length;
    }
    if (expect > features.size()) throw ContractError("summarize: spans run past the history");
    std::vector<SegmentSummary> out;
    Summarizer::State state = start_state ? *start_state : sum.initial();
    for (const auto& s : spans) {
        state = sum.step(state, mean_feature(features, s));
        out.push_back({s, state});
    }
    return out;
}

// ---------------------------------------------------------------------------
// KV cache

struct MemoryCache {
    struct Layer {
        Tensor k_g, v_g;  // [G, kv]
        Tensor k_l, v_l;  // [L, kv]
    };
    std::vector<Layer> layers;
    std::vector<Span> spans;

    std::size_t global_rows() const { return layers.empty() ? 0 : layers[0].k_g.rows(); }
    std::size_t local_rows() const { return layers.empty() ? 0 : layers[0].k_l.rows(); }
};

inline MemoryCache build_cache(const Summarizer& sum, const std::vector<SegmentSummary>& summaries,
                               std::size_t local_count) {
    if (summaries.empty()) throw ContractError("build_cache: no summaries");
    MemoryCache cache;
    const std::size_t g = summaries.size(), l = std::min(local_count, g), kv = sum.kv_dim();
    for (const auto& s : summaries) cache.spans.push_back(s.span);
    for (std::size_t m = 0; m < sum.count; ++m) {
        MemoryCache::Layer layer{Tensor({g, kv}), Tensor({g, kv}), Tensor({l, kv}), Tensor({l, kv})};
        const std::size_t src = sum.first - 1 + m;
        for (std::size_t i = 0; i < g; ++i) {
            const auto kk = sum.key(m, summaries[i].state[src]);
            const auto vv = sum.value(m, summaries[i].state[src]);
            std::copy(kk.begin(), kk.end(), layer.k_g.row(i).begin());
            std::copy(vv.begin(), vv.end(), layer.v_g.row(i).begin());
            if (i >= g - l) {
                std::copy(kk.begin(), kk.end(), layer.k_l.row(i - (g - l)).begin());
                std::copy(vv.begin(), vv.end(), layer.v_l.row(i - (g - l)).begin());
            }
        }
        cache.layers.push_back(std::move(layer));
    }
    return cache;
}

// Dumps the cache as LANM blobs plus a manifest of spans and row counts.
inline void dump_cache(const MemoryCache& cache, const std::filesystem::path& dir, const std::string& config_hash = "") {
    std::filesystem::create_directories(dir);
    std::ofstream man(dir / "manifest.txt");
    if (!man) throw std::runtime_error("cannot write " + (dir / "manifest.txt").string());
    if (!config_hash.empty()) man << "config_hash " << config_hash << "\n";
    man << "layers " << cache.layers.size() << "\n";
    man << "global_rows " << cache.global_rows() << "\nlocal_rows " << cache.local_rows() << "\n";
    for (const auto& s : cache.spans) man << "span " << s.start << " " << s.length << "\n";
    for (std::size_t m = 0; m < cache.layers.size(); ++m) {
        const auto& l = cache.layers[m];
        const std::string p = "layer" + std::to_string(m + 1);
        for (const auto& [suffix, t] : {std::pair{"_k_g", &l.k_g}, std::pair{"_v_g", &l.v_g},
                                        std::pair{"_k_l", &l.k_l}, std::pair{"_v_l", &l.v_l}}) {
            std::ofstream os(dir / (p + suffix + ".lanm"), std::ios::binary);
            write_blob(os, *t);
            if (!os) throw std::runtime_error("cannot write cache blob in " + dir.string());
        }
    }
}

// ---------------------------------------------------------------------------
// Memory bank for one generation session: frames are appended as they are
// committed; spans that can no longer change are folded into the recurrence
// and their frame features dropped.

class MemoryBank {
   public:
    MemoryBank(const FrameFeatureExtractor& fx, const Summarizer& sum, double theta, std::size_t local_segments)
        : fx_(&fx), sum_(&sum), theta_(theta), local_(local_segments), state_(sum.initial()) {}

    // frames: [n, H, W, 3] in [0,1]
    void append(const Tensor& frames) {
        if (frames.ndim() != 4) throw ShapeError("memory append: expected [n,H,W,3]");
        const std::size_t per = frames.dim(1) * frames.dim(2) * 3;
        for (std::size_t f = 0; f < frames.dim(0); ++f) {
            Tensor one({frames.dim(1), frames.dim(2), 3},
                       std::vector<float>(frames.ptr() + f * per, frames.ptr() + (f + 1) * per));
            pending_.push_back((*fx_)(one));
        }
        frames_ += frames.dim(0);
        refresh();
    }

    void append_features(const std::vector<Tensor>& feats) {
        for (const auto& f : feats) pending_.push_back(f);
        frames_ += feats.size();
        refresh();
    }

    std::size_t history_frames() const { return frames_; }
    bool empty() const { return frames_ == 0; }
    std::size_t pending_frames() const { return pending_.size(); }

    std::vector<SegmentSummary> summaries() const {
        std::vector<SegmentSummary> all = final_;
        all.insert(all.end(), tail_.begin(), tail_.end());
        return all;
    }

    std::vector<Span> spans() const {
        std::vector<Span> out;
        for (const auto& s : summaries()) out.push_back(s.span);
        return out;
    }

    MemoryCache cache() const { return build_cache(*sum_, summaries(), local_); }

   private:
    void refresh() {
        const std::size_t base = frames_ - pending_.size();
        SegmentationResult seg = dynamic_segment_detail(pending_, theta_, base);
        std::vector<Span> local(seg.spans);
        for (auto& s : local) s.start -= base;
        auto sums = summarize(*sum_, pending_, local, &state_);
        for (std::size_t i = 0; i < sums.size(); ++i) sums[i].span = seg.spans[i];
        std::size_t drop = 0;
        for (std::size_t i = 0; i < seg.final_count; ++i) {
            final_.push_back(sums[i]);
            state_ = sums[i].state;
            drop += sums[i].span.length;
        }
        tail_.assign(sums.begin() + static_cast<std::ptrdiff_t>(seg.final_count), sums.end());
        pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(drop));
    }

    const FrameFeatureExtractor* fx_;
    const Summarizer* sum_;
    double theta_;
    std::size_t local_;
    std::size_t frames_ = 0;
    std::vector<Tensor> pending_;
    std::vector<SegmentSummary> final_, tail_;
    Summarizer::State state_;
};

// ---------------------------------------------------------------------------
// Fusion stack: per memory layer, a projector FFN (kv -> D) and one
// single-head cross-attention step h <- h + softmax(Q K^T / sqrt(d)) V.

struct Projector {
    nn::Linear up, down;

    Projector() = default;
    Projector(const std::string& name, std::size_t in, std::size_t width, Rng& rng)
        : up(name + ".up", in, width, rng), down(name + ".down", width, width, rng) {}

    struct Cache {
        Tensor x, pre, act;
    };

    Tensor forward(const Tensor& x, Cache* c = nullptr) const {
        Tensor pre = up.forward(x);
        Tensor act = pre;
        for (auto& v : act.data()) v = nn::gelu(v);
        Tensor y = down.forward(act);
        if (c) *c = {x, std::move(pre), std::move(act)};
        return y;
    }

    void backward(const Cache& c, const Tensor& dy) {
        Tensor da = down.backward(c.act, dy, true);
        for (std::size_t i = 0; i < da.size(); ++i) da[i] *= nn::gelu_grad(c.pre[i]);
        up.backward(c.x, da, true, false);
    }

    void collect(nn::ParamList& ps) {
        up.collect(ps);
        down.collect(ps);
    }
};

struct FusionStack {
    std::size_t width = 0;
    std::vector<Projector> proj_k, proj_v;
    std::vector<nn::Linear> wq, wk, wv;

    struct LayerCache {
        Tensor h_in;          // [n, D]
        Projector::Cache pk, pv;
        Tensor keys_in, vals_in;  // projected rows [g+l, D]
        Tensor q, k, v;       // [n, D], [r, D], [r, D]
        Tensor probs;         // [n, r]
    };
    struct Cache {
        std::vector<LayerCache> layers;
    };

    FusionStack() = default;
    FusionStack(std::size_t layers, std::size_t kv_dim, std::size_t d, Rng& rng) : width(d) {
        for (std::size_t m = 0; m < layers; ++m) {
            const std::string p = "dglm/fuse" + std::to_string(m + 1);
            proj_k.emplace_back(p + ".proj_k", kv_dim, d, rng);
            proj_v.emplace_back(p + ".proj_v", kv_dim, d, rng);
            wq.emplace_back(p + ".wq", d, d, rng);
            wk.emplace_back(p + ".wk", d, d, rng);
            wv.emplace_back(p + ".wv", d, d, rng);
            wv.back().zero_init();
        }
    }

    std::size_t layers() const { return wq.size(); }

    // Projected [global ; local] rows for layer m.
    Tensor project_keys(std::size_t m, const MemoryCache::Layer& l, Projector::Cache* c = nullptr) const {
        return proj_k[m].forward(concat({l.k_g, l.k_l}, 0), c);
    }
    Tensor project_values(std::size_t m, const MemoryCache::Layer& l, Projector::Cache* c = nullptr) const {
        return proj_v[m].forward(concat({l.v_g, l.v_l}, 0), c);
    }

    Tensor fuse(const Tensor& h, const MemoryCache& cache, Cache* fc = nullptr) const {
        if (cache.layers.size() != layers()) {
            throw ContractError("fuse: cache has " + std::to_string(cache.layers.size()) + " layers, stack has " +
                                std::to_string(layers()));
        }
        if (h.ndim() != 2 || h.cols() != width) throw ShapeError("fuse: hybrid feature width mismatch");
        Tensor x = h;
        if (fc) fc->layers.assign(layers(), {});
        const float scale = 1.0f / std::sqrt(static_cast<float>(width));
        for (std::size_t m = 0; m < layers(); ++m) {
            LayerCache lc;
            Tensor keys_in = project_keys(m, cache.layers[m], fc ? &lc.pk : nullptr);
            Tensor vals_in = project_values(m, cache.layers[m], fc ? &lc.pv : nullptr);
            Tensor q = wq[m].forward(x);
            Tensor k = wk[m].forward(keys_in);
            Tensor v = wv[m].forward(vals_in);
            Tensor scores({x.rows(), k.rows()});
            kernel::gemm_nt(q.ptr(), k.ptr(), scores.ptr(), x.rows(), width, k.rows());
            for (auto& s : scores.data()) s *= scale;
            Tensor probs = softmax(scores, 1);
            Tensor out({x.rows(), width});
            kernel::gemm_nn(probs.ptr(), v.ptr(), out.ptr(), x.rows(), k.rows(), width);
            if (fc) {
                lc.h_in = x;
                lc.keys_in = std::move(keys_in);
                lc.vals_in = std::move(vals_in);
                lc.q = std::move(q);
                lc.k = std::move(k);
                lc.v = std::move(v);
                lc.probs = std::move(probs);
                fc->layers[m] = std::move(lc);
            }
            for (std::size_t i = 0; i < x.size(); ++i) x[i] += out[i];
        }
        require_finite(x, "fuse");
        return x;
    }

    HybridFeature fuse(const HybridFeature& h, const MemoryCache& cache, Cache* fc = nullptr) const {
        return {fuse(h.tokens, cache, fc), h.segment};
    }

    // Accumulates parameter gradients; returns d(loss)/d(h).
    Tensor backward(const Cache& fc, const Tensor& d_out) {
        Tensor dx = d_out;
        const float scale = 1.0f / std::sqrt(static_cast<float>(width));
        for (std::size_t m = layers(); m-- > 0;) {
            const LayerCache& c = fc.layers[m];
            const std::size_t n = c.h_in.rows(), r = c.k.rows();
            // out = P V
            Tensor dp({n, r});
            kernel::gemm_nt(dx.ptr(), c.v.ptr(), dp.ptr(), n, width, r);
            Tensor dv({r, width});
            kernel::gemm_tn(c.probs.ptr(), dx.ptr(), dv.ptr(), r, n, width);
            Tensor ds({n, r});
            for (std::size_t i = 0; i < n; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < r; ++j) dot += static_cast<double>(dp.at(i, j)) * c.probs.at(i, j);
                for (std::size_t j = 0; j < r; ++j)
                    ds.at(i, j) = static_cast<float>(c.probs.at(i, j) * (dp.at(i, j) - dot)) * scale;
            }
            Tensor dq({n, width}), dk({r, width});
            kernel::gemm_nn(ds.ptr(), c.k.ptr(), dq.ptr(), n, r, width);
            kernel::gemm_tn(ds.ptr(), c.q.ptr(), dk.ptr(), r, n, width);
            Tensor d_keys = wk[m].backward(c.keys_in, dk, true);
            Tensor d_vals = wv[m].backward(c.vals_in, dv, true);
            proj_k[m].backward(c.pk, d_keys);
            proj_v[m].backward(c.pv, d_vals);
            Tensor dh = wq[m].backward(c.h_in, dq, true);
            for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dh[i];
        }
        return dx;
    }

    nn::ParamList params() {
        nn::ParamList ps;
        for (std::size_t m = 0; m < layers(); ++m) {
            proj_k[m].collect(ps);
            proj_v[m].collect(ps);
            wq[m].collect(ps);
            wk[m].collect(ps);
            wv[m].collect(ps);
        }
        return ps;
    }
};

}  // namespace longanim
