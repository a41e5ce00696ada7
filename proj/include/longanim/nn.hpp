#pragma once

// Layers with hand-written backward passes. Weights are stored [in, out] so
// forward is a plain x * W; every backward accumulates into Param::grad.

#include <cmath>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace longanim::nn {

struct Param {
    std::string name;
    Tensor value;
    Tensor grad;

    Param() = default;
    Param(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.dims()) {}

    void zero_grad() { grad.fill(0.0f); }
};

using ParamList = std::vector<Param*>;

inline void zero_grads(const ParamList& ps) {
    for (auto* p : ps) p->zero_grad();
}

inline double grad_norm(const ParamList& ps) {
    double s = 0.0;
    for (auto* p : ps)
        for (float g : p->grad.data()) s += static_cast<double>(g) * g;
    return std::sqrt(s);
}

inline void clip_grads(const ParamList& ps, double max_norm) {
    const double n = grad_norm(ps);
    if (max_norm <= 0.0 || n <= max_norm) return;
    const float s = static_cast<float>(max_norm / n);
    for (auto* p : ps)
        for (auto& g : p->grad.data()) g *= s;
}

struct Linear {
    Param w;  // [in, out]
    Param b;  // [out]

    Linear() = default;
    Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng, float gain = 1.0f)
        : w(name + ".w", rng.normal_tensor({in, out}, gain / std::sqrt(static_cast<float>(in)))),
          b(name + ".b", Tensor({out})) {}

    std::size_t in() const { return w.value.dim(0); }
    std::size_t out() const { return w.value.dim(1); }

    void zero_init() {
        w.value.fill(0.0f);
        b.value.fill(0.0f);
    }

    Tensor forward(const Tensor& x) const {
        if (x.cols() != in()) {
            throw ShapeError("linear " + w.name + ": input width " + std::to_string(x.cols()) +
                             " != " + std::to_string(in()));
        }
        const std::size_t n = x.rows();
        Tensor y({n, out()});
        kernel::gemm_nn(x.ptr(), w.value.ptr(), y.ptr(), n, in(), out());
        for (std::size_t r = 0; r < n; ++r) {
            auto yr = y.row(r);
            for (std::size_t j = 0; j < out(); ++j) yr[j] += b.value[j];
        }
        return y;
    }

    // Accumulates dW, db; returns dx when asked.
    Tensor backward(const Tensor& x, const Tensor& dy, bool param_grads = true, bool need_dx = true) {
        const std::size_t n = x.rows();
        if (param_grads) {
            kernel::gemm_tn(x.ptr(), dy.ptr(), w.grad.ptr(), in(), n, out(), true);
            for (std::size_t r = 0; r < n; ++r) {
                auto dr = dy.row(r);
                for (std::size_t j = 0; j < out(); ++j) b.grad[j] += dr[j];
            }
        }
        if (!need_dx) return {};
        Tensor dx({n, in()});
        kernel::gemm_nt(dy.ptr(), w.value.ptr(), dx.ptr(), n, out(), in());
        return dx;
    }

    void collect(ParamList& ps) {
        ps.push_back(&w);
        ps.push_back(&b);
    }
};

struct LayerNorm {
    Param gain;
    Param bias;
    float eps = 1e-5f;

    LayerNorm() = default;
    LayerNorm(const std::string& name, std::size_t width)
        : gain(name + ".g", Tensor({width}, 1.0f)), bias(name + ".b", Tensor({width})) {}

    Tensor forward(const Tensor& x) const { return layer_norm(x, gain.value, bias.value, eps); }

    Tensor backward(const Tensor& x, const Tensor& dy, bool param_grads = true) {
        const std::size_t w = x.cols();
        Tensor dx(x.dims());
        std::vector<double> xhat(w), dxh(w);
        for (std::size_t r = 0; r < x.rows(); ++r) {
            auto in = x.row(r);
            auto g = dy.row(r);
            double mean = 0.0;
            for (float v : in) mean += v;
            mean /= static_cast<double>(w);
            double var = 0.0;
            for (float v : in) var += (v - mean) * (v - mean);
            var /= static_cast<double>(w);
            const double rstd = 1.0 / std::sqrt(var + eps);
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t i = 0; i < w; ++i) {
                xhat[i] = (in[i] - mean) * rstd;
                dxh[i] = static_cast<double>(g[i]) * gain.value[i];
                m1 += dxh[i];
                m2 += dxh[i] * xhat[i];
                if (param_grads) {
                    gain.grad[i] += static_cast<float>(g[i] * xhat[i]);
                    bias.grad[i] += g[i];
                }
            }
            m1 /= static_cast<double>(w);
            m2 /= static_cast<double>(w);
            auto o = dx.row(r);
            for (std::size_t i = 0; i < w; ++i) o[i] = static_cast<float>(rstd * (dxh[i] - m1 - xhat[i] * m2));
        }
        return dx;
    }

    void collect(ParamList& ps) {
        ps.push_back(&gain);
        ps.push_back(&bias);
    }
};

inline float gelu(float x) {
    constexpr float k = 0.7978845608028654f;  // sqrt(2/pi)
    return 0.5f * x * (1.0f + std::tanh(k * (x + 0.044715f * x * x * x)));
}

inline float gelu_grad(float x) {
    constexpr float k = 0.7978845608028654f;
    const float u = k * (x + 0.044715f * x * x * x);
    const float t = std::tanh(u);
    return 0.5f * (1.0f + t) + 0.5f * x * (1.0f - t * t) * k * (1.0f + 3.0f * 0.044715f * x * x);
}

struct FeedForward {
    Linear up;
    Linear down;

    struct Cache {
        Tensor x, pre, act;
    };

    FeedForward() = default;
    FeedForward(const std::string& name, std::size_t width, std::size_t hidden, Rng& rng)
        : up(name + ".up", width, hidden, rng), down(name + ".down", hidden, width, rng) {}

    Tensor forward(const Tensor& x, Cache* cache = nullptr) const {
        Tensor pre = up.forward(x);
        Tensor act = pre;
        for (auto& v : act.data()) v = gelu(v);
        Tensor y = down.forward(act);
        if (cache) *cache = {x, std::move(pre), std::move(act)};
        return y;
    }

    Tensor backward(const Cache& c, const Tensor& dy, bool param_grads = true) {
        Tensor dact = down.backward(c.act, dy, param_grads);
        for (std::size_t i = 0; i < dact.size(); ++i) dact[i] *= gelu_grad(c.pre[i]);
        return up.backward(c.x, dact, param_grads);
    }

    void collect(ParamList& ps) {
        up.collect(ps);
        down.collect(ps);
    }
};

// Multi-head self attention over all rows of x (no mask).
struct SelfAttention {
    Linear qkv;
    Linear proj;
    std::size_t heads = 1;

    struct Cache {
        Tensor x;      // [n, D]
        Tensor q, k, v;  // [heads, n, dh]
        Tensor probs;  // [heads, n, n]
        Tensor merged;  // [n, D]
    };

    SelfAttention() = default;
    SelfAttention(const std::string& name, std::size_t width, std::size_t n_heads, Rng& rng)
        : qkv(name + ".qkv", width, 3 * width, rng), proj(name + ".proj", width, width, rng), heads(n_heads) {
        if (width % n_heads != 0) throw ShapeError("attention: width not divisible by heads");
    }

    std::size_t width() const { return proj.out(); }

    Tensor forward(const Tensor& x, Cache* cache = nullptr) const {
        const std::size_t n = x.rows(), d = width(), dh = d / heads;
        Tensor packed = qkv.forward(x);
        Tensor q({heads, n, dh}), k({heads, n, dh}), v({heads, n, dh});
        for (std::size_t r = 0; r < n; ++r) {
            auto pr = packed.row(r);
            for (std::size_t h = 0; h < heads; ++h) {
                for (std::size_t j = 0; j < dh; ++j) {
                    q[(h * n + r) * dh + j] = pr[h * dh + j];
                    k[(h * n + r) * dh + j] = pr[d + h * dh + j];
                    v[(h * n + r) * dh + j] = pr[2 * d + h * dh + j];
                }
            }
        }
        const float sc = 1.0f / std::sqrt(static_cast<float>(dh));
        Tensor probs({heads, n, n});
        Tensor merged({n, d});
        std::vector<float> o(n * dh);
        for (std::size_t h = 0; h < heads; ++h) {
            float* p = probs.ptr() + h * n * n;
            kernel::gemm_nt(q.ptr() + h * n * dh, k.ptr() + h * n * dh, p, n, dh, n);
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t c = 0; c < n; ++c) p[r * n + c] *= sc;
                kernel::softmax_row(p + r * n, n);
            }
            kernel::gemm_nn(p, v.ptr() + h * n * dh, o.data(), n, n, dh);
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t j = 0; j < dh; ++j) merged.at(r, h * dh + j) = o[r * dh + j];
        }
        Tensor y = proj.forward(merged);
        if (cache) *cache = {x, std::move(q), std::move(k), std::move(v), std::move(probs), std::move(merged)};
        return y;
    }

    Tensor backward(const Cache& c, const Tensor& dy, bool param_grads = true) {
        const std::size_t n = c.x.rows(), d = width(), dh = d / heads;
        const float sc = 1.0f / std::sqrt(static_cast<float>(dh));
        Tensor dmerged = proj.backward(c.merged, dy, param_grads);
        Tensor dpacked({n, 3 * d});
        std::vector<float> dout(n * dh), dp(n * n), dq(n * dh), dk(n * dh), dv(n * dh);
        for (std::size_t h = 0; h < heads; ++h) {
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t j = 0; j < dh; ++j) dout[r * dh + j] = dmerged.at(r, h * dh + j);
            const float* p = c.probs.ptr() + h * n * n;
            const float* qh = c.q.ptr() + h * n * dh;
            const float* kh = c.k.ptr() + h * n * dh;
            const float* vh = c.v.ptr() + h * n * dh;
            kernel::gemm_tn(p, dout.data(), dv.data(), n, n, dh);
            kernel::gemm_nt(dout.data(), vh, dp.data(), n, dh, n);
            for (std::size_t r = 0; r < n; ++r) {
                double dot = 0.0;
                for (std::size_t cc = 0; cc < n; ++cc) dot += static_cast<double>(dp[r * n + cc]) * p[r * n + cc];
                for (std::size_t cc = 0; cc < n; ++cc)
                    dp[r * n + cc] = p[r * n + cc] * (dp[r * n + cc] - static_cast<float>(dot)) * sc;
            }
            kernel::gemm_nn(dp.data(), kh, dq.data(), n, n, dh);
            kernel::gemm_tn(dp.data(), qh, dk.data(), n, n, dh);
            for (std::size_t r = 0; r < n; ++r) {
                auto pr = dpacked.row(r);
                for (std::size_t j = 0; j < dh; ++j) {
                    pr[h * dh + j] = dq[r * dh + j];
                    pr[d + h * dh + j] = dk[r * dh + j];
                    pr[2 * d + h * dh + j] = dv[r * dh + j];
                }
            }
        }
        return qkv.backward(c.x, dpacked, param_grads);
    }

    void collect(ParamList& ps) {
        qkv.collect(ps);
        proj.collect(ps);
    }
};

// Pre-norm transformer block. An optional additive term is applied to rows
// [offset, offset + add.rows()) right after the attention residual.
struct Block {
    LayerNorm ln1;
    SelfAttention attn;
    LayerNorm ln2;
    FeedForward ffn;

    struct Cache {
        Tensor x;
        Tensor h1;  // ln1(x)
        SelfAttention::Cache attn;
        Tensor x1;  // after attention residual (+ injection)
        Tensor h2;  // ln2(x1)
        FeedForward::Cache ffn;
    };

    Block() = default;
    Block(const std::string& name, std::size_t width, std::size_t heads, std::size_t ffn_mult, Rng& rng)
        : ln1(name + ".ln1", width),
          attn(name + ".attn", width, heads, rng),
          ln2(name + ".ln2", width),
          ffn(name + ".ffn", width, width * ffn_mult, rng) {}

    // Zero output projections make the block an identity map.
    void make_identity() {
        attn.proj.zero_init();
        ffn.down.zero_init();
    }

    Tensor forward(const Tensor& x, const Tensor* add, std::size_t add_offset, float add_scale,
                   Cache* cache = nullptr) const {
        Tensor h1 = ln1.forward(x);
        SelfAttention::Cache ac;
        Tensor a = attn.forward(h1, cache ? &ac : nullptr);
        Tensor x1 = x;
        for (std::size_t i = 0; i < x1.size(); ++i) x1[i] += a[i];
        if (add) {
            const std::size_t w = x1.cols();
            for (std::size_t r = 0; r < add->rows(); ++r)
                for (std::size_t j = 0; j < w; ++j) x1.at(add_offset + r, j) += add_scale * add->at(r, j);
        }
        Tensor h2 = ln2.forward(x1);
        FeedForward::Cache fc;
        Tensor f = ffn.forward(h2, cache ? &fc : nullptr);
        Tensor x2 = x1;
        for (std::size_t i = 0; i < x2.size(); ++i) x2[i] += f[i];
        if (cache) *cache = {x, std::move(h1), std::move(ac), std::move(x1), std::move(h2), std::move(fc)};
        return x2;
    }

    // Returns dx. The gradient w.r.t. the additive term (before scaling) is
    // the slice of dx1, written to *d_add when requested.
    Tensor backward(const Cache& c, const Tensor& dy, bool param_grads, Tensor* d_x1 = nullptr) {
        Tensor dh2 = ffn.backward(c.ffn, dy, param_grads);
        Tensor dx1 = ln2.backward(c.x1, dh2, param_grads);
        for (std::size_t i = 0; i < dx1.size(); ++i) dx1[i] += dy[i];
        if (d_x1) *d_x1 = dx1;
        Tensor dh1 = attn.backward(c.attn, dx1, param_grads);
        Tensor dx = ln1.backward(c.x, dh1, param_grads);
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dx1[i];
        return dx;
    }

    void collect(ParamList& ps) {
        ln1.collect(ps);
        attn.collect(ps);
        ln2.collect(ps);
        ffn.collect(ps);
    }
};

struct Adam {
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    ParamList params;
    std::vector<std::vector<float>> m, v;
    long step_count = 0;

    Adam() = default;
    Adam(ParamList ps, double learning_rate) : lr(learning_rate), params(std::move(ps)) {
        for (auto* p : params) {
            m.emplace_back(p->value.size(), 0.0f);
            v.emplace_back(p->value.size(), 0.0f);
        }
    }

    void step() {
        ++step_count;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& p = *params[i];
            for (std::size_t j = 0; j < p.value.size(); ++j) {
                const double g = p.grad[j];
                m[i][j] = static_cast<float>(beta1 * m[i][j] + (1.0 - beta1) * g);
                v[i][j] = static_cast<float>(beta2 * v[i][j] + (1.0 - beta2) * g * g);
                const double mh = m[i][j] / c1, vh = v[i][j] / c2;
                p.value[j] -= static_cast<float>(lr * mh / (std::sqrt(vh) + eps));
            }
        }
    }
};

inline void sgd_step(const ParamList& ps, double lr) {
    for (auto* p : ps)
        for (std::size_t j = 0; j < p->value.size(); ++j) p->value[j] -= static_cast<float>(lr * p->grad[j]);
}

}  // namespace longanim::nn
