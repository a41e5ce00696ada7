#pragma once

// Toy video DiT: patch codec standing in for the VAE, a linear noise
// schedule, the joint text+video transformer stack with skip-layer injection
// slots, the noise-prediction loss and an ancestral sampler that can record
// per-step transition log-densities.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "media.hpp"
#include "nn.hpp"
#include "tensor.hpp"

namespace longanim {

// ---------------------------------------------------------------------------
// Video <-> tensor helpers. Video tensors are [T, H, W, 3] in [0, 1].

inline Tensor frames_to_tensor(const media::FrameSequence& seq) {
    seq.validate();
    const std::size_t t = seq.size(), h = seq.height(), w = seq.width();
    Tensor out({t, h, w, 3});
    for (std::size_t f = 0; f < t; ++f)
        for (std::size_t i = 0; i < h * w * 3; ++i) out[f * h * w * 3 + i] = seq.frames[f].rgb[i] / 255.0f;
    return out;
}

inline media::FrameSequence tensor_to_frames(const Tensor& video) {
    if (video.ndim() != 4 || video.dim(3) != 3) throw ShapeError("tensor_to_frames: expected [T,H,W,3]");
    media::FrameSequence seq;
    const std::size_t per = video.dim(1) * video.dim(2) * 3;
    for (std::size_t f = 0; f < video.dim(0); ++f) {
        Tensor one({video.dim(1), video.dim(2), 3}, std::vector<float>(video.ptr() + f * per, video.ptr() + (f + 1) * per));
        seq.frames.push_back(media::tensor_to_image(one));
    }
    return seq;
}

// Lines map to 1 in every channel.
inline Tensor sketches_to_tensor(const media::SketchSequence& s) {
    if (s.frames.empty()) throw ShapeError("sketches_to_tensor: empty sequence");
    const std::size_t h = s.frames[0].height, w = s.frames[0].width;
    Tensor out({s.size(), h, w, 3});
    for (std::size_t f = 0; f < s.size(); ++f) {
        if (s.frames[f].height != h || s.frames[f].width != w) throw ShapeError("sketches: mixed resolutions");
        for (std::size_t i = 0; i < h * w; ++i) {
            const auto b = s.frames[f].bits[i];
            if (b > 1) throw media::ValidationError("sketch input is not binary");
            for (std::size_t c = 0; c < 3; ++c) out[(f * h * w + i) * 3 + c] = static_cast<float>(b);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Patch codec: non-overlapping p x p patches, temporal stride 1, a linear
// map to C latent channels with orthonormal columns, decoded by the
// transpose (the least-squares inverse for orthonormal columns).

struct LatentVideo {
    Tensor data;  // [T', H', W', C]
    std::size_t temporal_factor = 1;
    std::size_t spatial_factor = 1;

    std::size_t frames() const { return data.dim(0); }
    std::size_t tokens() const { return data.dim(0) * data.dim(1) * data.dim(2); }
    std::size_t channels() const { return data.dim(3); }
};

struct PatchCodec {
    std::size_t patch = 4;
    std::size_t channels = 8;
    float scale = 1.0f;
    Tensor enc;  // [3 p^2, C]

    std::size_t patch_dim() const { return 3 * patch * patch; }

    static Tensor dct_basis(std::size_t p, std::size_t channels) {
        const std::size_t n = 3 * p * p;
        const double color[3][3] = {{1 / std::sqrt(3.0), 1 / std::sqrt(3.0), 1 / std::sqrt(3.0)},
                                    {1 / std::sqrt(2.0), -1 / std::sqrt(2.0), 0.0},
                                    {1 / std::sqrt(6.0), 1 / std::sqrt(6.0), -2 / std::sqrt(6.0)}};
        auto phi = [p](std::size_t u, std::size_t x) {
            const double a = u == 0 ? std::sqrt(1.0 / p) : std::sqrt(2.0 / p);
            return a * std::cos(M_PI * (2.0 * x + 1.0) * u / (2.0 * p));
        };
        struct Key {
            std::size_t freq, col, u, v;
        };
        std::vector<Key> keys;
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t u = 0; u < p; ++u)
                for (std::size_t v = 0; v < p; ++v) keys.push_back({u + v, c, u, v});
        std::stable_sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
            if (a.freq != b.freq) return a.freq < b.freq;
            if (a.col != b.col) return a.col < b.col;
            if (a.u != b.u) return a.u < b.u;
            return a.v < b.v;
        });
        Tensor basis({n, channels});
        for (std::size_t k = 0; k < channels; ++k) {
            const Key& key = keys[k];
            for (std::size_t y = 0; y < p; ++y)
                for (std::size_t x = 0; x < p; ++x)
                    for (std::size_t c = 0; c < 3; ++c)
                        basis.at((y * p + x) * 3 + c, k) =
                            static_cast<float>(phi(key.u, y) * phi(key.v, x) * color[key.col][c]);
        }
        return basis;
    }

    static Tensor orthogonal_basis(std::size_t n, std::size_t channels, Rng& rng) {
        std::vector<std::vector<double>> cols;
        while (cols.size() < channels) {
            std::vector<double> v(n);
            for (auto& x : v) x = rng.normal();
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& c : cols) {
                    double d = 0;
                    for (std::size_t i = 0; i < n; ++i) d += v[i] * c[i];
                    for (std::size_t i = 0; i < n; ++i) v[i] -= d * c[i];
                }
            double norm = 0;
            for (double x : v) norm += x * x;
            norm = std::sqrt(norm);
            if (norm < 1e-6) continue;
            for (auto& x : v) x /= norm;
            cols.push_back(std::move(v));
        }
        Tensor basis({n, channels});
        for (std::size_t k = 0; k < channels; ++k)
            for (std::size_t i = 0; i < n; ++i) basis.at(i, k) = static_cast<float>(cols[k][i]);
        return basis;
    }

    static PatchCodec make(const std::string& kind, std::size_t p, std::size_t channels, float scale, Rng& rng) {
        PatchCodec c;
        c.patch = p;
        c.channels = channels;
        c.scale = scale;
        const std::size_t n = 3 * p * p;
        if (channels == 0 || channels > n) throw ShapeError("codec: channels must be in [1, 3p^2]");
        if (kind == "identity") {
            if (channels != n) throw ShapeError("identity codec needs 3p^2 channels");
            c.enc = Tensor({n, n});
            for (std::size_t i = 0; i < n; ++i) c.enc.at(i, i) = 1.0f;
        } else if (kind == "orthogonal") {
            c.enc = orthogonal_basis(n, channels, rng);
        } else if (kind == "dct") {
            c.enc = dct_basis(p, channels);
        } else {
            throw ShapeError("unknown codec '" + kind + "'");
        }
        return c;
    }

    static PatchCodec from_config(const RunConfig& cfg) {
        Rng rng(cfg.seed ^ 0xC0DEC);
        return make(cfg.codec, cfg.patch, cfg.latent_channels, static_cast<float>(cfg.latent_scale), rng);
    }

    // [T, H, W, 3] in [0,1] -> latent [T, H/p, W/p, C]
    LatentVideo encode(const Tensor& video) const {
        if (video.ndim() != 4 || video.dim(3) != 3) throw ShapeError("encode: expected [T,H,W,3], got " + shape_str(video.dims()));
        const std::size_t t = video.dim(0), h = video.dim(1), w = video.dim(2), p = patch;
        if (h % p != 0 || w % p != 0) {
            throw ShapeError("encode: frame " + std::to_string(h) + "x" + std::to_string(w) +
                             " not divisible by patch " + std::to_string(p));
        }
        const std::size_t hp = h / p, wp = w / p, n = patch_dim();
        Tensor patches({t * hp * wp, n});
        for (std::size_t f = 0; f < t; ++f)
            for (std::size_t py = 0; py < hp; ++py)
                for (std::size_t px = 0; px < wp; ++px) {
                    auto row = patches.row((f * hp + py) * wp + px);
                    for (std::size_t y = 0; y < p; ++y)
                        for (std::size_t x = 0; x < p; ++x)
                            for (std::size_t c = 0; c < 3; ++c)
                                row[(y * p + x) * 3 + c] =
                                    2.0f * video[((f * h + py * p + y) * w + px * p + x) * 3 + c] - 1.0f;
                }
        Tensor z({t * hp * wp, channels});
        kernel::gemm_nn(patches.ptr(), enc.ptr(), z.ptr(), t * hp * wp, n, channels);
        if (scale != 1.0f)
            for (auto& v : z.data()) v *= scale;
        return {z.reshaped({t, hp, wp, channels}), 1, p};
    }

    Tensor decode(const LatentVideo& lat) const { return decode(lat.data); }

    // latent [T, h, w, C] -> [T, H, W, 3], not clamped
    Tensor decode(const Tensor& latent) const {
        if (latent.ndim() != 4 || latent.dim(3) != channels) throw ShapeError("decode: expected [T,h,w,C]");
        const std::size_t t = latent.dim(0), hp = latent.dim(1), wp = latent.dim(2), p = patch, n = patch_dim();
        Tensor z = latent.reshaped({t * hp * wp, channels});
        if (scale != 1.0f)
            for (auto& v : z.data()) v /= scale;
        Tensor patches({t * hp * wp, n});
        kernel::gemm_nt(z.ptr(), enc.ptr(), patches.ptr(), t * hp * wp, channels, n);
        const std::size_t h = hp * p, w = wp * p;
        Tensor video({t, h, w, 3});
        for (std::size_t f = 0; f < t; ++f)
            for (std::size_t py = 0; py < hp; ++py)
                for (std::size_t px = 0; px < wp; ++px) {
                    auto row = patches.row((f * hp + py) * wp + px);
                    for (std::size_t y = 0; y < p; ++y)
                        for (std::size_t x = 0; x < p; ++x)
                            for (std::size_t c = 0; c < 3; ++c)
                                video[((f * h + py * p + y) * w + px * p + x) * 3 + c] =
                                    0.5f * (row[(y * p + x) * 3 + c] + 1.0f);
                }
        return video;
    }
};

// ---------------------------------------------------------------------------
// Linear-beta DDPM schedule; index 0 is the clean end (alpha_bar = 1).

struct DenoiseSchedule {
    std::vector<double> beta, alpha, alpha_bar;

    static DenoiseSchedule linear(std::size_t steps, double beta_start, double beta_end) {
        if (steps == 0) throw std::invalid_argument("schedule: zero steps");
        DenoiseSchedule s;
        s.beta.assign(steps + 1, 0.0);
        s.alpha.assign(steps + 1, 1.0);
        s.alpha_bar.assign(steps + 1, 1.0);
        for (std::size_t t = 1; t <= steps; ++t) {
            const double frac = steps == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(steps - 1);
            s.beta[t] = beta_start + (beta_end - beta_start) * frac;
            s.alpha[t] = 1.0 - s.beta[t];
            s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
        }
        return s;
    }

    static DenoiseSchedule from_config(const RunConfig& cfg) {
        return linear(cfg.t_steps, cfg.beta_start, cfg.beta_end);
    }

    std::size_t steps() const { return beta.size() - 1; }
    double noise_level(std::size_t t) const { return std::sqrt(1.0 - alpha_bar.at(t)); }
    double signal_level(std::size_t t) const { return std::sqrt(alpha_bar.at(t)); }
    double sigma(std::size_t t) const { return std::sqrt(beta.at(t)); }
    // mean(z_{t-1} | z_t) = (z_t - eps_coef * eps_hat) * mean_scale
    double eps_coef(std::size_t t) const { return beta.at(t) / noise_level(t); }
    double mean_scale(std::size_t t) const { return 1.0 / std::sqrt(alpha.at(t)); }

    Tensor q_sample(const Tensor& z0, std::size_t t, const Tensor& eps) const {
        require_same_shape(z0, eps, "q_sample");
        Tensor out(z0.dims());
        const float a = static_cast<float>(signal_level(t)), b = static_cast<float>(noise_level(t));
        for (std::size_t i = 0; i < z0.size(); ++i) out[i] = a * z0[i] + b * eps[i];
        return out;
    }

    Tensor transition_mean(const Tensor& z_t, std::size_t t, const Tensor& eps_hat) const {
        require_same_shape(z_t, eps_hat, "transition_mean");
        Tensor out(z_t.dims());
        const double c = eps_coef(t), m = mean_scale(t);
        for (std::size_t i = 0; i < z_t.size(); ++i) out[i] = static_cast<float>((z_t[i] - c * eps_hat[i]) * m);
        return out;
    }
};

inline double gaussian_log_density(const Tensor& x, const Tensor& mean, double sigma) {
    require_same_shape(x, mean, "gaussian_log_density");
    const double var = sigma * sigma;
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = static_cast<double>(x[i]) - mean[i];
        acc += d * d;
    }
    return -0.5 * acc / var - 0.5 * static_cast<double>(x.size()) * std::log(2.0 * M_PI * var);
}

// ---------------------------------------------------------------------------
// Sampler. `predict(z_t, t)` returns eps_hat; `before_step(t, z_t)` may edit
// the working latent before each denoising step (and once more at t = 0).

struct TransitionRecord {
    std::size_t t = 0;
    Tensor z_t;     // input to the step (after any edit)
    Tensor mean;    // mean of p(z_{t-1} | z_t)
    Tensor z_prev;  // sampled z_{t-1}
    double sigma = 0.0;
    double log_prob = 0.0;
};

struct SampleOptions {
    bool stochastic = true;
    bool record = false;
};

struct SampleResult {
    Tensor z0;
    std::vector<TransitionRecord> records;
};

using StepHook = std::function<void(std::size_t t, Tensor& z)>;

template <class Predictor>
SampleResult ancestral_sample(const Predictor& predict, const DenoiseSchedule& sched, const Shape& latent_dims, Rng& rng,
                              const SampleOptions& opts = {}, const StepHook& before_step = {},
                              std::optional<Tensor> z_init = std::nullopt) {
    SampleResult res;
    Tensor z = z_init ? *z_init : rng.normal_tensor(latent_dims);
    for (std::size_t t = sched.steps(); t >= 1; --t) {
        if (before_step) before_step(t, z);
        Tensor eps_hat = predict(static_cast<const Tensor&>(z), t);
        Tensor mean = sched.transition_mean(z, t, eps_hat);
        Tensor next = mean;
        const double sigma = sched.sigma(t);
        if (opts.stochastic) {
            for (auto& v : next.data()) v += static_cast<float>(sigma * rng.normal());
        }
        if (opts.record) {
            TransitionRecord rec;
            rec.t = t;
            rec.z_t = z;
            rec.mean = mean;
            rec.z_prev = next;
            rec.sigma = sigma;
            rec.log_prob = gaussian_log_density(next, mean, sigma);
            res.records.push_back(std::move(rec));
        }
        z = std::move(next);
    }
    if (before_step) before_step(0, z);
    require_finite(z, "sample");
    res.z0 = std::move(z);
    return res;
}

// Noise-prediction objective for one draw: ||eps - eps_hat(z_t, t)||^2.
struct LossSample {
    std::size_t t = 0;
    Tensor eps;
    Tensor z_t;
    Tensor eps_hat;
    double loss = 0.0;
};

template <class Predictor>
LossSample diffusion_loss(const Predictor& predict, const Tensor& z0, const DenoiseSchedule& sched, Rng& rng) {
    LossSample s;
    s.t = 1 + rng.below(sched.steps());
    s.eps = rng.normal_tensor(z0.dims());
    s.z_t = sched.q_sample(z0, s.t, s.eps);
    s.eps_hat = predict(static_cast<const Tensor&>(s.z_t), s.t);
    require_same_shape(s.eps, s.eps_hat, "diffusion_loss");
    for (std::size_t i = 0; i < s.eps.size(); ++i) {
        const double d = static_cast<double>(s.eps[i]) - s.eps_hat[i];
        s.loss += d * d;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Conditioning.

inline std::vector<std::size_t> text_ids(const std::string& tag, std::size_t vocab, std::size_t max_len) {
    std::vector<std::size_t> ids;
    std::string word;
    auto flush = [&] {
        if (!word.empty() && ids.size() < max_len) ids.push_back(fnv1a(word) % vocab);
        word.clear();
    };
    for (char c : tag) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else {
            flush();
        }
    }
    flush();
    if (ids.empty()) ids.push_back(0);
    return ids;
}

// Text ids plus the reference latent padded over the window's latent time:
// frame slot 0 carries the reference, all other slots are zero.
struct ConditionTokens {
    std::vector<std::size_t> text;
    Tensor ref_padded;  // [T', h, w, C]
};

inline Tensor pad_reference(const LatentVideo& ref_latent, std::size_t frames) {
    if (ref_latent.frames() != 1) throw ShapeError("pad_reference: reference must be a single latent frame");
    return pad(ref_latent.data, 0, 0, frames - 1, 0.0f);
}

inline void sincos_embed(double pos, std::size_t dim, float* out, double max_period = 10000.0) {
    const std::size_t half = dim / 2;
    for (std::size_t i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(max_period) * static_cast<double>(i) / static_cast<double>(half));
        out[i] = static_cast<float>(std::sin(pos * freq));
        out[half + i] = static_cast<float>(std::cos(pos * freq));
    }
}

// Fixed (frame | row | col) sinusoidal embedding for visual tokens.
inline Tensor visual_positions(std::size_t frames, std::size_t hp, std::size_t wp, std::size_t width) {
    Tensor pe({frames * hp * wp, width});
    const std::size_t q = width / 4;
    for (std::size_t f = 0; f < frames; ++f)
        for (std::size_t y = 0; y < hp; ++y)
            for (std::size_t x = 0; x < wp; ++x) {
                float* row = pe.row((f * hp + y) * wp + x).data();
                sincos_embed(static_cast<double>(f), 2 * q, row, 1000.0);
                sincos_embed(static_cast<double>(y), q, row + 2 * q, 100.0);
                sincos_embed(static_cast<double>(x), q, row + 3 * q, 100.0);
            }
    return pe;
}

inline Tensor text_positions(std::size_t n, std::size_t width) {
    Tensor pe({n, width});
    for (std::size_t i = 0; i < n; ++i) sincos_embed(static_cast<double>(i), width, pe.row(i).data(), 100.0);
    return pe;
}

// ---------------------------------------------------------------------------
// DiT stack.

struct DitBackbone {
    std::size_t width = 64, channels = 8, n_blocks = 8, t_steps = 50;
    nn::Linear in_proj;   // [z_t | c_i] -> D
    nn::Linear t_proj;    // timestep sincos -> D
    nn::Param text_embed;  // [vocab, D]
    std::vector<nn::Block> blocks;
    nn::LayerNorm ln_f;
    nn::Linear out_proj;  // D -> C

    struct Cache {
        std::size_t n_text = 0;
        Tensor in_x;   // [n_vis, 2C]
        Tensor t_in;   // [1, D]
        std::vector<std::size_t> text;
        std::vector<nn::Block::Cache> blocks;
        Tensor final_vis;  // [n_vis, D]
        Tensor ln_out;
    };

    DitBackbone() = default;

    DitBackbone(const RunConfig& cfg, Rng& rng)
        : width(cfg.width), channels(cfg.latent_channels), n_blocks(cfg.n_blocks), t_steps(cfg.t_steps) {
        if (n_blocks % 2 != 0) throw std::invalid_argument("backbone: n_blocks must be even");
        in_proj = nn::Linear("backbone/in", 2 * channels, width, rng);
        t_proj = nn::Linear("backbone/t", width, width, rng, 0.5f);
        text_embed = nn::Param("backbone/text", rng.normal_tensor({cfg.text_vocab, width}, 0.5f));
        for (std::size_t i = 0; i < n_blocks; ++i)
            blocks.emplace_back("backbone/block" + std::to_string(i), width, cfg.heads, cfg.ffn_mult, rng);
        ln_f = nn::LayerNorm("backbone/ln_f", width);
        out_proj = nn::Linear("backbone/out", width, channels, rng);
        out_proj.zero_init();
    }

    static bool injected_layer(std::size_t n) { return n >= 2 && n % 2 == 0; }  // 1-based

    Tensor embed_text(const std::vector<std::size_t>& ids) const {
        Tensor x = text_positions(ids.size(), width);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] >= text_embed.value.dim(0)) throw ShapeError("text id out of vocabulary");
            auto src = text_embed.value.row(ids[i]);
            auto dst = x.row(i);
            for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
        }
        return x;
    }

    Tensor timestep_input(std::size_t t) const {
        Tensor e({1, width});
        sincos_embed(static_cast<double>(t) * 1000.0 / static_cast<double>(t_steps), width, e.ptr());
        return e;
    }

    // z_t, cond.ref_padded: [T', h, w, C]; injection: [n_vis, D] or null.
    Tensor forward(const Tensor& z_t, std::size_t t, const ConditionTokens& cond, const Tensor* injection, float gamma,
                   Cache* cache = nullptr) const {
        require_same_shape(z_t, cond.ref_padded, "backbone: latent vs padded reference");
        if (z_t.ndim() != 4 || z_t.dim(3) != channels) throw ShapeError("backbone: latent must be [T,h,w,C]");
        const std::size_t frames = z_t.dim(0), hp = z_t.dim(1), wp = z_t.dim(2);
        const std::size_t n_vis = frames * hp * wp, n_text = cond.text.size();
        if (injection && (injection->rows() != n_vis || injection->cols() != width)) {
            throw ShapeError("backbone: injection shape " + shape_str(injection->dims()) + " does not match visual tokens");
        }
        Tensor in_x = concat({z_t.reshaped({n_vis, channels}), cond.ref_padded.reshaped({n_vis, channels})}, 1);
        Tensor vis = in_proj.forward(in_x);
        Tensor t_in = timestep_input(t);
        Tensor temb = t_proj.forward(t_in);
        Tensor pos = visual_positions(frames, hp, wp, width);
        for (std::size_t r = 0; r < n_vis; ++r) {
            auto row = vis.row(r);
            auto pr = pos.row(r);
            for (std::size_t j = 0; j < width; ++j) row[j] += pr[j] + temb[j];
        }
        Tensor x = concat({embed_text(cond.text), vis}, 0);
        if (cache) {
            cache->n_text = n_text;
            cache->in_x = std::move(in_x);
            cache->t_in = std::move(t_in);
            cache->text = cond.text;
            cache->blocks.assign(n_blocks, {});
        }
        const bool inject = injection && gamma != 0.0f;
        for (std::size_t n = 1; n <= n_blocks; ++n) {
            const Tensor* add = inject && injected_layer(n) ? injection : nullptr;
            x = blocks[n - 1].forward(x, add, n_text, gamma, cache ? &cache->blocks[n - 1] : nullptr);
        }
        Tensor final_vis = slice(x, 0, n_text, n_vis);
        Tensor ln_out = ln_f.forward(final_vis);
        Tensor eps = out_proj.forward(ln_out);
        if (cache) {
            cache->final_vis = std::move(final_vis);
            cache->ln_out = std::move(ln_out);
        }
        require_finite(eps, "backbone");
        return eps.reshaped(z_t.dims());
    }

    // Backprop d(loss)/d(eps_hat). Parameter gradients accumulate only when
    // `param_grads`; the gradient w.r.t. the (unscaled) injection is added to
    // *d_injection when given.
    void backward(const Cache& c, const Tensor& d_eps, bool param_grads, float gamma, Tensor* d_injection) {
        const std::size_t n_vis = c.final_vis.rows();
        Tensor d_ln = out_proj.backward(c.ln_out, d_eps.reshaped({n_vis, channels}), param_grads);
        Tensor d_vis = ln_f.backward(c.final_vis, d_ln, param_grads);
        Tensor dx({c.n_text + n_vis, width});
        std::copy(d_vis.ptr(), d_vis.ptr() + d_vis.size(), dx.ptr() + c.n_text * width);
        for (std::size_t n = n_blocks; n >= 1; --n) {
            const bool inj = d_injection && gamma != 0.0f && injected_layer(n);
            Tensor dx1;
            dx = blocks[n - 1].backward(c.blocks[n - 1], dx, param_grads, inj ? &dx1 : nullptr);
            if (inj) {
                for (std::size_t r = 0; r < n_vis; ++r)
                    for (std::size_t j = 0; j < width; ++j) d_injection->at(r, j) += gamma * dx1.at(c.n_text + r, j);
            }
        }
        if (!param_grads) return;
        Tensor d_in = slice(dx, 0, c.n_text, n_vis);
        in_proj.backward(c.in_x, d_in, true, false);
        Tensor d_temb({1, width});
        for (std::size_t r = 0; r < n_vis; ++r)
            for (std::size_t j = 0; j < width; ++j) d_temb[j] += d_in.at(r, j);
        t_proj.backward(c.t_in, d_temb, true, false);
        for (std::size_t i = 0; i < c.n_text; ++i) {
            auto g = text_embed.grad.row(c.text[i]);
            for (std::size_t j = 0; j < width; ++j) g[j] += dx.at(i, j);
        }
    }

    nn::ParamList params() {
        nn::ParamList ps;
        in_proj.collect(ps);
        t_proj.collect(ps);
        ps.push_back(&text_embed);
        for (auto& b : blocks) b.collect(ps);
        ln_f.collect(ps);
        out_proj.collect(ps);
        return ps;
    }
};

}  // namespace longanim
