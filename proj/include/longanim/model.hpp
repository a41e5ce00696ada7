#pragma once

// Everything a run needs in one place: codec, denoiser, sketch branch,
// the frozen memory summarizer and the fusion stack. Also checkpoint I/O,
// the staged training loops and windowed long-sequence generation.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "backbone.hpp"
#include "config.hpp"
#include "dglm.hpp"
#include "fusion.hpp"
#include "reward.hpp"
#include "sketch_dit.hpp"

namespace longanim {

inline const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names = {"base", "sketchdit", "dglm", "ccr"};
    return names;
}

inline std::size_t stage_index(const std::string& stage) {
    const auto& n = stage_names();
    const auto it = std::find(n.begin(), n.end(), stage);
    if (it == n.end()) throw std::invalid_argument("unknown stage '" + stage + "'");
    return static_cast<std::size_t>(it - n.begin());
}

inline void clamp01(Tensor& t) {
    for (auto& v : t.data()) v = std::clamp(v, 0.0f, 1.0f);
}

struct Model {
    RunConfig cfg;
    PatchCodec codec;
    DenoiseSchedule sched;
    DitBackbone backbone;
    ControlBranch branch;
    FrameFeatureExtractor fx;
    Summarizer summarizer;
    FusionStack fusion;
    std::vector<std::string> stages;  // completed, in order

    Model() = default;

    explicit Model(const RunConfig& c) : cfg(c) {
        cfg.validate();
        codec = PatchCodec::from_config(cfg);
        sched = DenoiseSchedule::from_config(cfg);
        Rng net = Rng(cfg.seed).fork(1);
        backbone = DitBackbone(cfg, net);
        branch = ControlBranch(backbone, cfg.l_blocks);
        Rng mem = Rng(cfg.seed).fork(2);
        fx = FrameFeatureExtractor(cfg.patch, cfg.frame_feature_dim, mem);
        summarizer = Summarizer::from_config(cfg, mem);
        Rng fz = Rng(cfg.seed).fork(3);
        fusion = FusionStack(cfg.memory_layers, cfg.kv_dim, cfg.width, fz);
    }

    bool has_stage(const std::string& s) const { return std::find(stages.begin(), stages.end(), s) != stages.end(); }

    RewardModel reward() const { return {&fx, &summarizer, cfg.theta_seg}; }

    std::vector<std::pair<std::string, Tensor*>> named_tensors() {
        std::vector<std::pair<std::string, Tensor*>> out;
        for (auto* p : backbone.params()) out.emplace_back(p->name, &p->value);
        for (auto* p : branch.params()) out.emplace_back(p->name, &p->value);
        for (auto* p : fusion.params()) out.emplace_back(p->name, &p->value);
        out.emplace_back("codec/enc", &codec.enc);
        out.emplace_back("dglm/features.proj", &fx.proj);
        out.emplace_back("dglm/features.bias", &fx.bias);
        for (std::size_t l = 0; l < summarizer.layers(); ++l) {
            out.emplace_back("dglm/summarizer.a" + std::to_string(l + 1), &summarizer.a[l]);
            out.emplace_back("dglm/summarizer.b" + std::to_string(l + 1), &summarizer.b[l]);
        }
        for (std::size_t m = 0; m < summarizer.count; ++m) {
            out.emplace_back("dglm/summarizer.k" + std::to_string(m + 1), &summarizer.k[m]);
            out.emplace_back("dglm/summarizer.v" + std::to_string(m + 1), &summarizer.v[m]);
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Checkpoints: a text header (format line, config hash, completed stages,
// the config echo) followed by `tensor <name>` lines, each followed by one
// LANM blob.

inline constexpr const char* kCheckpointMagic = "LONGANIM-CHECKPOINT 1";

inline void save_checkpoint(Model& m, std::ostream& os) {
    std::string stages;
    for (const auto& s : m.stages) stages += (stages.empty() ? "" : ",") + s;
    const std::string text = m.cfg.to_text();
    const auto tensors = m.named_tensors();
    os << kCheckpointMagic << "\n";
    os << "config_hash " << m.cfg.hash_hex() << "\n";
    os << "stages " << (stages.empty() ? "-" : stages) << "\n";
    os << "config_bytes " << text.size() << "\n" << text;
    os << "tensors " << tensors.size() << "\n";
    for (const auto& [name, t] : tensors) {
        os << "tensor " << name << "\n";
        write_blob(os, *t);
    }
    if (!os) throw FormatError("checkpoint: write failed");
}

inline void save_checkpoint(Model& m, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    save_checkpoint(m, os);
}

inline Model load_checkpoint(std::istream& is) {
    std::string line;
    auto expect = [&](const std::string& key) {
        if (!std::getline(is, line) || line.rfind(key + " ", 0) != 0)
            throw FormatError("checkpoint: expected '" + key + "' line");
        return line.substr(key.size() + 1);
    };
    if (!std::getline(is, line) || line != kCheckpointMagic) throw FormatError("checkpoint: bad magic line");
    const std::string hash = expect("config_hash");
    const std::string stages = expect("stages");
    std::size_t bytes = 0;
    try {
        bytes = std::stoul(expect("config_bytes"));
    } catch (const std::logic_error&) {
        throw FormatError("checkpoint: bad config length");
    }
    std::string text(bytes, '\0');
    if (!is.read(text.data(), static_cast<std::streamsize>(bytes))) throw FormatError("checkpoint: truncated config");
    RunConfig cfg;
    try {
        cfg = RunConfig::parse_string(text);
    } catch (const ConfigError& e) {
        throw FormatError(std::string("checkpoint: embedded config: ") + e.what());
    }
    if (cfg.hash_hex() != hash) throw FormatError("checkpoint: config hash mismatch");
    Model m(cfg);
    if (stages != "-") {
        std::stringstream ss(stages);
        std::string s;
        while (std::getline(ss, s, ',')) {
            stage_index(s);
            m.stages.push_back(s);
        }
    }
    std::map<std::string, Tensor*> slots;
    for (auto& [name, t] : m.named_tensors()) slots[name] = t;
    const std::size_t count = std::stoul(expect("tensors"));
    if (count != slots.size()) throw FormatError("checkpoint: tensor count " + std::to_string(count) + " does not match model");
    for (std::size_t i = 0; i < count; ++i) {
        const std::string name = expect("tensor");
        auto it = slots.find(name);
        if (it == slots.end()) throw FormatError("checkpoint: unknown tensor '" + name + "'");
        Tensor t = read_blob(is);
        if (t.dims() != it->second->dims()) throw FormatError("checkpoint: tensor '" + name + "' has the wrong shape");
        *it->second = std::move(t);
        slots.erase(it);
    }
    return m;
}

inline Model load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open checkpoint " + path.string());
    return load_checkpoint(is);
}

// ---------------------------------------------------------------------------
// Training data

struct TrainScene {
    Tensor frames;          // [T, H, W, 3] in [0,1]
    Tensor latents;         // [T, h, w, C]
    Tensor sketch_latents;  // [T, h, w, C]
    std::vector<std::size_t> text;
    std::size_t length() const { return frames.dim(0); }
};

inline TrainScene prepare_scene(const Model& m, const media::FrameSequence& frames, const media::SketchSequence& sketches,
                                const std::string& tag) {
    if (frames.size() != sketches.size()) throw ShapeError("scene: frame and sketch counts differ");
    TrainScene s;
    s.frames = frames_to_tensor(frames);
    s.latents = m.codec.encode(s.frames).data;
    s.sketch_latents = m.codec.encode(sketches_to_tensor(sketches)).data;
    s.text = text_ids(tag, m.cfg.text_vocab, m.cfg.text_len);
    return s;
}

struct WindowInputs {
    Tensor z0;
    ConditionTokens cond;
    ControlInput ctrl;
    Tensor truth;  // pixel frames of the window
    std::size_t start = 0;
};

inline WindowInputs window_inputs(const TrainScene& s, std::size_t start, std::size_t ref, std::size_t frames) {
    WindowInputs w;
    w.start = start;
    w.z0 = slice(s.latents, 0, start, frames);
    LatentVideo rl;
    rl.data = slice(s.latents, 0, ref, 1);
    w.cond = {s.text, pad_reference(rl, frames)};
    w.ctrl = build_control_input(slice(s.sketch_latents, 0, start, frames), w.cond.ref_padded, s.text);
    w.truth = slice(s.frames, 0, start, frames);
    return w;
}

// Ground-truth history [start - max_history, start) summarized into a cache.
inline MemoryCache history_cache(const Model& m, const TrainScene& s, std::size_t start) {
    const std::size_t lo = start > m.cfg.history_max ? start - m.cfg.history_max : 0;
    MemoryBank bank(m.fx, m.summarizer, m.cfg.theta_seg, m.cfg.local_segments);
    bank.append(slice(s.frames, 0, lo, start - lo));
    return bank.cache();
}

struct StageLog {
    struct RewardRow {
        std::size_t step = 0;
        double reward = 0.0, baseline = 0.0;
    };
    std::vector<double> loss;
    std::vector<RewardRow> rewards;
};

using StepCallback = std::function<void(std::size_t step, double value)>;

namespace detail {

inline Tensor eps_grad(const LossSample& s) {
    // d/d eps_hat of the per-element mean squared error
    Tensor g(s.eps_hat.dims());
    const float k = 2.0f / static_cast<float>(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = k * (s.eps_hat[i] - s.eps[i]);
    return g;
}

struct WindowDraw {
    std::size_t scene = 0, start = 0, ref = 0;
};

inline WindowDraw draw_window(const std::vector<TrainScene>& data, std::size_t frames, std::size_t min_start,
                              std::size_t w_ref, Rng& rng) {
    WindowDraw d;
    d.scene = rng.below(data.size());
    const std::size_t len = data[d.scene].length();
    if (len < frames + min_start) throw ContractError("training: scene shorter than one window plus history");
    d.start = min_start + rng.below(len - frames - min_start + 1);
    d.ref = sample_reference_frame(len, d.start, frames, w_ref, rng);
    return d;
}

inline void check_stage_order(const Model& m, const std::string& stage) {
    const std::size_t idx = stage_index(stage);
    const auto& names = stage_names();
    const std::vector<std::string> need(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(idx));
    if (m.stages != need) {
        std::string have;
        for (const auto& s : m.stages) have += (have.empty() ? "" : ",") + s;
        throw ContractError("stage '" + stage + "' needs exactly the earlier stages completed (have: " +
                            (have.empty() ? "none" : have) + ")");
    }
}

}  // namespace detail

// Denoiser pretraining on frame windows, conditioned on text and reference.
inline StageLog train_base(Model& m, const std::vector<TrainScene>& data, std::size_t steps, Rng& rng,
                           const StepCallback& cb = {}) {
    StageLog log;
    auto ps = m.backbone.params();
    nn::Adam opt(ps, m.cfg.lr);
    for (std::size_t step = 0; step < steps; ++step) {
        const auto d = detail::draw_window(data, m.cfg.train_frames, 0, m.cfg.w_ref, rng);
        const WindowInputs w = window_inputs(data[d.scene], d.start, d.ref, m.cfg.train_frames);
        DitBackbone::Cache c;
        auto pred = [&](const Tensor& z, std::size_t t) { return m.backbone.forward(z, t, w.cond, nullptr, 0.0f, &c); };
        const LossSample s = diffusion_loss(pred, w.z0, m.sched, rng);
        nn::zero_grads(ps);
        m.backbone.backward(c, detail::eps_grad(s), true, 0.0f, nullptr);
        opt.step();
        log.loss.push_back(s.loss / static_cast<double>(s.eps.size()));
        if (cb) cb(step, log.loss.back());
    }
    return log;
}

// Control branch only; the backbone stays bit-identical.
inline StageLog train_sketchdit(Model& m, const std::vector<TrainScene>& data, std::size_t steps, Rng& rng,
                                const StepCallback& cb = {}) {
    StageLog log;
    m.branch = ControlBranch(m.backbone, m.cfg.l_blocks);
    auto ps = m.branch.params();
    nn::Adam opt(ps, m.cfg.lr);
    const float gamma = static_cast<float>(m.cfg.gamma);
    for (std::size_t step = 0; step < steps; ++step) {
        const auto d = detail::draw_window(data, m.cfg.train_frames, 0, m.cfg.w_ref, rng);
        const WindowInputs w = window_inputs(data[d.scene], d.start, d.ref, m.cfg.train_frames);
        ControlBranch::Cache bc;
        const HybridFeature h = m.branch.forward(m.backbone, w.ctrl, &bc);
        DitBackbone::Cache c;
        auto pred = [&](const Tensor& z, std::size_t t) { return m.backbone.forward(z, t, w.cond, &h.tokens, gamma, &c); };
        const LossSample s = diffusion_loss(pred, w.z0, m.sched, rng);
        nn::zero_grads(ps);
        Tensor d_h(h.tokens.dims());
        m.backbone.backward(c, detail::eps_grad(s), false, gamma, &d_h);
        m.branch.backward(bc, d_h);
        opt.step();
        log.loss.push_back(s.loss / static_cast<double>(s.eps.size()));
        if (cb) cb(step, log.loss.back());
    }
    return log;
}

// Fusion stack only, on windows that have ground-truth history behind them.
inline StageLog train_dglm(Model& m, const std::vector<TrainScene>& data, std::size_t steps, Rng& rng,
                           const StepCallback& cb = {}) {
    StageLog log;
    auto ps = m.fusion.params();
    nn::Adam opt(ps, m.cfg.lr);
    const float gamma = static_cast<float>(m.cfg.gamma);
    for (std::size_t step = 0; step < steps; ++step) {
        const auto d = detail::draw_window(data, m.cfg.train_frames, 1, m.cfg.w_ref, rng);
        const WindowInputs w = window_inputs(data[d.scene], d.start, d.ref, m.cfg.train_frames);
        const MemoryCache mc = history_cache(m, data[d.scene], d.start);
        const HybridFeature h0 = m.branch.forward(m.backbone, w.ctrl);
        FusionStack::Cache fc;
        const HybridFeature h = m.fusion.fuse(h0, mc, &fc);
        DitBackbone::Cache c;
        auto pred = [&](const Tensor& z, std::size_t t) { return m.backbone.forward(z, t, w.cond, &h.tokens, gamma, &c); };
        const LossSample s = diffusion_loss(pred, w.z0, m.sched, rng);
        nn::zero_grads(ps);
        Tensor d_h(h.tokens.dims());
        m.backbone.backward(c, detail::eps_grad(s), false, gamma, &d_h);
        m.fusion.backward(fc, d_h);
        opt.step();
        log.loss.push_back(s.loss / static_cast<double>(s.eps.size()));
        if (cb) cb(step, log.loss.back());
    }
    return log;
}

// Reward fine-tuning of the branch and fusion stack. Each step draws a
// window, samples `ccr_samples` stochastic trajectories, scores the decoded
// clips against the ground truth and ascends the score-function estimate.
inline StageLog train_ccr(Model& m, const std::vector<TrainScene>& data, std::size_t steps, Rng& rng,
                          const StepCallback& cb = {}) {
    StageLog log;
    nn::ParamList ps = m.branch.params();
    for (auto* p : m.fusion.params()) ps.push_back(p);
    const float gamma = static_cast<float>(m.cfg.gamma);
    const RewardModel reward = m.reward();
    MovingBaseline baseline(m.cfg.baseline_window);
    for (std::size_t step = 0; step < steps; ++step) {
        const auto d = detail::draw_window(data, m.cfg.train_frames, 0, m.cfg.w_ref, rng);
        const WindowInputs w = window_inputs(data[d.scene], d.start, d.ref, m.cfg.train_frames);
        ControlBranch::Cache bc;
        const HybridFeature h0 = m.branch.forward(m.backbone, w.ctrl, &bc);
        FusionStack::Cache fc;
        const bool memory = d.start > 0;
        const HybridFeature h = memory ? m.fusion.fuse(h0, history_cache(m, data[d.scene], d.start), &fc) : h0;
        auto pred = [&](const Tensor& z, std::size_t t) { return m.backbone.forward(z, t, w.cond, &h.tokens, gamma); };

        const std::size_t n = m.cfg.ccr_samples;
        std::vector<SampleResult> runs;
        std::vector<double> r;
        for (std::size_t i = 0; i < n; ++i) {
            runs.push_back(ancestral_sample(pred, m.sched, w.z0.dims(), rng, {true, true}));
            Tensor clip = m.codec.decode(runs.back().z0);
            clamp01(clip);
            r.push_back(reward(clip, w.truth));
        }
        const double mean_r = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(n);
        const double b = baseline.empty() ? mean_r : baseline.value();
        for (double v : r) baseline.push(v);
        log.rewards.push_back({step, mean_r, b});
        if (cb) cb(step, mean_r);

        nn::zero_grads(ps);
        Tensor d_h(h.tokens.dims());
        for (std::size_t i = 0; i < n; ++i) {
            const double wi = (r[i] - b) / static_cast<double>(n);
            if (wi == 0.0) continue;
            for (const auto& rec : runs[i].records) {
                DitBackbone::Cache c;
                m.backbone.forward(rec.z_t, rec.t, w.cond, &h.tokens, gamma, &c);
                // d log N(z_prev; mean, s^2) / d eps_hat, mean = (z_t - e eps_hat) k
                const double k = -m.sched.eps_coef(rec.t) * m.sched.mean_scale(rec.t) / (rec.sigma * rec.sigma);
                Tensor g(rec.z_t.dims());
                for (std::size_t j = 0; j < g.size(); ++j)
                    g[j] = static_cast<float>(wi * k * (static_cast<double>(rec.z_prev[j]) - rec.mean[j]));
                m.backbone.backward(c, g, false, gamma, &d_h);
            }
        }
        if (memory) d_h = m.fusion.backward(fc, d_h);
        m.branch.backward(bc, d_h);
        nn::clip_grads(ps, m.cfg.ccr_clip);
        for (auto* p : ps)
            for (std::size_t j = 0; j < p->value.size(); ++j) p->value[j] += static_cast<float>(m.cfg.ccr_lr * p->grad[j]);
    }
    return log;
}

inline std::size_t stage_steps(const RunConfig& cfg, const std::string& stage) {
    switch (stage_index(stage)) {
        case 0: return cfg.base_steps;
        case 1: return cfg.sketch_steps;
        case 2: return cfg.dglm_steps;
        default: return cfg.ccr_steps;
    }
}

// Runs one stage after checking the order; the stage's rng stream is fixed
// by the config seed.
inline StageLog run_stage(Model& m, const std::string& stage, const std::vector<TrainScene>& data,
                          const StepCallback& cb = {}) {
    detail::check_stage_order(m, stage);
    if (data.empty()) throw ContractError("training: no scenes");
    const std::size_t idx = stage_index(stage);
    Rng rng = Rng(m.cfg.seed).fork(100 + idx);
    const std::size_t steps = stage_steps(m.cfg, stage);
    StageLog log;
    switch (idx) {
        case 0: log = train_base(m, data, steps, rng, cb); break;
        case 1: log = train_sketchdit(m, data, steps, rng, cb); break;
        case 2: log = train_dglm(m, data, steps, rng, cb); break;
        default: log = train_ccr(m, data, steps, rng, cb); break;
    }
    m.stages.push_back(stage);
    return log;
}

// ---------------------------------------------------------------------------
// Long generation

struct GenerateOptions {
    bool use_memory = true;
    bool fuse_overlap = true;
    std::optional<std::size_t> t_start;  // overrides the config
    bool stochastic = true;
};

struct GenerateResult {
    Tensor video;  // [total, H, W, 3] in [0,1]
    SegmentPlan plan;
    std::vector<std::size_t> history_at_segment;  // memory frames seen by each segment
    std::optional<MemoryCache> last_cache;        // cache used by the final segment
};

// sketch_latents: [N, h, w, C] with N >= total; ref_latent: [1, h, w, C].
inline GenerateResult generate_long(const Model& m, const Tensor& sketch_latents, const Tensor& ref_latent,
                                    const std::vector<std::size_t>& text, std::size_t total, Rng& rng,
                                    const GenerateOptions& opts = {}) {
    if (sketch_latents.ndim() != 4 || sketch_latents.dim(0) < total) {
        throw ContractError("generate: need at least " + std::to_string(total) + " sketch frames, got " +
                            std::to_string(sketch_latents.ndim() == 4 ? sketch_latents.dim(0) : 0));
    }
    const RunConfig& cfg = m.cfg;
    GenerateResult res;
    res.plan = plan_segments(total, cfg.segment_frames, cfg.overlap, opts.t_start.value_or(cfg.t_start), cfg.t_steps);
    const SegmentPlan& plan = res.plan;
    const std::size_t f = plan.frames, n_sk = sketch_latents.dim(0);
    const std::size_t hp = sketch_latents.dim(1), wp = sketch_latents.dim(2), ch = sketch_latents.dim(3);
    const std::size_t per = hp * wp * ch;
    LatentVideo rl;
    rl.data = ref_latent;
    const ConditionTokens cond{text, pad_reference(rl, f)};
    const float gamma = static_cast<float>(cfg.gamma);

    MemoryBank bank(m.fx, m.summarizer, cfg.theta_seg, cfg.local_segments);
    const std::size_t px = cfg.image_size * cfg.image_size * 3;
    res.video = Tensor({total, cfg.image_size, cfg.image_size, 3});
    std::vector<Tensor> prev_traj, cur_traj;

    for (std::size_t i = 0; i < plan.segments(); ++i) {
        const std::size_t s = plan.starts[i];
        // the final window may run past the sketches; hold the last one
        Tensor sk({f, hp, wp, ch});
        for (std::size_t k = 0; k < f; ++k) {
            const std::size_t src = std::min(s + k, n_sk - 1);
            std::copy(sketch_latents.ptr() + src * per, sketch_latents.ptr() + (src + 1) * per, sk.ptr() + k * per);
        }
        HybridFeature h = m.branch.forward(m.backbone, build_control_input(sk, cond.ref_padded, text), nullptr, i);
        res.history_at_segment.push_back(bank.history_frames());
        if (opts.use_memory && !bank.empty()) {
            res.last_cache = bank.cache();
            h = m.fusion.fuse(h, *res.last_cache);
        } else {
            res.last_cache.reset();
        }
        auto pred = [&](const Tensor& z, std::size_t t) { return m.backbone.forward(z, t, cond, &h.tokens, gamma); };
        cur_traj.assign(plan.last(i) ? 0 : cfg.t_steps + 1, Tensor());
        StepHook hook = [&](std::size_t t, Tensor& z) {
            if (i > 0 && opts.fuse_overlap) fuse_overlap_step(prev_traj[t], z, t, plan);
            if (!plan.last(i)) cur_traj[t] = slice(z, 0, f - plan.overlap, plan.overlap);
        };
        SampleOptions so;
        so.stochastic = opts.stochastic;
        const SampleResult out = ancestral_sample(pred, m.sched, {f, hp, wp, ch}, rng, so, hook);
        Tensor clip = m.codec.decode(out.z0);
        clamp01(clip);
        const std::size_t keep = plan.commit_end(i) - s;
        Tensor committed = slice(clip, 0, 0, keep);
        std::copy(committed.ptr(), committed.ptr() + committed.size(), res.video.ptr() + s * px);
        bank.append(committed);
        prev_traj.swap(cur_traj);
    }
    return res;
}

inline GenerateResult generate_long(const Model& m, const media::SketchSequence& sketches, const media::Image& ref,
                                    const std::string& tag, std::size_t total, Rng& rng,
                                    const GenerateOptions& opts = {}) {
    if (sketches.size() == 0) throw ContractError("generate: no sketches");
    if (ref.height != m.cfg.image_size || ref.width != m.cfg.image_size ||
        sketches.frames[0].height != m.cfg.image_size || sketches.frames[0].width != m.cfg.image_size) {
        throw ShapeError("generate: inputs must be " + std::to_string(m.cfg.image_size) + "x" +
                         std::to_string(m.cfg.image_size));
    }
    const Tensor sk = m.codec.encode(sketches_to_tensor(sketches)).data;
    const Tensor r = media::image_to_tensor(ref).reshaped({1, ref.height, ref.width, 3});
    return generate_long(m, sk, m.codec.encode(r).data, text_ids(tag, m.cfg.text_vocab, m.cfg.text_len), total, rng,
                         opts);
}

}  // namespace longanim
