#pragma once

// Work-directory operations behind the command-line tool: dataset
// generation, staged training with checkpoints, long colorization and
// evaluation. Every artifact written here carries the config hash.
//
// <workdir>/config.txt                  effective config (written by gen-data)
// <workdir>/data/manifest.txt
// <workdir>/data/scene_NNN/{frames,sketches}/frame_%05d.ppm, scene.txt, tag.txt
// <workdir>/checkpoints/<stage>.ckpt
// <workdir>/logs/<stage>_loss.csv, logs/ccr_reward.csv

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "metrics.hpp"
#include "model.hpp"

namespace longanim::pipeline {

namespace fs = std::filesystem;

inline std::string provenance(const RunConfig& cfg) { return "longanim config_hash=" + cfg.hash_hex(); }

inline void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os || !(os << text)) throw media::IngestError("cannot write " + path.string());
}

inline std::string read_text(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw media::IngestError("cannot read " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Value of a `key = value` or `key value` line, empty when absent.
inline std::string lookup(const std::string& text, const std::string& key) {
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.rfind(key, 0) != 0) continue;
        std::string rest = line.substr(key.size());
        const auto b = rest.find_first_not_of(" =");
        return b == std::string::npos ? "" : rest.substr(b);
    }
    return "";
}

inline fs::path config_path(const fs::path& workdir) { return workdir / "config.txt"; }
inline fs::path checkpoint_path(const fs::path& workdir, const std::string& stage) {
    return workdir / "checkpoints" / (stage + ".ckpt");
}
inline fs::path scene_dir(const fs::path& workdir, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "scene_%03zu", i);
    return workdir / "data" / buf;
}

inline std::string config_file_text(const RunConfig& cfg) { return "# config_hash = " + cfg.hash_hex() + "\n" + cfg.to_text(); }

inline media::SceneSpec scene_spec(const RunConfig& cfg, std::size_t i) {
    return media::random_scene(Rng(cfg.seed).fork(1000 + i).next_u64(), cfg.scene_frames, cfg.image_size,
                               cfg.max_objects);
}

// ---------------------------------------------------------------------------

// Held-out scenes for colorization and evaluation; disjoint rng streams
// from the training scenes.
inline media::SceneSpec bench_spec(const RunConfig& cfg, std::size_t i, std::size_t frames) {
    return media::random_scene(Rng(cfg.seed).fork(5000 + i).next_u64(), frames, cfg.image_size, cfg.max_objects);
}

inline fs::path bench_dir(const fs::path& workdir, std::size_t i) {
    return workdir / "bench" / scene_dir(workdir, i).filename();
}

inline void write_scene(const RunConfig& cfg, const media::SceneSpec& spec, const fs::path& dir) {
    const std::string tag = provenance(cfg);
    const media::SceneRender r = media::generate_scene(spec);
    media::write_frame_dir(dir / "frames", r.frames, tag);
    media::write_sketch_dir(dir / "sketches", r.sketches, tag);
    write_text(dir / "scene.txt", "# config_hash = " + cfg.hash_hex() + "\n" + media::format_scene_config(spec));
    write_text(dir / "tag.txt", r.tag + "\n");
}

// bench_frames = 0 means scene_frames.
inline void gen_data(const RunConfig& cfg, const fs::path& workdir, std::ostream* log = nullptr,
                     std::size_t bench = 1, std::size_t bench_frames = 0) {
    cfg.validate();
    for (std::size_t i = 0; i < cfg.scenes; ++i) write_scene(cfg, scene_spec(cfg, i), scene_dir(workdir, i));
    for (std::size_t i = 0; i < bench; ++i)
        write_scene(cfg, bench_spec(cfg, i, bench_frames ? bench_frames : cfg.scene_frames), bench_dir(workdir, i));
    write_text(workdir / "data" / "manifest.txt",
               "config_hash = " + cfg.hash_hex() + "\nscenes = " + std::to_string(cfg.scenes) +
                   "\nframes = " + std::to_string(cfg.scene_frames) + "\nsize = " + std::to_string(cfg.image_size) + "\n");
    write_text(config_path(workdir), config_file_text(cfg));
    if (log) *log << "gen-data: " << cfg.scenes << " scenes x " << cfg.scene_frames << " frames -> " << (workdir / "data").string() << "\n";
}

inline std::string read_tag(const fs::path& dir) {
    std::ifstream is(dir / "tag.txt");
    std::string tag;
    if (is) std::getline(is, tag);
    return tag;
}

inline std::vector<TrainScene> load_dataset(const Model& m, const fs::path& workdir) {
    const std::string manifest = read_text(workdir / "data" / "manifest.txt");
    const std::size_t scenes = std::stoul(lookup(manifest, "scenes"));
    std::vector<TrainScene> out;
    for (std::size_t i = 0; i < scenes; ++i) {
        const fs::path dir = scene_dir(workdir, i);
        const auto frames = media::read_frame_dir(dir / "frames");
        if (frames.frames[0].height != m.cfg.image_size || frames.frames[0].width != m.cfg.image_size) {
            throw ContractError("dataset frames are " + std::to_string(frames.frames[0].height) + "x" +
                                std::to_string(frames.frames[0].width) + ", config expects " +
                                std::to_string(m.cfg.image_size));
        }
        out.push_back(prepare_scene(m, frames, media::read_sketch_dir(dir / "sketches"), read_tag(dir)));
    }
    return out;
}

// ---------------------------------------------------------------------------

// Trains one stage on top of the previous stage's checkpoint. The sketch
// stage pretrains the denoiser first when no base checkpoint exists.
inline StageLog train(const RunConfig& cfg, const fs::path& workdir, const std::string& stage,
                      std::ostream* log = nullptr) {
    const std::size_t idx = stage_index(stage);
    Model m;
    if (idx == 0) {
        m = Model(cfg);
    } else {
        const std::string prev = stage_names()[idx - 1];
        const fs::path prev_path = checkpoint_path(workdir, prev);
        if (!fs::exists(prev_path)) {
            if (prev != "base") {
                throw ContractError("stage order: '" + stage + "' needs " + prev_path.string() +
                                    "; run train --stage " + prev + " first");
            }
            if (log) *log << "train: no base checkpoint, pretraining the denoiser first\n";
            train(cfg, workdir, "base", log);
        }
        m = load_checkpoint(prev_path);
        if (m.cfg.hash_hex() != cfg.hash_hex()) {
            throw ContractError("checkpoint " + prev_path.string() + " has config hash " + m.cfg.hash_hex() +
                                ", workdir config is " + cfg.hash_hex());
        }
    }
    const auto data = load_dataset(m, workdir);
    const std::size_t steps = stage_steps(cfg, stage), every = std::max<std::size_t>(1, steps / 10);
    StepCallback cb;
    if (log) {
        cb = [&](std::size_t step, double v) {
            if ((step + 1) % every == 0 || step + 1 == steps)
                *log << "train " << stage << ": step " << step + 1 << "/" << steps
                     << (stage == "ccr" ? " reward " : " loss ") << v << "\n";
        };
    }
    const StageLog lg = run_stage(m, stage, data, cb);
    save_checkpoint(m, checkpoint_path(workdir, stage));

    const std::string head = "# config_hash = " + cfg.hash_hex() + "\n";
    if (!lg.loss.empty()) {
        std::string csv = head + "step,loss\n";
        for (std::size_t i = 0; i < lg.loss.size(); ++i) csv += std::to_string(i) + "," + metrics::fmt(lg.loss[i]) + "\n";
        write_text(workdir / "logs" / (stage + "_loss.csv"), csv);
    }
    if (!lg.rewards.empty()) {
        std::string csv = head + "step,reward,baseline\n";
        for (const auto& r : lg.rewards)
            csv += std::to_string(r.step) + "," + metrics::fmt(r.reward) + "," + metrics::fmt(r.baseline) + "\n";
        write_text(workdir / "logs" / (stage + "_reward.csv"), csv);
    }
    return lg;
}

// ---------------------------------------------------------------------------

struct ColorizeArgs {
    fs::path checkpoint, sketches, reference, out;
    std::size_t frames = 0;
    std::optional<std::size_t> segment_frames, overlap, t_start;
    std::uint64_t seed = 0;
    std::optional<std::string> text;  // defaults to tag.txt next to the sketch dir
    bool memory = true;
    std::optional<fs::path> dump_cache;
};

inline GenerateResult colorize(const ColorizeArgs& a, std::ostream* log = nullptr) {
    Model m = load_checkpoint(a.checkpoint);
    if (a.segment_frames) m.cfg.segment_frames = *a.segment_frames;
    if (a.overlap) m.cfg.overlap = *a.overlap;
    if (a.t_start) m.cfg.t_start = *a.t_start;
    try {
        m.cfg.validate();
    } catch (const ConfigError& e) {
        throw ContractError(e.what());
    }
    const media::SketchSequence sk = media::read_sketch_dir(a.sketches);
    const media::Image ref = media::read_ppm(a.reference);
    if (sk.size() < a.frames) {
        throw ContractError("sketch shortfall: " + std::to_string(sk.size()) + " sketches for " +
                            std::to_string(a.frames) + " frames");
    }
    const std::string text = a.text ? *a.text : read_tag(a.sketches.parent_path());
    Rng rng(a.seed);
    GenerateOptions opts;
    opts.use_memory = a.memory;
    GenerateResult res = generate_long(m, sk, ref, text, a.frames, rng, opts);

    media::write_frame_dir(a.out, tensor_to_frames(res.video), provenance(m.cfg));
    std::string starts;
    for (auto s : res.plan.starts) starts += (starts.empty() ? "" : ",") + std::to_string(s);
    std::string stages;
    for (const auto& s : m.stages) stages += (stages.empty() ? "" : ",") + s;
    write_text(a.out / "meta.txt", "config_hash = " + m.cfg.hash_hex() + "\nframes = " + std::to_string(a.frames) +
                                       "\nseed = " + std::to_string(a.seed) + "\nsegments = " + starts +
                                       "\nmemory = " + (a.memory ? "on" : "off") + "\nstages = " +
                                       (stages.empty() ? "-" : stages) + "\ntext = " + text + "\n");
    if (a.dump_cache) {
        if (!res.last_cache) throw ContractError("cache dump: the run had no memory (single segment or memory off)");
        dump_cache(*res.last_cache, *a.dump_cache, m.cfg.hash_hex());
    }
    if (log) *log << "colorize: " << a.frames << " frames in " << res.plan.segments() << " segments -> " << a.out.string() << "\n";
    return res;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
    fs::path gen, ref, out;
    double rho = 0.25, cap_db = 100.0;
    std::size_t size = 256;
    bool force = false;
};

inline std::string dir_hash(const fs::path& dir) {
    return fs::exists(dir / "meta.txt") ? lookup(read_text(dir / "meta.txt"), "config_hash") : std::string();
}

inline metrics::MetricReport evaluate_dirs(const EvaluateArgs& a) {
    media::FrameSequence gen = media::read_frame_dir(a.gen), ref = media::read_frame_dir(a.ref);
    const auto& g0 = gen.frames[0];
    const auto& r0 = ref.frames[0];
    if ((g0.height != r0.height || g0.width != r0.width) && !a.force) {
        throw ContractError("evaluate: generated frames are " + std::to_string(g0.height) + "x" +
                            std::to_string(g0.width) + ", reference frames " + std::to_string(r0.height) + "x" +
                            std::to_string(r0.width) + " (use --force to resize both)");
    }
    if (gen.size() != ref.size()) {
        if (!a.force) {
            throw ContractError("evaluate: " + std::to_string(gen.size()) + " generated vs " +
                                std::to_string(ref.size()) + " reference frames (use --force to truncate)");
        }
        const std::size_t n = std::min(gen.size(), ref.size());
        gen.frames.resize(n);
        ref.frames.resize(n);
    }
    metrics::MetricReport rep = metrics::evaluate(gen, ref, a.rho, a.cap_db, a.size);
    rep.config_hash = dir_hash(a.gen);
    if (rep.config_hash.empty()) rep.config_hash = "unknown";
    return rep;
}

inline metrics::MetricReport evaluate(const EvaluateArgs& a) {
    const auto rep = evaluate_dirs(a);
    std::ostringstream csv, txt;
    metrics::write_csv(csv, rep);
    metrics::write_report(txt, rep);
    write_text(a.out / "metrics.csv", csv.str());
    write_text(a.out / "report.txt", txt.str());
    return rep;
}

inline metrics::MetricReport analyze_frequency(const EvaluateArgs& a) {
    const auto rep = evaluate_dirs(a);
    if (rep.horizons.empty()) throw ContractError("analyze-frequency: need at least 14 frames");
    std::ostringstream csv;
    metrics::write_decay_csv(csv, rep);
    write_text(a.out / "decay.csv", csv.str());
    return rep;
}

}  // namespace longanim::pipeline
