// longanim: data generation, staged training, long colorization, evaluation.
// Exit codes: 0 ok, 2 usage, 3 contract violation, 4 I/O.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "longanim/pipeline.hpp"

namespace fs = std::filesystem;
using namespace longanim;

namespace {

enum Exit { kOk = 0, kUsage = 2, kContract = 3, kIo = 4 };

fs::path under(const fs::path& workdir, const fs::path& p) { return p.is_absolute() ? p : workdir / p; }

RunConfig load_config(const fs::path& workdir, const std::string& file, const std::vector<std::string>& sets) {
    RunConfig cfg;
    const fs::path path = file.empty() ? pipeline::config_path(workdir) : under(workdir, file);
    if (!file.empty() || fs::exists(path)) {
        std::ifstream is(path);
        if (!is) throw media::IngestError("cannot read config " + path.string());
        cfg = RunConfig::parse(is);
    }
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sketch-driven long animation colorization (toy scale)"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string workdir = ".", config_file;
    std::vector<std::string> sets;
    bool quiet = false;
    app.add_option("--workdir", workdir, "Directory all other paths are relative to");
    app.add_option("--config", config_file, "Config file (default: <workdir>/config.txt when present)");
    app.add_option("--set", sets, "Override a config key: --set key=value (repeatable)");
    app.add_flag("-q,--quiet", quiet, "No progress output");

    std::size_t bench = 1, bench_frames = 0;
    auto* gen = app.add_subcommand("gen-data", "Render training scenes into <workdir>/data, held-out ones into <workdir>/bench");
    gen->add_option("--bench", bench, "Held-out scenes to render")->capture_default_str();
    gen->add_option("--bench-frames", bench_frames, "Frames per held-out scene (default: scene_frames)");

    std::string stage;
    auto* train = app.add_subcommand("train", "Run one training stage");
    train->add_option("--stage", stage, "base | sketchdit | dglm | ccr")
        ->required()
        ->check(CLI::IsMember({"base", "sketchdit", "dglm", "ccr"}));

    pipeline::ColorizeArgs ca;
    std::string ckpt = "checkpoints/ccr.ckpt", sketches, reference, out = "colorized", text, cache_dir;
    std::size_t seg = 0, ov = 0, tst = 0;
    bool no_memory = false;
    auto* col = app.add_subcommand("colorize", "Colorize a sketch sequence with a trained checkpoint");
    col->add_option("--checkpoint", ckpt, "Checkpoint file")->capture_default_str();
    col->add_option("--sketches", sketches, "Sketch frame directory")->required();
    col->add_option("--reference", reference, "Reference frame (PPM)")->required();
    col->add_option("--frames", ca.frames, "Frames to generate")->required()->check(CLI::PositiveNumber);
    auto* seg_opt = col->add_option("--segment-frames", seg, "Frames per window")->check(CLI::PositiveNumber);
    auto* ov_opt = col->add_option("--overlap", ov, "Overlap frames between windows")->check(CLI::PositiveNumber);
    auto* tst_opt = col->add_option("--t-start", tst, "Step below which overlaps are blended");
    col->add_option("--seed", ca.seed, "Sampling seed");
    auto* text_opt = col->add_option("--text", text, "Text tag (default: tag.txt beside the sketch dir)");
    col->add_option("--out", out, "Output frame directory")->capture_default_str();
    col->add_flag("--no-memory", no_memory, "Disable long-term memory fusion");
    col->add_option("--dump-cache", cache_dir, "Write the final segment's memory cache here");

    pipeline::EvaluateArgs ea;
    std::string gen_dir, ref_dir, eval_out = "eval";
    auto* ev = app.add_subcommand("evaluate", "PSNR / SSIM / band PSNR against reference frames");
    auto* fq = app.add_subcommand("analyze-frequency", "Low/high band PSNR decay versus horizon");
    for (auto* sub : {ev, fq}) {
        sub->add_option("--gen", gen_dir, "Generated frame directory")->required();
        sub->add_option("--ref", ref_dir, "Reference frame directory")->required();
        sub->add_option("--rho", ea.rho, "Low-band radius as a fraction of Nyquist")->check(CLI::Range(1e-6, 1.5));
        sub->add_option("--out", eval_out, "Output directory")->capture_default_str();
        sub->add_flag("--force", ea.force, "Evaluate despite resolution or length mismatch");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    std::ostream* log = quiet ? nullptr : &std::cerr;
    const fs::path wd = workdir;
    try {
        if (gen->parsed()) {
            pipeline::gen_data(load_config(wd, config_file, sets), wd, log, bench, bench_frames);
        } else if (train->parsed()) {
            const RunConfig cfg = load_config(wd, config_file, sets);
            if (!fs::exists(wd / "data" / "manifest.txt")) throw media::IngestError("no dataset in " + wd.string() + "; run gen-data first");
            pipeline::train(cfg, wd, stage, log);
        } else if (col->parsed()) {
            ca.checkpoint = under(wd, ckpt);
            ca.sketches = under(wd, sketches);
            ca.reference = under(wd, reference);
            ca.out = under(wd, out);
            if (seg_opt->count()) ca.segment_frames = seg;
            if (ov_opt->count()) ca.overlap = ov;
            if (tst_opt->count()) ca.t_start = tst;
            if (text_opt->count()) ca.text = text;
            ca.memory = !no_memory;
            if (!cache_dir.empty()) ca.dump_cache = under(wd, cache_dir);
            pipeline::colorize(ca, log);
        } else {
            ea.gen = under(wd, gen_dir);
            ea.ref = under(wd, ref_dir);
            ea.out = under(wd, eval_out);
            const auto rep = ev->parsed() ? pipeline::evaluate(ea) : pipeline::analyze_frequency(ea);
            if (log) *log << (ev->parsed() ? "evaluate" : "analyze-frequency") << ": " << rep.frames.size() << " frames, mean psnr "
                          << metrics::fmt(rep.mean_of(&metrics::FrameRow::psnr)) << " -> " << ea.out.string() << "\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const ContractError& e) {
        std::cerr << "contract violation: " << e.what() << "\n";
        return kContract;
    } catch (const ShapeError& e) {
        std::cerr << "contract violation: " << e.what() << "\n";
        return kContract;
    } catch (const NumericError& e) {
        std::cerr << "contract violation: " << e.what() << "\n";
        return kContract;
    } catch (const media::ValidationError& e) {
        std::cerr << "contract violation: " << e.what() << "\n";
        return kContract;
    } catch (const std::exception& e) {
        // ingest, format and filesystem failures
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIo;
    }
    return kOk;
}
