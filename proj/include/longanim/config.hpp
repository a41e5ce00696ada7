#pragma once

// Run configuration: every knob of the pipeline in one flat key-value file
// with sections. Unknown keys are rejected; the canonical text form is what
// gets hashed and echoed into checkpoints and reports.

#include <cstdint>
#include <functional>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace longanim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    // [model]
    std::size_t image_size = 32;
    std::size_t patch = 4;
    std::size_t latent_channels = 8;
    std::string codec = "dct";  // dct | identity | orthogonal
    double latent_scale = 0.25;
    std::size_t width = 64;
    std::size_t heads = 4;
    std::size_t ffn_mult = 4;
    std::size_t n_blocks = 8;
    std::size_t text_vocab = 256;
    std::size_t text_len = 8;
    std::size_t t_steps = 50;
    double beta_start = 0.001;
    double beta_end = 0.2;

    // [sketchdit]
    std::size_t l_blocks = 2;
    double gamma = 1.0;
    std::size_t w_ref = 200;

    // [memory]
    std::size_t frame_feature_dim = 32;
    std::size_t summary_dim = 32;
    std::size_t summarizer_layers = 8;
    std::size_t memory_first_layer = 3;
    std::size_t memory_layers = 4;
    std::size_t kv_dim = 32;
    double theta_seg = 0.1;
    std::size_t local_segments = 1;

    // [inference]
    std::size_t segment_frames = 17;
    std::size_t overlap = 4;
    std::size_t t_start = 20;

    // [train]
    std::size_t train_frames = 17;
    std::size_t base_steps = 2000;
    std::size_t sketch_steps = 2000;
    std::size_t dglm_steps = 1000;
    std::size_t ccr_steps = 20;
    double lr = 1e-3;
    std::size_t history_max = 48;
    std::size_t ccr_samples = 8;
    double ccr_lr = 1e-4;
    std::size_t baseline_window = 64;
    double ccr_clip = 1.0;

    // [data]
    std::size_t scenes = 32;
    std::size_t scene_frames = 120;
    std::size_t max_objects = 2;

    // [eval]
    double rho = 0.25;
    double cap_db = 100.0;
    std::size_t eval_size = 256;

    // [run]
    std::uint64_t seed = 0;

    struct Field {
        const char* section;
        const char* key;
        std::function<std::string(const RunConfig&)> get;
        std::function<void(RunConfig&, const std::string&)> set;
    };

    static const std::vector<Field>& fields();

    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;

    // Canonical text: every field, fixed order, sections included.
    std::string to_text() const;
    std::uint64_t hash() const { return fnv1a(to_text()); }
    std::string hash_hex() const {
        char buf[24];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash()));
        return buf;
    }

    std::size_t latent_size() const { return image_size / patch; }
    std::size_t memory_count() const { return memory_layers; }

    void validate() const;

    static RunConfig parse(std::istream& is);
    static RunConfig parse_string(const std::string& text) {
        std::istringstream is(text);
        return parse(is);
    }
};

namespace detail {

template <class T>
std::string fmt_value(const T& v) {
    if constexpr (std::is_same_v<T, std::string>) {
        return v;
    } else if constexpr (std::is_floating_point_v<T>) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    } else {
        return std::to_string(v);
    }
}

template <class T>
T parse_value(const std::string& key, const std::string& s) {
    try {
        std::size_t used = 0;
        if constexpr (std::is_same_v<T, std::string>) {
            return s;
        } else if constexpr (std::is_floating_point_v<T>) {
            T v = static_cast<T>(std::stod(s, &used));
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } else {
            if (!s.empty() && s[0] == '-') throw std::invalid_argument(s);
            T v = static_cast<T>(std::stoull(s, &used));
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        }
    } catch (const std::logic_error&) {
        throw ConfigError("config key '" + key + "': bad value '" + s + "'");
    }
}

template <class T>
RunConfig::Field field(const char* section, const char* key, T RunConfig::*member) {
    return {section, key, [member](const RunConfig& c) { return fmt_value(c.*member); },
            [member, key](RunConfig& c, const std::string& v) { c.*member = parse_value<T>(key, v); }};
}

}  // namespace detail

inline const std::vector<RunConfig::Field>& RunConfig::fields() {
    using detail::field;
    static const std::vector<Field> all = {
        field("model", "image_size", &RunConfig::image_size),
        field("model", "patch", &RunConfig::patch),
        field("model", "latent_channels", &RunConfig::latent_channels),
        field("model", "codec", &RunConfig::codec),
        field("model", "latent_scale", &RunConfig::latent_scale),
        field("model", "width", &RunConfig::width),
        field("model", "heads", &RunConfig::heads),
        field("model", "ffn_mult", &RunConfig::ffn_mult),
        field("model", "n_blocks", &RunConfig::n_blocks),
        field("model", "text_vocab", &RunConfig::text_vocab),
        field("model", "text_len", &RunConfig::text_len),
        field("model", "t_steps", &RunConfig::t_steps),
        field("model", "beta_start", &RunConfig::beta_start),
        field("model", "beta_end", &RunConfig::beta_end),
        field("sketchdit", "l_blocks", &RunConfig::l_blocks),
        field("sketchdit", "gamma", &RunConfig::gamma),
        field("sketchdit", "w_ref", &RunConfig::w_ref),
        field("memory", "frame_feature_dim", &RunConfig::frame_feature_dim),
        field("memory", "summary_dim", &RunConfig::summary_dim),
        field("memory", "summarizer_layers", &RunConfig::summarizer_layers),
        field("memory", "memory_first_layer", &RunConfig::memory_first_layer),
        field("memory", "memory_layers", &RunConfig::memory_layers),
        field("memory", "kv_dim", &RunConfig::kv_dim),
        field("memory", "theta_seg", &RunConfig::theta_seg),
        field("memory", "local_segments", &RunConfig::local_segments),
        field("inference", "segment_frames", &RunConfig::segment_frames),
        field("inference", "overlap", &RunConfig::overlap),
        field("inference", "t_start", &RunConfig::t_start),
        field("train", "train_frames", &RunConfig::train_frames),
        field("train", "base_steps", &RunConfig::base_steps),
        field("train", "sketch_steps", &RunConfig::sketch_steps),
        field("train", "dglm_steps", &RunConfig::dglm_steps),
        field("train", "ccr_steps", &RunConfig::ccr_steps),
        field("train", "lr", &RunConfig::lr),
        field("train", "history_max", &RunConfig::history_max),
        field("train", "ccr_samples", &RunConfig::ccr_samples),
        field("train", "ccr_lr", &RunConfig::ccr_lr),
        field("train", "baseline_window", &RunConfig::baseline_window),
        field("train", "ccr_clip", &RunConfig::ccr_clip),
        field("data", "scenes", &RunConfig::scenes),
        field("data", "scene_frames", &RunConfig::scene_frames),
        field("data", "max_objects", &RunConfig::max_objects),
        field("eval", "rho", &RunConfig::rho),
        field("eval", "cap_db", &RunConfig::cap_db),
        field("eval", "eval_size", &RunConfig::eval_size),
        field("run", "seed", &RunConfig::seed),
    };
    return all;
}

inline void RunConfig::set(const std::string& key, const std::string& value) {
    for (const auto& f : fields()) {
        if (key == f.key) {
            f.set(*this, value);
            return;
        }
    }
    throw ConfigError("unknown config key '" + key + "'");
}

inline std::string RunConfig::get(const std::string& key) const {
    for (const auto& f : fields())
        if (key == f.key) return f.get(*this);
    throw ConfigError("unknown config key '" + key + "'");
}

inline std::string RunConfig::to_text() const {
    std::string out, section;
    for (const auto& f : fields()) {
        if (section != f.section) {
            section = f.section;
            if (!out.empty()) out += "\n";
            out += "[" + section + "]\n";
        }
        out += std::string(f.key) + " = " + f.get(*this) + "\n";
    }
    return out;
}

inline RunConfig RunConfig::parse(std::istream& is) {
    RunConfig cfg;
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        line = line.substr(b, line.find_last_not_of(" \t\r") - b + 1);
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("config line " + std::to_string(lineno) + ": bad section header");
            section = line.substr(1, line.size() - 2);
            bool known = false;
            for (const auto& f : fields()) known |= section == f.section;
            if (!known) throw ConfigError("config line " + std::to_string(lineno) + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        auto strip = [](std::string s) {
            const auto b2 = s.find_first_not_of(" \t");
            const auto e2 = s.find_last_not_of(" \t");
            return b2 == std::string::npos ? std::string() : s.substr(b2, e2 - b2 + 1);
        };
        const std::string key = strip(line.substr(0, eq)), value = strip(line.substr(eq + 1));
        const Field* hit = nullptr;
        for (const auto& f : fields())
            if (key == f.key) hit = &f;
        if (!hit) throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        if (!section.empty() && section != hit->section) {
            throw ConfigError("config line " + std::to_string(lineno) + ": key '" + key + "' belongs in [" +
                              hit->section + "], not [" + section + "]");
        }
        hit->set(cfg, value);
    }
    cfg.validate();
    return cfg;
}

inline void RunConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("invalid config: " + m); };
    if (patch == 0 || image_size % patch != 0) fail("image_size must be divisible by patch");
    if (codec != "dct" && codec != "identity" && codec != "orthogonal") fail("codec must be dct|identity|orthogonal");
    if (latent_channels == 0 || latent_channels > 3 * patch * patch) fail("latent_channels must be in [1, 3*patch^2]");
    if (codec == "identity" && latent_channels != 3 * patch * patch) fail("identity codec needs latent_channels == 3*patch^2");
    if (heads == 0 || width % heads != 0) fail("width must be divisible by heads");
    if (width % 8 != 0) fail("width must be a multiple of 8");
    if (n_blocks == 0 || n_blocks % 2 != 0) fail("n_blocks must be even and > 0");
    if (l_blocks == 0 || l_blocks >= n_blocks) fail("l_blocks must satisfy 0 < l_blocks < n_blocks");
    if (t_steps == 0) fail("t_steps must be > 0");
    if (!(beta_start > 0 && beta_end < 1 && beta_start < beta_end)) fail("need 0 < beta_start < beta_end < 1");
    if (memory_layers == 0 || memory_first_layer == 0 || memory_first_layer + memory_layers - 1 > summarizer_layers)
        fail("memory layers must lie inside the summarizer depth");
    if (local_segments == 0) fail("local_segments must be >= 1");
    if (overlap == 0 || overlap >= segment_frames) fail("need 0 < overlap < segment_frames");
    if (t_start > t_steps) fail("t_start must be <= t_steps");
    if (train_frames == 0) fail("train_frames must be >= 1");
    if (ccr_samples == 0) fail("ccr_samples must be >= 1");
    if (!(rho > 0 && rho <= 1.5)) fail("rho must be in (0, 1.5]");
    if (max_objects == 0) fail("max_objects must be >= 1");
}

}  // namespace longanim
