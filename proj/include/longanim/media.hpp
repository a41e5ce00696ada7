#pragma once

// Frames, sketches, PPM frame directories and the synthetic moving-shape
// scene generator used as training and benchmark data.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace longanim::media {

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Image {
    std::size_t height = 0, width = 0;
    std::vector<std::uint8_t> rgb;  // H*W*3

    Image() = default;
    Image(std::size_t h, std::size_t w, std::uint8_t fill = 0) : height(h), width(w), rgb(h * w * 3, fill) {}

    std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c) { return rgb[(y * width + x) * 3 + c]; }
    std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const { return rgb[(y * width + x) * 3 + c]; }

    bool operator==(const Image&) const = default;
};

struct GrayImage {
    std::size_t height = 0, width = 0;
    std::vector<int> v;  // nominally [0, 255]

    GrayImage() = default;
    GrayImage(std::size_t h, std::size_t w, int fill = 0) : height(h), width(w), v(h * w, fill) {}
    int& at(std::size_t y, std::size_t x) { return v[y * width + x]; }
    int at(std::size_t y, std::size_t x) const { return v[y * width + x]; }
    bool operator==(const GrayImage&) const = default;
};

struct BinaryMap {
    std::size_t height = 0, width = 0;
    std::vector<std::uint8_t> bits;  // {0, 1}

    BinaryMap() = default;
    BinaryMap(std::size_t h, std::size_t w, std::uint8_t fill = 0) : height(h), width(w), bits(h * w, fill) {}
    std::uint8_t& at(std::size_t y, std::size_t x) { return bits[y * width + x]; }
    std::uint8_t at(std::size_t y, std::size_t x) const { return bits[y * width + x]; }
    std::size_t count() const { return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1)); }
    bool operator==(const BinaryMap&) const = default;
};

struct FrameSequence {
    std::vector<Image> frames;
    double fps = 24.0;

    std::size_t size() const { return frames.size(); }
    std::size_t height() const { return frames.empty() ? 0 : frames.front().height; }
    std::size_t width() const { return frames.empty() ? 0 : frames.front().width; }

    void validate() const {
        for (const auto& f : frames) {
            if (f.height != height() || f.width != width() || f.rgb.size() != f.height * f.width * 3) {
                throw ValidationError("frame sequence: frames do not share one resolution");
            }
        }
    }
    bool operator==(const FrameSequence&) const = default;
};

struct SketchSequence {
    std::vector<BinaryMap> frames;
    std::size_t size() const { return frames.size(); }
    bool operator==(const SketchSequence&) const = default;
};

// Lines are 1, paper is 0: anything brighter than 200 is paper.
inline BinaryMap binarize_sketch(const GrayImage& gray) {
    BinaryMap out(gray.height, gray.width);
    for (std::size_t i = 0; i < gray.v.size(); ++i) {
        const int p = gray.v[i];
        if (p < 0 || p > 255) throw ValidationError("binarize_sketch: pixel value " + std::to_string(p) + " outside [0,255]");
        out.bits[i] = p > 200 ? 0 : 1;
    }
    return out;
}

// Lines back to the dark-on-white convention.
inline GrayImage sketch_to_gray(const BinaryMap& b) {
    GrayImage g(b.height, b.width);
    for (std::size_t i = 0; i < b.bits.size(); ++i) g.v[i] = 255 * (1 - b.bits[i]);
    return g;
}

inline constexpr float kSketchEdgeGain = 4.0f;

// Gradient-magnitude edge map with edges dark. Central differences per
// channel with replicated borders; the strongest channel wins.
inline GrayImage extract_sketch(const Image& frame) {
    const std::size_t h = frame.height, w = frame.width;
    GrayImage out(h, w, 255);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t xl = x == 0 ? 0 : x - 1, xr = std::min(x + 1, w - 1);
            const std::size_t yu = y == 0 ? 0 : y - 1, yd = std::min(y + 1, h - 1);
            float mag = 0.0f;
            for (std::size_t c = 0; c < 3; ++c) {
                const float gx = 0.5f * (static_cast<float>(frame.at(y, xr, c)) - frame.at(y, xl, c));
                const float gy = 0.5f * (static_cast<float>(frame.at(yd, x, c)) - frame.at(yu, x, c));
                mag = std::max(mag, std::sqrt(gx * gx + gy * gy));
            }
            const int dark = static_cast<int>(std::lround(std::min(255.0f, kSketchEdgeGain * mag)));
            out.at(y, x) = 255 - dark;
        }
    }
    return out;
}

inline GrayImage image_to_gray(const Image& img) {
    GrayImage g(img.height, img.width);
    for (std::size_t i = 0; i < g.v.size(); ++i) g.v[i] = img.rgb[i * 3];
    return g;
}

inline Image gray_to_image(const GrayImage& g) {
    Image img(g.height, g.width);
    for (std::size_t i = 0; i < g.v.size(); ++i) {
        const auto v = static_cast<std::uint8_t>(std::clamp(g.v[i], 0, 255));
        img.rgb[i * 3] = img.rgb[i * 3 + 1] = img.rgb[i * 3 + 2] = v;
    }
    return img;
}

// [H, W, 3] in [0, 1].
inline Tensor image_to_tensor(const Image& img) {
    Tensor t({img.height, img.width, 3});
    for (std::size_t i = 0; i < img.rgb.size(); ++i) t[i] = static_cast<float>(img.rgb[i]) / 255.0f;
    return t;
}

inline Image tensor_to_image(const Tensor& t) {
    if (t.ndim() != 3 || t.dim(2) != 3) throw ValidationError("tensor_to_image: expected [H,W,3]");
    Image img(t.dim(0), t.dim(1));
    for (std::size_t i = 0; i < t.size(); ++i)
        img.rgb[i] = static_cast<std::uint8_t>(std::lround(std::clamp(t[i], 0.0f, 1.0f) * 255.0f));
    return img;
}

// ---------------------------------------------------------------------------
// P6 PPM I/O.

// `comment` lands in a header comment line (no newlines allowed).
inline void write_ppm(const std::filesystem::path& path, const Image& img, const std::string& comment = "") {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IngestError("cannot open " + path.string() + " for writing");
    os << "P6\n";
    if (!comment.empty()) os << "# " << comment << "\n";
    os << img.width << " " << img.height << "\n255\n";
    os.write(reinterpret_cast<const char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
    if (!os) throw IngestError("write failed: " + path.string());
}

inline Image read_ppm(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IngestError("cannot open " + path.string());
    auto token = [&]() {
        std::string tok;
        char c;
        while (is.get(c)) {
            if (c == '#') {
                std::string skip;
                std::getline(is, skip);
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!tok.empty()) break;
                continue;
            }
            tok += c;
        }
        return tok;
    };
    const std::string magic = token();
    if (magic != "P6") throw FormatError(path.string() + ": not a P6 PPM (magic '" + magic + "')");
    std::size_t w = 0, h = 0;
    int maxval = 0;
    try {
        w = std::stoul(token());
        h = std::stoul(token());
        maxval = std::stoi(token());
    } catch (const std::exception&) {
        throw FormatError(path.string() + ": malformed PPM header");
    }
    if (maxval != 255) throw FormatError(path.string() + ": only 8-bit PPM supported");
    Image img(h, w);
    if (!is.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()))) {
        throw FormatError(path.string() + ": truncated pixel data");
    }
    return img;
}

inline std::string frame_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%05zu.ppm", index);
    return buf;
}

inline void write_frame_dir(const std::filesystem::path& dir, const FrameSequence& seq, const std::string& comment = "") {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < seq.size(); ++i) write_ppm(dir / frame_name(i), seq.frames[i], comment);
}

inline FrameSequence read_frame_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw IngestError("frame directory not found: " + dir.string());
    std::vector<std::size_t> indices;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() == 15 && name.starts_with("frame_") && name.ends_with(".ppm") &&
            std::all_of(name.begin() + 6, name.begin() + 11, [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
            indices.push_back(std::stoul(name.substr(6, 5)));
        }
    }
    std::sort(indices.begin(), indices.end());
    if (indices.empty()) throw IngestError("no frame_%05d.ppm files in " + dir.string());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] != i) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%05zu", i);
            throw IngestError("frame directory " + dir.string() + ": missing frame index " + buf);
        }
    }
    FrameSequence seq;
    for (std::size_t i = 0; i < indices.size(); ++i) seq.frames.push_back(read_ppm(dir / frame_name(i)));
    seq.validate();
    return seq;
}

inline void write_sketch_dir(const std::filesystem::path& dir, const SketchSequence& s, const std::string& comment = "") {
    FrameSequence seq;
    for (const auto& b : s.frames) seq.frames.push_back(gray_to_image(sketch_to_gray(b)));
    write_frame_dir(dir, seq, comment);
}

inline SketchSequence read_sketch_dir(const std::filesystem::path& dir) {
    SketchSequence s;
    for (const auto& img : read_frame_dir(dir).frames) s.frames.push_back(binarize_sketch(image_to_gray(img)));
    return s;
}

// ---------------------------------------------------------------------------
// Synthetic scenes.

enum class ShapeKind { square, circle, triangle };

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

struct Vec2 {
    double x = 0, y = 0;
};

struct ObjectSpec {
    ShapeKind shape = ShapeKind::square;
    Rgb color;
    std::vector<Vec2> path;     // control points of the trajectory spline
    std::vector<double> scale;  // half-extent in pixels, interpolated over time
};

struct SceneSpec {
    std::vector<ObjectSpec> objects;
    Rgb background{255, 255, 255};
    std::size_t frames = 16;
    std::size_t size = 32;
    std::uint64_t seed = 0;
};

struct NamedColor {
    const char* name;
    Rgb rgb;
};

inline constexpr std::array<NamedColor, 8> kPalette{{
    {"red", {220, 40, 40}},
    {"green", {40, 170, 60}},
    {"blue", {40, 70, 210}},
    {"yellow", {230, 200, 30}},
    {"cyan", {30, 190, 200}},
    {"magenta", {200, 50, 180}},
    {"orange", {240, 130, 20}},
    {"purple", {120, 50, 170}},
}};

inline constexpr std::array<NamedColor, 3> kBackgrounds{{
    {"white", {250, 250, 250}},
    {"cream", {245, 235, 200}},
    {"sky", {200, 225, 245}},
}};

inline std::string shape_name(ShapeKind k) {
    switch (k) {
        case ShapeKind::square: return "square";
        case ShapeKind::circle: return "circle";
        case ShapeKind::triangle: return "triangle";
    }
    return "?";
}

inline ShapeKind parse_shape(const std::string& s) {
    if (s == "square") return ShapeKind::square;
    if (s == "circle") return ShapeKind::circle;
    if (s == "triangle") return ShapeKind::triangle;
    throw ValidationError("unknown shape '" + s + "'");
}

inline std::string color_name(Rgb c) {
    std::string best = "gray";
    long best_d = 1L << 40;
    for (const auto& nc : kPalette) {
        const long dr = long(c.r) - nc.rgb.r, dg = long(c.g) - nc.rgb.g, db = long(c.b) - nc.rgb.b;
        const long d = dr * dr + dg * dg + db * db;
        if (d < best_d) {
            best_d = d;
            best = nc.name;
        }
    }
    return best;
}

// Uniform Catmull-Rom through the control points; u in [0, 1].
inline Vec2 eval_spline(const std::vector<Vec2>& pts, double u) {
    if (pts.empty()) throw ValidationError("trajectory needs at least one point");
    if (pts.size() == 1) return pts.front();
    const double s = std::clamp(u, 0.0, 1.0) * static_cast<double>(pts.size() - 1);
    const std::size_t i = std::min(static_cast<std::size_t>(s), pts.size() - 2);
    const double t = s - static_cast<double>(i);
    const Vec2& p1 = pts[i];
    const Vec2& p2 = pts[i + 1];
    const Vec2& p0 = i == 0 ? p1 : pts[i - 1];
    const Vec2& p3 = i + 2 < pts.size() ? pts[i + 2] : p2;
    auto cr = [t](double a, double b, double c, double d) {
        const double t2 = t * t, t3 = t2 * t;
        return 0.5 * (2 * b + (-a + c) * t + (2 * a - 5 * b + 4 * c - d) * t2 + (-a + 3 * b - 3 * c + d) * t3);
    };
    return {cr(p0.x, p1.x, p2.x, p3.x), cr(p0.y, p1.y, p2.y, p3.y)};
}

inline double eval_scale(const std::vector<double>& sc, double u) {
    if (sc.empty()) throw ValidationError("object scale curve is empty");
    if (sc.size() == 1) return sc.front();
    const double s = std::clamp(u, 0.0, 1.0) * static_cast<double>(sc.size() - 1);
    const std::size_t i = std::min(static_cast<std::size_t>(s), sc.size() - 2);
    const double t = s - static_cast<double>(i);
    return sc[i] * (1 - t) + sc[i + 1] * t;
}

inline double frame_param(std::size_t f, std::size_t frames) {
    return frames <= 1 ? 0.0 : static_cast<double>(f) / static_cast<double>(frames - 1);
}

inline bool shape_contains(ShapeKind k, Vec2 c, double s, double px, double py) {
    const double dx = px - c.x, dy = py - c.y;
    switch (k) {
        case ShapeKind::square: return std::abs(dx) <= s && std::abs(dy) <= s;
        case ShapeKind::circle: return dx * dx + dy * dy <= s * s;
        case ShapeKind::triangle: {
            // apex up, base at +s/2; inscribed in the radius-s circle
            const double h = 1.5 * s, half = s * std::sqrt(3.0) / 2.0;
            const double ty = dy + s;  // 0 at apex
            if (ty < 0 || ty > h) return false;
            return std::abs(dx) <= half * ty / h;
        }
    }
    return false;
}

inline void validate_scene(const SceneSpec& spec) {
    if (spec.frames == 0) throw ValidationError("scene: frames must be >= 1");
    if (spec.size < 4) throw ValidationError("scene: size must be >= 4");
    for (std::size_t o = 0; o < spec.objects.size(); ++o) {
        const auto& obj = spec.objects[o];
        if (obj.path.empty()) throw ValidationError("scene: object " + std::to_string(o) + " has no path");
        if (obj.scale.empty()) throw ValidationError("scene: object " + std::to_string(o) + " has no scale");
        for (std::size_t f = 0; f < spec.frames; ++f) {
            const double u = frame_param(f, spec.frames);
            const Vec2 c = eval_spline(obj.path, u);
            const double s = eval_scale(obj.scale, u);
            const double lim = static_cast<double>(spec.size);
            if (s <= 0 || c.x - s < 0 || c.y - s < 0 || c.x + s > lim || c.y + s > lim) {
                throw ValidationError("scene: object " + std::to_string(o) + " leaves the frame at frame " +
                                      std::to_string(f));
            }
        }
    }
}

struct SceneRender {
    FrameSequence frames;
    SketchSequence sketches;
    std::string tag;
    std::vector<std::vector<BinaryMap>> masks;  // [object][frame], visible pixels
};

inline std::string scene_tag(const SceneSpec& spec) {
    std::string tag;
    for (const auto& o : spec.objects) {
        if (!tag.empty()) tag += " ";
        tag += color_name(o.color) + " " + shape_name(o.shape);
    }
    return tag.empty() ? "empty" : tag;
}

inline SceneRender generate_scene(const SceneSpec& spec) {
    validate_scene(spec);
    SceneRender out;
    out.tag = scene_tag(spec);
    out.masks.assign(spec.objects.size(), {});
    const std::size_t n = spec.size;
    for (std::size_t f = 0; f < spec.frames; ++f) {
        Image img(n, n);
        for (std::size_t i = 0; i < n * n; ++i) {
            img.rgb[i * 3] = spec.background.r;
            img.rgb[i * 3 + 1] = spec.background.g;
            img.rgb[i * 3 + 2] = spec.background.b;
        }
        std::vector<int> owner(n * n, -1);
        const double u = frame_param(f, spec.frames);
        for (std::size_t o = 0; o < spec.objects.size(); ++o) {
            const auto& obj = spec.objects[o];
            const Vec2 c = eval_spline(obj.path, u);
            const double s = eval_scale(obj.scale, u);
            for (std::size_t y = 0; y < n; ++y)
                for (std::size_t x = 0; x < n; ++x)
                    if (shape_contains(obj.shape, c, s, x + 0.5, y + 0.5)) {
                        owner[y * n + x] = static_cast<int>(o);
                        img.at(y, x, 0) = obj.color.r;
                        img.at(y, x, 1) = obj.color.g;
                        img.at(y, x, 2) = obj.color.b;
                    }
        }
        for (std::size_t o = 0; o < spec.objects.size(); ++o) {
            BinaryMap m(n, n);
            for (std::size_t i = 0; i < n * n; ++i) m.bits[i] = owner[i] == static_cast<int>(o);
            out.masks[o].push_back(std::move(m));
        }
        out.sketches.frames.push_back(binarize_sketch(extract_sketch(img)));
        out.frames.frames.push_back(std::move(img));
    }
    return out;
}

// Random scene family: 1..max_objects palette-colored shapes on a light
// background, each on a smooth path that stays inside the frame.
inline SceneSpec random_scene(std::uint64_t seed, std::size_t frames, std::size_t size, std::size_t max_objects = 2) {
    Rng rng(seed);
    SceneSpec spec;
    spec.frames = frames;
    spec.size = size;
    spec.seed = seed;
    spec.background = kBackgrounds[rng.below(kBackgrounds.size())].rgb;
    const std::size_t count = 1 + rng.below(std::max<std::size_t>(1, max_objects));
    std::vector<std::size_t> colors(kPalette.size());
    std::iota(colors.begin(), colors.end(), 0);
    for (std::size_t i = 0; i < count; ++i) {
        std::swap(colors[i], colors[i + rng.below(colors.size() - i)]);
        ObjectSpec obj;
        obj.shape = static_cast<ShapeKind>(rng.below(3));
        obj.color = kPalette[colors[i]].rgb;
        const double sz = static_cast<double>(size);
        const double s0 = sz * rng.uniform(0.12, 0.2), s1 = sz * rng.uniform(0.12, 0.2);
        obj.scale = {s0, s1};
        const double margin = std::max(s0, s1) + 0.5;
        const std::size_t knots = 2 + rng.below(2);
        for (std::size_t k = 0; k < knots; ++k)
            obj.path.push_back({rng.uniform(margin, sz - margin), rng.uniform(margin, sz - margin)});
        spec.objects.push_back(std::move(obj));
    }
    // Catmull-Rom may overshoot the knots; pull knots toward the center until valid.
    for (int attempt = 0; attempt < 8; ++attempt) {
        try {
            validate_scene(spec);
            return spec;
        } catch (const ValidationError&) {
            for (auto& o : spec.objects)
                for (auto& p : o.path) {
                    p.x = 0.5 * static_cast<double>(size) + 0.8 * (p.x - 0.5 * static_cast<double>(size));
                    p.y = 0.5 * static_cast<double>(size) + 0.8 * (p.y - 0.5 * static_cast<double>(size));
                }
        }
    }
    validate_scene(spec);
    return spec;
}

// ---------------------------------------------------------------------------
// Scene config: `key = value` lines, `[object]` starts an object block.
// Scene keys: frames, size, seed, background, objects (count for random
// scenes). Object keys: shape, color, path, scale.

inline Rgb parse_rgb(const std::string& v) {
    for (const auto& nc : kPalette)
        if (v == nc.name) return nc.rgb;
    for (const auto& nc : kBackgrounds)
        if (v == nc.name) return nc.rgb;
    int r, g, b;
    char c1, c2;
    std::istringstream is(v);
    if (!(is >> r >> c1 >> g >> c2 >> b) || c1 != ',' || c2 != ',' || r < 0 || g < 0 || b < 0 || r > 255 ||
        g > 255 || b > 255) {
        throw ValidationError("bad color '" + v + "' (expected r,g,b or a palette name)");
    }
    return {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
}

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

inline SceneSpec parse_scene_config(std::istream& is) {
    SceneSpec spec;
    std::size_t random_objects = 0;
    ObjectSpec* cur = nullptr;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        if (line == "[object]") {
            spec.objects.emplace_back();
            cur = &spec.objects.back();
            cur->scale = {static_cast<double>(spec.size) * 0.15};
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ValidationError("scene config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
        try {
            if (cur) {
                if (key == "shape") {
                    cur->shape = parse_shape(val);
                } else if (key == "color") {
                    cur->color = parse_rgb(val);
                } else if (key == "path") {
                    cur->path.clear();
                    std::istringstream ps(val);
                    std::string pt;
                    while (ps >> pt) {
                        const auto comma = pt.find(',');
                        if (comma == std::string::npos) throw ValidationError("bad path point '" + pt + "'");
                        cur->path.push_back({std::stod(pt.substr(0, comma)), std::stod(pt.substr(comma + 1))});
                    }
                } else if (key == "scale") {
                    cur->scale.clear();
                    std::istringstream ss(val);
                    double s;
                    while (ss >> s) cur->scale.push_back(s);
                } else {
                    throw ValidationError("unknown object key '" + key + "'");
                }
            } else if (key == "frames") {
                spec.frames = std::stoul(val);
            } else if (key == "size") {
                spec.size = std::stoul(val);
            } else if (key == "seed") {
                spec.seed = std::stoull(val);
            } else if (key == "background") {
                spec.background = parse_rgb(val);
            } else if (key == "objects") {
                random_objects = std::stoul(val);
            } else {
                throw ValidationError("unknown scene key '" + key + "'");
            }
        } catch (const std::logic_error& e) {
            throw ValidationError("scene config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (spec.objects.empty()) {
        SceneSpec r = random_scene(spec.seed, spec.frames, spec.size, std::max<std::size_t>(1, random_objects));
        return r;
    }
    validate_scene(spec);
    return spec;
}

inline std::string format_scene_config(const SceneSpec& spec) {
    std::ostringstream os;
    os << "frames = " << spec.frames << "\nsize = " << spec.size << "\nseed = " << spec.seed << "\nbackground = "
       << int(spec.background.r) << "," << int(spec.background.g) << "," << int(spec.background.b) << "\n";
    os.precision(17);
    for (const auto& o : spec.objects) {
        os << "[object]\nshape = " << shape_name(o.shape) << "\ncolor = " << int(o.color.r) << "," << int(o.color.g)
           << "," << int(o.color.b) << "\npath =";
        for (const auto& p : o.path) os << " " << p.x << "," << p.y;
        os << "\nscale =";
        for (double s : o.scale) os << " " << s;
        os << "\n";
    }
    return os.str();
}

}  // namespace longanim::media
