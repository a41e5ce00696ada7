#pragma once

// Frame metrics on [0,1] frames resized to a fixed square: PSNR, SSIM,
// low/high frequency-band PSNR from a radial Fourier mask, and the decay of
// prefix-mean band PSNR relative to the first 14 frames.

#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "media.hpp"
#include "tensor.hpp"

namespace longanim::metrics {

constexpr std::size_t kShortHorizon = 14;

inline double mse(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mse");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        acc += d * d;
    }
    return a.size() ? acc / static_cast<double>(a.size()) : 0.0;
}

inline double psnr_from_mse(double m, double cap_db = 100.0) {
    if (m <= 0.0) return cap_db;
    return std::min(cap_db, 10.0 * std::log10(1.0 / m));
}

inline double psnr(const Tensor& a, const Tensor& b, double cap_db = 100.0) { return psnr_from_mse(mse(a, b), cap_db); }

// Bilinear, pixel centres aligned (half-pixel convention), edge clamped.
inline Tensor resize_bilinear(const Tensor& img, std::size_t out_h, std::size_t out_w) {
    if (img.ndim() != 3) throw ShapeError("resize: expected [H,W,C]");
    const std::size_t h = img.dim(0), w = img.dim(1), ch = img.dim(2);
    Tensor out({out_h, out_w, ch});
    const double sy = static_cast<double>(h) / static_cast<double>(out_h);
    const double sx = static_cast<double>(w) / static_cast<double>(out_w);
    for (std::size_t y = 0; y < out_h; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
        const std::size_t y0 = static_cast<std::size_t>(fy), y1 = std::min(y0 + 1, h - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::size_t x = 0; x < out_w; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
            const std::size_t x0 = static_cast<std::size_t>(fx), x1 = std::min(x0 + 1, w - 1);
            const double wx = fx - static_cast<double>(x0);
            for (std::size_t c = 0; c < ch; ++c) {
                auto px = [&](std::size_t yy, std::size_t xx) { return static_cast<double>(img[(yy * w + xx) * ch + c]); };
                const double v = (1 - wy) * ((1 - wx) * px(y0, x0) + wx * px(y0, x1)) +
                                 wy * ((1 - wx) * px(y1, x0) + wx * px(y1, x1));
                out[(y * out_w + x) * ch + c] = static_cast<float>(v);
            }
        }
    }
    return out;
}

// The one preprocessing path every metric input goes through.
inline Tensor prepare_frame(const media::Image& img, std::size_t size = 256) {
    return resize_bilinear(media::image_to_tensor(img), size, size);
}

// Mean SSIM over all 8x8 windows (stride 1) and channels, uniform weights,
// C1 = 0.01^2, C2 = 0.03^2. Frames smaller than the window use one window.
inline double ssim(const Tensor& a, const Tensor& b, std::size_t window = 8) {
    require_same_shape(a, b, "ssim");
    if (a.ndim() != 3) throw ShapeError("ssim: expected [H,W,C]");
    const std::size_t h = a.dim(0), w = a.dim(1), ch = a.dim(2);
    const std::size_t wh = std::min(window, h), ww = std::min(window, w);
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03, n = static_cast<double>(wh * ww);
    // integral images of x, y, x^2, y^2, xy
    const std::size_t iw = w + 1;
    std::vector<double> sx((h + 1) * iw), sy(sx.size()), sxx(sx.size()), syy(sx.size()), sxy(sx.size());
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t c = 0; c < ch; ++c) {
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                const double va = a[(y * w + x) * ch + c], vb = b[(y * w + x) * ch + c];
                const std::size_t i = (y + 1) * iw + x + 1, up = y * iw + x + 1, left = (y + 1) * iw + x, diag = y * iw + x;
                sx[i] = va + sx[up] + sx[left] - sx[diag];
                sy[i] = vb + sy[up] + sy[left] - sy[diag];
                sxx[i] = va * va + sxx[up] + sxx[left] - sxx[diag];
                syy[i] = vb * vb + syy[up] + syy[left] - syy[diag];
                sxy[i] = va * vb + sxy[up] + sxy[left] - sxy[diag];
            }
        auto box = [&](const std::vector<double>& s, std::size_t y, std::size_t x) {
            return s[(y + wh) * iw + x + ww] - s[y * iw + x + ww] - s[(y + wh) * iw + x] + s[y * iw + x];
        };
        for (std::size_t y = 0; y + wh <= h; ++y)
            for (std::size_t x = 0; x + ww <= w; ++x) {
                const double mx = box(sx, y, x) / n, my = box(sy, y, x) / n;
                const double vx = box(sxx, y, x) / n - mx * mx, vy = box(syy, y, x) / n - my * my;
                const double cxy = box(sxy, y, x) / n - mx * my;
                total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
                ++count;
            }
    }
    return total / static_cast<double>(count);
}

// Radial frequency of bin (u, v) as a fraction of Nyquist (DC-centred).
inline double radial_fraction(std::size_t u, std::size_t v, std::size_t h, std::size_t w) {
    auto f = [](std::size_t i, std::size_t n) {
        const double k = i <= n / 2 ? static_cast<double>(i) : static_cast<double>(i) - static_cast<double>(n);
        return k / static_cast<double>(n);
    };
    const double fu = f(u, h), fv = f(v, w);
    return std::sqrt(fu * fu + fv * fv) / 0.5;
}

inline std::vector<std::uint8_t> low_mask(std::size_t h, std::size_t w, double rho) {
    std::vector<std::uint8_t> m(h * w);
    for (std::size_t u = 0; u < h; ++u)
        for (std::size_t v = 0; v < w; ++v) m[u * w + v] = radial_fraction(u, v, h, w) <= rho ? 1 : 0;
    return m;
}

struct BandMse {
    double low = 0.0, high = 0.0, total = 0.0;
};

// Masked-difference convention: the difference image is split by the mask,
// each part is transformed back, and its mean square is the band MSE.
inline BandMse band_mse(const Tensor& gen, const Tensor& ref, double rho) {
    require_same_shape(gen, ref, "band_mse");
    if (gen.ndim() != 3) throw ShapeError("band_mse: expected [H,W,C]");
    const std::size_t h = gen.dim(0), w = gen.dim(1), ch = gen.dim(2), n = h * w;
    const auto mask = low_mask(h, w, rho);
    BandMse out;
    for (std::size_t c = 0; c < ch; ++c) {
        std::vector<double> re(n), im(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            re[i] = static_cast<double>(gen[i * ch + c]) - ref[i * ch + c];
            out.total += re[i] * re[i];
        }
        dft2_inplace(re, im, h, w, false);
        std::vector<double> lr(n), li(n), hr(n), hi(n);
        for (std::size_t i = 0; i < n; ++i) {
            (mask[i] ? lr : hr)[i] = re[i];
            (mask[i] ? li : hi)[i] = im[i];
        }
        dft2_inplace(lr, li, h, w, true);
        dft2_inplace(hr, hi, h, w, true);
        for (std::size_t i = 0; i < n; ++i) {
            out.low += lr[i] * lr[i] + li[i] * li[i];
            out.high += hr[i] * hr[i] + hi[i] * hi[i];
        }
    }
    const double denom = static_cast<double>(n * ch);
    out.low /= denom;
    out.high /= denom;
    out.total /= denom;
    return out;
}

struct BandSeries {
    std::vector<double> low, high;
};

inline BandSeries frequency_split_psnr(const std::vector<Tensor>& gen, const std::vector<Tensor>& ref, double rho,
                                       double cap_db = 100.0) {
    if (gen.size() != ref.size()) {
        throw ShapeError("frequency split: " + std::to_string(gen.size()) + " generated vs " +
                         std::to_string(ref.size()) + " reference frames");
    }
    BandSeries s;
    for (std::size_t f = 0; f < gen.size(); ++f) {
        const BandMse m = band_mse(gen[f], ref[f], rho);
        s.low.push_back(psnr_from_mse(m.low, cap_db));
        s.high.push_back(psnr_from_mse(m.high, cap_db));
    }
    return s;
}

inline double prefix_mean(const std::vector<double>& s, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += s[i];
    return acc / static_cast<double>(n);
}

inline std::vector<double> decay_ratio(const std::vector<double>& series, const std::vector<std::size_t>& horizons) {
    if (series.size() < kShortHorizon) {
        throw ContractError("decay_ratio: need at least " + std::to_string(kShortHorizon) + " frames, got " +
                            std::to_string(series.size()));
    }
    const double base = prefix_mean(series, kShortHorizon);
    std::vector<double> out;
    for (auto h : horizons) {
        if (h == 0 || h > series.size()) {
            throw ContractError("decay_ratio: horizon " + std::to_string(h) + " outside [1, " +
                                std::to_string(series.size()) + "]");
        }
        out.push_back(base == 0.0 ? 0.0 : (base - prefix_mean(series, h)) / base);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report

struct FrameRow {
    double psnr = 0, ssim = 0, psnr_low = 0, psnr_high = 0;
};

struct MetricReport {
    std::vector<FrameRow> frames;
    double rho = 0.25;
    double cap_db = 100.0;
    std::size_t size = 256;
    std::vector<std::size_t> horizons;
    std::vector<double> decay_low, decay_high;
    std::string config_hash;

    double mean_of(double FrameRow::*field) const {
        double acc = 0.0;
        for (const auto& r : frames) acc += r.*field;
        return frames.empty() ? 0.0 : acc / static_cast<double>(frames.size());
    }
};

inline std::vector<std::size_t> default_horizons(std::size_t n) {
    std::vector<std::size_t> hs;
    if (n < kShortHorizon) return hs;
    for (std::size_t h = kShortHorizon; h < n; h += kShortHorizon) hs.push_back(h);
    hs.push_back(n);
    return hs;
}

inline MetricReport evaluate(const media::FrameSequence& gen, const media::FrameSequence& ref, double rho,
                             double cap_db = 100.0, std::size_t size = 256) {
    if (gen.size() != ref.size()) {
        throw ShapeError("evaluate: " + std::to_string(gen.size()) + " generated vs " + std::to_string(ref.size()) +
                         " reference frames");
    }
    MetricReport rep;
    rep.rho = rho;
    rep.cap_db = cap_db;
    rep.size = size;
    BandSeries bands;
    for (std::size_t f = 0; f < gen.size(); ++f) {
        const Tensor a = prepare_frame(gen.frames[f], size), b = prepare_frame(ref.frames[f], size);
        const BandMse m = band_mse(a, b, rho);
        FrameRow row;
        row.psnr = psnr_from_mse(m.total, cap_db);
        row.ssim = ssim(a, b);
        row.psnr_low = psnr_from_mse(m.low, cap_db);
        row.psnr_high = psnr_from_mse(m.high, cap_db);
        rep.frames.push_back(row);
        bands.low.push_back(row.psnr_low);
        bands.high.push_back(row.psnr_high);
    }
    rep.horizons = default_horizons(gen.size());
    if (!rep.horizons.empty()) {
        rep.decay_low = decay_ratio(bands.low, rep.horizons);
        rep.decay_high = decay_ratio(bands.high, rep.horizons);
    }
    return rep;
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

inline void write_csv(std::ostream& os, const MetricReport& r) {
    if (!r.config_hash.empty()) os << "# config_hash = " << r.config_hash << "\n";
    os << "frame,psnr,ssim,psnr_low,psnr_high\n";
    for (std::size_t f = 0; f < r.frames.size(); ++f) {
        const auto& row = r.frames[f];
        os << f << "," << fmt(row.psnr) << "," << fmt(row.ssim) << "," << fmt(row.psnr_low) << "," << fmt(row.psnr_high)
           << "\n";
    }
}

inline void write_report(std::ostream& os, const MetricReport& r) {
    os << "frames = " << r.frames.size() << "\n";
    os << "resolution = " << r.size << "x" << r.size << "\n";
    os << "normalization = [0,1]\n";
    os << "band_convention = masked-difference\n";
    os << "rho = " << fmt(r.rho) << "\n";
    os << "cap_db = " << fmt(r.cap_db) << "\n";
    os << "mean_psnr = " << fmt(r.mean_of(&FrameRow::psnr)) << "\n";
    os << "mean_ssim = " << fmt(r.mean_of(&FrameRow::ssim)) << "\n";
    os << "mean_psnr_low = " << fmt(r.mean_of(&FrameRow::psnr_low)) << "\n";
    os << "mean_psnr_high = " << fmt(r.mean_of(&FrameRow::psnr_high)) << "\n";
    for (std::size_t i = 0; i < r.horizons.size(); ++i) {
        os << "decay_low@" << r.horizons[i] << " = " << fmt(r.decay_low[i]) << "\n";
        os << "decay_high@" << r.horizons[i] << " = " << fmt(r.decay_high[i]) << "\n";
    }
    if (!r.config_hash.empty()) os << "config_hash = " << r.config_hash << "\n";
}

inline void write_decay_csv(std::ostream& os, const MetricReport& r) {
    if (!r.config_hash.empty()) os << "# config_hash = " << r.config_hash << "\n";
    os << "horizon,decay_low,decay_high\n";
    for (std::size_t i = 0; i < r.horizons.size(); ++i)
        os << r.horizons[i] << "," << fmt(r.decay_low[i]) << "," << fmt(r.decay_high[i]) << "\n";
}

// ---------------------------------------------------------------------------
// Object color drift: per object, the distance between its mean color in a
// frame (over that frame's mask) and its mean color over the first `anchor`
// frames, averaged over the later frames and then over objects.

inline double color_drift(const Tensor& video, const std::vector<std::vector<media::BinaryMap>>& masks,
                          std::size_t anchor) {
    if (video.ndim() != 4 || video.dim(3) != 3) throw ShapeError("color drift: expected [T,H,W,3]");
    const std::size_t n = video.dim(0), px = video.dim(1) * video.dim(2);
    if (anchor == 0 || anchor >= n) throw ContractError("color drift: anchor must leave later frames");
    auto mean_color = [&](std::size_t o, std::size_t f, std::array<double, 3>& acc) {
        const auto& m = masks[o].at(f);
        if (m.bits.size() != px) throw ShapeError("color drift: mask size mismatch");
        std::size_t cnt = 0;
        for (std::size_t i = 0; i < px; ++i) {
            if (!m.bits[i]) continue;
            for (std::size_t c = 0; c < 3; ++c) acc[c] += video[(f * px + i) * 3 + c];
            ++cnt;
        }
        return cnt;
    };
    double total = 0.0;
    std::size_t objects = 0;
    for (std::size_t o = 0; o < masks.size(); ++o) {
        if (masks[o].size() < n) throw ShapeError("color drift: fewer masks than frames");
        std::array<double, 3> base{0, 0, 0};
        std::size_t cnt = 0;
        for (std::size_t f = 0; f < anchor; ++f) cnt += mean_color(o, f, base);
        if (cnt == 0) continue;
        for (auto& v : base) v /= static_cast<double>(cnt);
        double acc = 0.0;
        std::size_t frames = 0;
        for (std::size_t f = anchor; f < n; ++f) {
            std::array<double, 3> cur{0, 0, 0};
            const std::size_t k = mean_color(o, f, cur);
            if (k == 0) continue;
            double d = 0.0;
            for (std::size_t c = 0; c < 3; ++c) {
                const double x = cur[c] / static_cast<double>(k) - base[c];
                d += x * x;
            }
            acc += std::sqrt(d);
            ++frames;
        }
        if (frames == 0) continue;
        total += acc / static_cast<double>(frames);
        ++objects;
    }
    return objects ? total / static_cast<double>(objects) : 0.0;
}

}  // namespace longanim::metrics
