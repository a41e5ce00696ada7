#pragma once

// Overlapping-window schedule for long generation and the two ways the
// overlap of a new window is tied to the previous one: hard half/half
// concatenation in the early (noisy) steps, convex blending afterwards.

#include <string>
#include <vector>

#include "tensor.hpp"

namespace longanim {

struct SegmentPlan {
    std::size_t total = 0;    // frames requested
    std::size_t frames = 17;  // F
    std::size_t overlap = 4;  // C
    std::size_t t_start = 20;
    std::size_t t_steps = 50;
    std::vector<std::size_t> starts;

    double alpha() const { return 1.0 / static_cast<double>(overlap + 1); }
    std::size_t segments() const { return starts.size(); }
    std::size_t stride() const { return frames - overlap; }
    std::size_t end(std::size_t i) const { return starts.at(i) + frames; }
    bool last(std::size_t i) const { return i + 1 == starts.size(); }

    // Frames this segment owns once it is done: everything up to the next
    // segment's start (the overlap copy is redone by the next segment), or
    // up to the requested total for the final segment.
    std::size_t commit_end(std::size_t i) const { return last(i) ? total : starts.at(i + 1); }
};

inline SegmentPlan plan_segments(std::size_t total, std::size_t frames, std::size_t overlap, std::size_t t_start,
                                 std::size_t t_steps) {
    if (overlap == 0 || overlap >= frames) {
        throw ContractError("plan: need 0 < overlap < segment frames (got C=" + std::to_string(overlap) +
                            ", F=" + std::to_string(frames) + ")");
    }
    if (total < frames) {
        throw ContractError("plan: total frames " + std::to_string(total) + " shorter than one segment (" +
                            std::to_string(frames) + ")");
    }
    if (t_start > t_steps) throw ContractError("plan: t_start exceeds t_steps");
    SegmentPlan p{total, frames, overlap, t_start, t_steps, {}};
    for (std::size_t s = 0;; s += frames - overlap) {
        p.starts.push_back(s);
        if (s + frames >= total) break;
    }
    return p;
}

// Weight on the current segment at overlap positions k = 1..C.
inline std::vector<double> fusion_weights(std::size_t overlap) {
    std::vector<double> w;
    for (std::size_t k = 1; k <= overlap; ++k) w.push_back(static_cast<double>(k) / static_cast<double>(overlap + 1));
    return w;
}

namespace detail {
inline void check_overlap_shapes(const Tensor& prev_overlap, const Tensor& cur, std::size_t c) {
    if (prev_overlap.ndim() == 0 || cur.ndim() != prev_overlap.ndim() || prev_overlap.dim(0) != c || cur.dim(0) < c) {
        throw ShapeError("overlap: previous " + shape_str(prev_overlap.dims()) + " vs current " + shape_str(cur.dims()));
    }
    for (std::size_t a = 1; a < cur.ndim(); ++a)
        if (cur.dim(a) != prev_overlap.dim(a)) throw ShapeError("overlap: frame shapes differ");
}
}  // namespace detail

// prev_overlap holds the previous segment's last C latent frames at the same
// step; cur is the current segment [F, ...]. Only cur's first C frames move.
inline void blend_overlap(const Tensor& prev_overlap, Tensor& cur, std::size_t t, const SegmentPlan& plan) {
    if (t >= plan.t_start) {
        throw ContractError("blend_overlap: step " + std::to_string(t) + " is not below t_start " +
                            std::to_string(plan.t_start));
    }
    const std::size_t c = plan.overlap;
    detail::check_overlap_shapes(prev_overlap, cur, c);
    const std::size_t per = cur.size() / cur.dim(0);
    const auto w = fusion_weights(c);
    for (std::size_t k = 0; k < c; ++k) {
        // k a z_cur + (1 - k a) z_prev, written so equal inputs are a fixed point
        const float b = static_cast<float>(1.0 - w[k]);
        for (std::size_t i = 0; i < per; ++i) {
            float& z = cur[k * per + i];
            z += b * (prev_overlap[k * per + i] - z);
        }
    }
}

inline void early_concat(const Tensor& prev_overlap, Tensor& cur, const SegmentPlan& plan) {
    const std::size_t c = plan.overlap;
    detail::check_overlap_shapes(prev_overlap, cur, c);
    const std::size_t per = cur.size() / cur.dim(0);
    std::copy(prev_overlap.ptr(), prev_overlap.ptr() + (c / 2) * per, cur.ptr());
}

// Applied before every denoising step of a non-first segment.
inline void fuse_overlap_step(const Tensor& prev_overlap, Tensor& cur, std::size_t t, const SegmentPlan& plan) {
    if (t >= plan.t_start) {
        early_concat(prev_overlap, cur, plan);
    } else {
        blend_overlap(prev_overlap, cur, t, plan);
    }
}

// Mean absolute change between consecutive frames across each seam window
// [s_i - 1, s_i + C - 1], video [T, H, W, 3] in [0,1].
inline double seam_discontinuity(const Tensor& video, const SegmentPlan& plan) {
    if (video.ndim() != 4) throw ShapeError("seam: expected [T,H,W,3]");
    const std::size_t per = video.size() / video.dim(0), n = video.dim(0);
    double acc = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 1; i < plan.segments(); ++i) {
        const std::size_t s = plan.starts[i];
        for (std::size_t f = s - 1; f + 1 < std::min(n, s + plan.overlap); ++f) {
            double d = 0.0;
            for (std::size_t j = 0; j < per; ++j) d += std::abs(static_cast<double>(video[(f + 1) * per + j]) - video[f * per + j]);
            acc += d / static_cast<double>(per);
            ++pairs;
        }
    }
    return pairs ? acc / static_cast<double>(pairs) : 0.0;
}

}  // namespace longanim
