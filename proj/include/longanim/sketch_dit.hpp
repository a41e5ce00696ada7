#pragma once

// Sketch control branch: a short stack of backbone-style blocks that reads
// sketch latents, the padded reference latent and the text tokens, and whose
// final visual rows are added into the even layers of the backbone.

#include <string>
#include <vector>

#include "backbone.hpp"

namespace longanim {

struct ControlInput {
    std::vector<std::size_t> text;
    Tensor vis;  // [n_vis, 2C]: sketch latent | padded reference latent
    std::size_t frames = 0, hp = 0, wp = 0;

    std::size_t visual_tokens() const { return frames * hp * wp; }
    std::size_t sequence_length() const { return text.size() + visual_tokens(); }
};

inline ControlInput build_control_input(const Tensor& sketch_latent, const Tensor& ref_padded,
                                        std::vector<std::size_t> text) {
    if (sketch_latent.ndim() != 4) throw ShapeError("control input: sketch latent must be [T,h,w,C]");
    if (sketch_latent.dims() != ref_padded.dims()) {
        throw ShapeError("control input: sketch latent " + shape_str(sketch_latent.dims()) +
                         " vs reference " + shape_str(ref_padded.dims()));
    }
    ControlInput in;
    in.frames = sketch_latent.dim(0);
    in.hp = sketch_latent.dim(1);
    in.wp = sketch_latent.dim(2);
    const std::size_t n = in.visual_tokens(), c = sketch_latent.dim(3);
    in.vis = concat({sketch_latent.reshaped({n, c}), ref_padded.reshaped({n, c})}, 1);
    in.text = std::move(text);
    return in;
}

// Encodes binary sketches and a single reference frame (both pixel space).
inline ControlInput build_control_input(const PatchCodec& codec, const media::SketchSequence& sketches,
                                        const media::Image& ref, std::vector<std::size_t> text) {
    if (sketches.size() == 0) throw ShapeError("control input: no sketches");
    if (ref.height != sketches.frames[0].height || ref.width != sketches.frames[0].width) {
        throw ShapeError("control input: reference " + std::to_string(ref.height) + "x" + std::to_string(ref.width) +
                         " does not match sketches " + std::to_string(sketches.frames[0].height) + "x" +
                         std::to_string(sketches.frames[0].width));
    }
    const Tensor sk = codec.encode(sketches_to_tensor(sketches)).data;
    const Tensor r = media::image_to_tensor(ref);
    const LatentVideo rl = codec.encode(r.reshaped({1, ref.height, ref.width, 3}));
    return build_control_input(sk, pad_reference(rl, sk.dim(0)), std::move(text));
}

struct HybridFeature {
    Tensor tokens;  // [n_vis, D]
    std::size_t segment = 0;
};

struct ControlBranch {
    std::size_t width = 0;
    nn::Linear in_proj;
    std::vector<nn::Block> blocks;

    struct Cache {
        std::vector<std::size_t> text;
        Tensor vis_in;
        std::vector<nn::Block::Cache> blocks;
    };

    ControlBranch() = default;

    // Weights start as copies of the backbone's input projection and its
    // first `l_blocks` blocks.
    ControlBranch(const DitBackbone& base, std::size_t l_blocks) : width(base.width) {
        if (l_blocks == 0 || l_blocks >= base.n_blocks) throw ContractError("control branch: need 0 < L < N");
        in_proj = base.in_proj;
        in_proj.w.name = "sketchdit/in.w";
        in_proj.b.name = "sketchdit/in.b";
        for (std::size_t i = 0; i < l_blocks; ++i) {
            nn::Block b = base.blocks[i];
            const std::string from = "backbone/", to = "sketchdit/";
            nn::ParamList ps;
            b.collect(ps);
            for (auto* p : ps) p->name.replace(0, from.size(), to);
            blocks.push_back(std::move(b));
        }
    }

    std::size_t depth() const { return blocks.size(); }

    HybridFeature forward(const DitBackbone& base, const ControlInput& in, Cache* cache = nullptr,
                          std::size_t segment = 0) const {
        if (in.vis.cols() != in_proj.in()) throw ShapeError("control branch: input channel mismatch");
        Tensor vis = in_proj.forward(in.vis);
        Tensor pos = visual_positions(in.frames, in.hp, in.wp, width);
        for (std::size_t i = 0; i < vis.size(); ++i) vis[i] += pos[i];
        Tensor x = concat({base.embed_text(in.text), vis}, 0);
        if (cache) {
            cache->text = in.text;
            cache->vis_in = in.vis;
            cache->blocks.assign(blocks.size(), {});
        }
        for (std::size_t b = 0; b < blocks.size(); ++b)
            x = blocks[b].forward(x, nullptr, 0, 0.0f, cache ? &cache->blocks[b] : nullptr);
        return {slice(x, 0, in.text.size(), in.visual_tokens()), segment};
    }

    void backward(const Cache& c, const Tensor& d_h) {
        const std::size_t n_text = c.text.size(), n_vis = d_h.rows();
        Tensor dx({n_text + n_vis, width});
        std::copy(d_h.ptr(), d_h.ptr() + d_h.size(), dx.ptr() + n_text * width);
        for (std::size_t b = blocks.size(); b-- > 0;) dx = blocks[b].backward(c.blocks[b], dx, true);
        in_proj.backward(c.vis_in, slice(dx, 0, n_text, n_vis), true, false);
    }

    nn::ParamList params() {
        nn::ParamList ps;
        in_proj.collect(ps);
        for (auto& b : blocks) b.collect(ps);
        return ps;
    }
};

// The injection set is every even layer 2, 4, ..., N (1-based).
inline std::vector<std::size_t> injection_layers(std::size_t n_blocks) {
    std::vector<std::size_t> out;
    for (std::size_t n = 2; n <= n_blocks; n += 2) out.push_back(n);
    return out;
}

// Adds gamma * h to the visual rows of a layer activation [n_text + n_vis, D].
inline void inject(Tensor& z_n, const HybridFeature& h, std::size_t n, std::size_t n_blocks, float gamma,
                   std::size_t n_text) {
    if (n == 0 || n > n_blocks || n % 2 != 0) {
        throw ContractError("inject: layer " + std::to_string(n) + " is not in the even-layer set of " +
                            std::to_string(n_blocks));
    }
    if (z_n.cols() != h.tokens.cols() || z_n.rows() != n_text + h.tokens.rows()) {
        throw ShapeError("inject: activation " + shape_str(z_n.dims()) + " vs hybrid " + shape_str(h.tokens.dims()));
    }
    if (gamma == 0.0f) return;
    const std::size_t w = z_n.cols();
    for (std::size_t r = 0; r < h.tokens.rows(); ++r)
        for (std::size_t j = 0; j < w; ++j) z_n.at(n_text + r, j) += gamma * h.tokens.at(r, j);
}

// Reference index for a training window starting at `start`: uniform over
// the W_ref frames of history before it, or the window's first frame when
// there is no history.
inline std::size_t sample_reference_frame(std::size_t video_length, std::size_t start, std::size_t span,
                                          std::size_t w_ref, Rng& rng) {
    if (video_length < span || start + span > video_length) {
        throw ContractError("reference sampling: segment [" + std::to_string(start) + ", " +
                            std::to_string(start + span) + ") exceeds video length " + std::to_string(video_length));
    }
    if (start == 0 || w_ref == 0) return start;
    const std::size_t lo = start > w_ref ? start - w_ref : 0;
    return lo + rng.below(start - lo);
}

}  // namespace longanim
