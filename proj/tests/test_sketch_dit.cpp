#include <catch_amalgamated.hpp>

#include <cstring>

#include "longanim/sketch_dit.hpp"

using namespace longanim;

namespace {

RunConfig small_config(std::size_t n_blocks = 4, std::size_t l_blocks = 1) {
    RunConfig c;
    c.image_size = 8;
    c.patch = 4;
    c.latent_channels = 6;
    c.width = 16;
    c.heads = 2;
    c.ffn_mult = 2;
    c.n_blocks = n_blocks;
    c.l_blocks = l_blocks;
    c.t_steps = 10;
    c.t_start = 5;
    c.text_vocab = 32;
    c.validate();
    return c;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
    return a.dims() == b.dims() && std::memcmp(a.ptr(), b.ptr(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("control input layout", "[sketchdit]") {
    Rng rng(1);
    RunConfig cfg = small_config();
    auto codec = PatchCodec::from_config(cfg);
    media::SketchSequence sk;
    for (int f = 0; f < 5; ++f) {
        media::BinaryMap b(8, 8);
        for (auto& v : b.bits) v = static_cast<std::uint8_t>(rng.below(2));
        sk.frames.push_back(b);
    }
    media::Image ref(8, 8, 90);
    ControlInput in = build_control_input(codec, sk, ref, {3, 4});
    CHECK(in.vis.cols() == 6 + 6);
    CHECK(in.visual_tokens() == 5 * 2 * 2);
    CHECK(in.sequence_length() == 2 + 5 * 2 * 2);
    // reference slot is frame 0; all later frames carry zero padding
    for (std::size_t r = 4; r < in.visual_tokens(); ++r)
        for (std::size_t j = 6; j < 12; ++j) CHECK(in.vis.at(r, j) == 0.0f);
    bool nonzero = false;
    for (std::size_t j = 6; j < 12; ++j) nonzero |= in.vis.at(0, j) != 0.0f;
    CHECK(nonzero);

    media::Image wrong(16, 8, 0);
    CHECK_THROWS_AS(build_control_input(codec, sk, wrong, {1}), ShapeError);
    media::SketchSequence bad = sk;
    bad.frames[0].bits[0] = 2;
    CHECK_THROWS_AS(build_control_input(codec, bad, ref, {1}), media::ValidationError);
}

TEST_CASE("branch init copies the first L backbone blocks", "[sketchdit]") {
    RunConfig cfg = small_config(6, 2);
    Rng rng(2);
    DitBackbone base(cfg, rng);
    ControlBranch br(base, cfg.l_blocks);
    REQUIRE(br.depth() == 2);
    for (std::size_t b = 0; b < 2; ++b) {
        nn::ParamList a, c;
        base.blocks[b].collect(a);
        br.blocks[b].collect(c);
        REQUIRE(a.size() == c.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(bit_equal(a[i]->value, c[i]->value));
            CHECK(c[i]->name.rfind("sketchdit/", 0) == 0);
        }
    }
    CHECK(bit_equal(br.in_proj.w.value, base.in_proj.w.value));
    CHECK_THROWS_AS(ControlBranch(base, 6), ContractError);
}

TEST_CASE("hybrid features", "[sketchdit]") {
    RunConfig cfg = small_config(4, 1);
    Rng rng(3);
    DitBackbone base(cfg, rng);
    ControlBranch br(base, 1);
    br.blocks[0].make_identity();
    Tensor sk = rng.normal_tensor({3, 2, 2, 6});
    Tensor ref = pad(rng.normal_tensor({1, 2, 2, 6}), 0, 0, 2, 0.0f);
    ControlInput in = build_control_input(sk, ref, {7, 8, 9});
    HybridFeature h = br.forward(base, in);
    Tensor expect = br.in_proj.forward(in.vis);
    Tensor pos = visual_positions(3, 2, 2, 16);
    for (std::size_t i = 0; i < expect.size(); ++i) expect[i] += pos[i];
    CHECK(bit_equal(h.tokens, expect));
    CHECK(bit_equal(h.tokens, br.forward(base, in).tokens));

    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t frames = 1 + rng.below(5);
        RunConfig c2 = small_config(2 * (1 + rng.below(3)), 1);
        DitBackbone b2(c2, rng);
        ControlBranch r2(b2, 1);
        ControlInput in2 = build_control_input(rng.normal_tensor({frames, 2, 2, 6}),
                                               pad(rng.normal_tensor({1, 2, 2, 6}), 0, 0, frames - 1, 0.0f), {1});
        CHECK(r2.forward(b2, in2).tokens.dims() == Shape{frames * 4, 16});
    }
}

TEST_CASE("branch gradients match finite differences", "[sketchdit]") {
    RunConfig cfg = small_config(4, 2);
    Rng rng(4);
    DitBackbone base(cfg, rng);
    ControlBranch br(base, 2);
    ControlInput in = build_control_input(rng.normal_tensor({2, 2, 2, 6}),
                                          pad(rng.normal_tensor({1, 2, 2, 6}), 0, 0, 1, 0.0f), {1, 2});
    Tensor probe = rng.normal_tensor({8, 16});
    auto loss = [&] {
        Tensor h = br.forward(base, in).tokens;
        double s = 0;
        for (std::size_t i = 0; i < h.size(); ++i) s += double(probe[i]) * h[i];
        return s;
    };
    auto ps = br.params();
    nn::zero_grads(ps);
    ControlBranch::Cache cache;
    br.forward(base, in, &cache);
    br.backward(cache, probe);
    for (auto* p : ps) {
        for (int k = 0; k < 2; ++k) {
            const std::size_t i = rng.below(p->value.size());
            const float keep = p->value[i];
            p->value[i] = keep + 1e-2f;
            const double up = loss();
            p->value[i] = keep - 1e-2f;
            const double dn = loss();
            p->value[i] = keep;
            const double num = (up - dn) / 2e-2;
            INFO(p->name);
            CHECK(std::abs(p->grad[i] - num) <= 2e-2 * std::max(1.0, std::abs(num)));
        }
    }
}

TEST_CASE("inject contract", "[sketchdit]") {
    Rng rng(5);
    const std::size_t n_text = 3, n_vis = 6, d = 8;
    Tensor z = rng.normal_tensor({n_text + n_vis, d});
    HybridFeature h{rng.normal_tensor({n_vis, d})};

    Tensor a = z;
    inject(a, h, 2, 4, 0.0f, n_text);
    CHECK(bit_equal(a, z));

    HybridFeature neg{slice(z, 0, n_text, n_vis)};
    for (auto& v : neg.tokens.data()) v = -v;
    Tensor b = z;
    inject(b, neg, 4, 4, 1.0f, n_text);
    for (std::size_t r = n_text; r < n_text + n_vis; ++r)
        for (std::size_t j = 0; j < d; ++j) CHECK(b.at(r, j) == 0.0f);
    CHECK(bit_equal(slice(b, 0, 0, n_text), slice(z, 0, 0, n_text)));

    Tensor c = z;
    CHECK_THROWS_AS(inject(c, h, 3, 4, 1.0f, n_text), ContractError);
    CHECK_THROWS_AS(inject(c, h, 6, 4, 1.0f, n_text), ContractError);
    CHECK_THROWS_AS(inject(c, h, 0, 4, 1.0f, n_text), ContractError);

    CHECK(injection_layers(42).size() == 21);
    for (auto n : injection_layers(42)) CHECK(n % 2 == 0);
    CHECK(injection_layers(42).back() == 42);
}

TEST_CASE("reference frame sampling", "[sketchdit][stat]") {
    Rng rng(6);
    CHECK(sample_reference_frame(400, 0, 17, 200, rng) == 0);
    std::vector<int> hist(200, 0);
    for (int i = 0; i < 10000; ++i) {
        const std::size_t idx = sample_reference_frame(400, 300, 17, 200, rng);
        REQUIRE(idx >= 100);
        REQUIRE(idx < 300);
        ++hist[idx - 100];
    }
    double chi2 = 0;
    for (int c : hist) chi2 += (c - 50.0) * (c - 50.0) / 50.0;
    // 99th percentile of chi-square with 199 dof (Wilson-Hilferty)
    const double df = 199, z = 2.3263478740408408;
    const double crit = df * std::pow(1 - 2 / (9 * df) + z * std::sqrt(2 / (9 * df)), 3);
    INFO("chi2 = " << chi2 << " crit = " << crit);
    CHECK(chi2 < crit);

    // a short history clips the window to the start of the video
    for (int i = 0; i < 100; ++i) CHECK(sample_reference_frame(100, 5, 17, 200, rng) < 5);
    CHECK_THROWS_AS(sample_reference_frame(10, 0, 17, 200, rng), ContractError);
}
