#include <catch_amalgamated.hpp>

#include <array>
#include <sstream>

#include "longanim/model.hpp"

using namespace longanim;

namespace {

RunConfig tiny() {
    RunConfig c;
    c.image_size = 16;
    c.patch = 4;
    c.latent_channels = 8;
    c.width = 32;
    c.heads = 2;
    c.n_blocks = 4;
    c.l_blocks = 2;
    c.t_steps = 8;
    c.t_start = 4;
    c.segment_frames = 5;
    c.overlap = 2;
    c.train_frames = 5;
    c.frame_feature_dim = 16;
    c.summary_dim = 16;
    c.summarizer_layers = 4;
    c.memory_first_layer = 2;
    c.memory_layers = 2;
    c.kv_dim = 16;
    c.history_max = 12;
    c.base_steps = 6;
    c.sketch_steps = 4;
    c.dglm_steps = 4;
    c.ccr_steps = 2;
    c.ccr_samples = 2;
    c.seed = 9;
    c.validate();
    return c;
}

std::vector<TrainScene> toy_data(const Model& m, std::size_t scenes = 2, std::size_t frames = 20) {
    std::vector<TrainScene> out;
    for (std::size_t s = 0; s < scenes; ++s) {
        auto r = media::generate_scene(media::random_scene(50 + s, frames, m.cfg.image_size));
        out.push_back(prepare_scene(m, r.frames, r.sketches, r.tag));
    }
    return out;
}

std::uint64_t params_hash(const nn::ParamList& ps) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (auto* p : ps) h = hash_tensor(p->value, h);
    return h;
}

std::string checkpoint_bytes(Model& m) {
    std::ostringstream os;
    save_checkpoint(m, os);
    return os.str();
}

}  // namespace

TEST_CASE("checkpoint round trip", "[model]") {
    Model m(tiny());
    m.stages = {"base", "sketchdit"};
    Rng rng(3);
    for (auto& [name, t] : m.named_tensors()) *t = rng.normal_tensor(t->dims());
    const std::string bytes = checkpoint_bytes(m);
    CHECK(bytes.rfind("LONGANIM-CHECKPOINT 1\nconfig_hash " + m.cfg.hash_hex() + "\n", 0) == 0);
    CHECK(bytes.find("tensor sketchdit/in.w\n") != std::string::npos);

    std::istringstream is(bytes);
    Model back = load_checkpoint(is);
    CHECK(back.stages == m.stages);
    CHECK(back.cfg.to_text() == m.cfg.to_text());
    auto a = m.named_tensors(), b = back.named_tensors();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].first == b[i].first);
        CHECK(*a[i].second == *b[i].second);
    }
    CHECK(checkpoint_bytes(back) == bytes);

    std::istringstream truncated(bytes.substr(0, bytes.size() - 10));
    CHECK_THROWS_AS(load_checkpoint(truncated), FormatError);
    std::string tampered = bytes;
    tampered.replace(tampered.find("seed = 9"), 8, "seed = 8");
    std::istringstream t2(tampered);
    CHECK_THROWS_AS(load_checkpoint(t2), FormatError);
    std::istringstream junk("not a checkpoint\n");
    CHECK_THROWS_AS(load_checkpoint(junk), FormatError);
}

TEST_CASE("stage order is enforced", "[model]") {
    Model m(tiny());
    const auto data = toy_data(m);
    CHECK_THROWS_AS(run_stage(m, "dglm", data), ContractError);
    CHECK_THROWS_AS(run_stage(m, "sketchdit", data), ContractError);
    run_stage(m, "base", data);
    CHECK_THROWS_AS(run_stage(m, "base", data), ContractError);
    CHECK_THROWS_AS(run_stage(m, "ccr", data), ContractError);
    CHECK_THROWS_AS(run_stage(m, "colour", data), std::invalid_argument);
}

TEST_CASE("sketch branch training leaves the backbone untouched", "[model]") {
    Model m(tiny());
    const auto data = toy_data(m);
    run_stage(m, "base", data);
    const auto before = params_hash(m.backbone.params());
    const auto branch_before = params_hash(m.branch.params());
    const auto log = run_stage(m, "sketchdit", data);
    CHECK(log.loss.size() == m.cfg.sketch_steps);
    CHECK(params_hash(m.backbone.params()) == before);
    CHECK(params_hash(m.branch.params()) != branch_before);

    const auto bb = params_hash(m.backbone.params()), br = params_hash(m.branch.params());
    run_stage(m, "dglm", data);
    CHECK(params_hash(m.backbone.params()) == bb);
    CHECK(params_hash(m.branch.params()) == br);
}

TEST_CASE("zero learning rate leaves every stage a no-op", "[model]") {
    RunConfig c = tiny();
    c.lr = 0.0;
    c.ccr_lr = 0.0;
    Model m(c);
    const auto data = toy_data(m);
    const auto initial = checkpoint_bytes(m);
    run_stage(m, "base", data);
    m.stages.clear();
    CHECK(checkpoint_bytes(m) == initial);
    m.stages = {"base"};
    for (const char* s : {"sketchdit", "dglm", "ccr"}) {
        Model copy = m;
        auto log = run_stage(m, s, data);
        m.stages.pop_back();
        INFO(s);
        CHECK(checkpoint_bytes(m) == checkpoint_bytes(copy));
        m.stages.push_back(s);
        if (std::string(s) == "ccr") CHECK(log.rewards.size() == c.ccr_steps);
    }
}

TEST_CASE("training is deterministic", "[model]") {
    auto run = [] {
        Model m(tiny());
        const auto data = toy_data(m);
        std::vector<double> trace;
        for (const auto& s : stage_names()) {
            auto log = run_stage(m, s, data);
            trace.insert(trace.end(), log.loss.begin(), log.loss.end());
            for (const auto& r : log.rewards) trace.push_back(r.reward);
        }
        return std::pair{checkpoint_bytes(m), trace};
    };
    const auto a = run(), b = run();
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
}

TEST_CASE("one-segment generation is plain sampling", "[model]") {
    Model m(tiny());
    const auto data = toy_data(m, 1);
    const TrainScene& s = data[0];
    const std::size_t f = m.cfg.segment_frames;
    const Tensor ref = slice(s.latents, 0, 0, 1);
    Rng a(4), b(4);
    const auto res = generate_long(m, s.sketch_latents, ref, s.text, f, a);
    CHECK(res.plan.segments() == 1);

    LatentVideo rl;
    rl.data = ref;
    const ConditionTokens cond{s.text, pad_reference(rl, f)};
    const HybridFeature h =
        m.branch.forward(m.backbone, build_control_input(slice(s.sketch_latents, 0, 0, f), cond.ref_padded, s.text));
    auto pred = [&](const Tensor& z, std::size_t t) {
        return m.backbone.forward(z, t, cond, &h.tokens, static_cast<float>(m.cfg.gamma));
    };
    Tensor plain = m.codec.decode(ancestral_sample(pred, m.sched, {f, 4, 4, 8}, b).z0);
    clamp01(plain);
    CHECK(res.video == plain);
}

TEST_CASE("long generation commits each frame once and feeds memory", "[model][property]") {
    Model m(tiny());
    const auto data = toy_data(m, 1, 40);
    const TrainScene& s = data[0];
    Rng rng(5);
    for (std::size_t total : {5u, 6u, 8u, 11u, 17u, 23u}) {
        Rng g(total);
        const auto res = generate_long(m, s.sketch_latents, slice(s.latents, 0, 0, 1), s.text, total, g);
        CHECK(res.video.dim(0) == total);
        REQUIRE(res.history_at_segment.size() == res.plan.segments());
        for (std::size_t i = 0; i < res.plan.segments(); ++i) CHECK(res.history_at_segment[i] == res.plan.starts[i]);
        if (res.plan.segments() > 1) {
            REQUIRE(res.last_cache);
            std::size_t covered = 0;
            for (const auto& sp : res.last_cache->spans) covered += sp.length;
            CHECK(covered == res.plan.starts.back());
        }
        for (float v : res.video.data()) REQUIRE((v >= 0.0f && v <= 1.0f));
    }
    CHECK_THROWS_AS(generate_long(m, slice(s.sketch_latents, 0, 0, 10), slice(s.latents, 0, 0, 1), s.text, 11, rng),
                    ContractError);
}

TEST_CASE("generation is deterministic and memory changes the output", "[model]") {
    Model m(tiny());
    const auto data = toy_data(m, 1, 30);
    const TrainScene& s = data[0];
    // make the fusion stack non-trivial
    Rng w(6);
    for (auto* p : m.fusion.params()) p->value = w.normal_tensor(p->value.dims(), 0.3f);
    m.backbone.out_proj.w.value = w.normal_tensor(m.backbone.out_proj.w.value.dims(), 0.3f);
    auto gen = [&](bool memory) {
        Rng g(7);
        GenerateOptions o;
        o.use_memory = memory;
        return generate_long(m, s.sketch_latents, slice(s.latents, 0, 0, 1), s.text, 14, g, o).video;
    };
    const Tensor a = gen(true), b = gen(true), off = gen(false);
    CHECK(a == b);
    CHECK(!(a == off));
    // the first segment never sees memory
    const std::size_t first = m.cfg.segment_frames - m.cfg.overlap;
    CHECK(slice(a, 0, 0, first) == slice(off, 0, 0, first));
}

TEST_CASE("base training lowers the denoising loss", "[model]") {
    RunConfig c = tiny();
    c.base_steps = 150;
    c.lr = 3e-3;
    Model m(c);
    const auto data = toy_data(m, 2);
    const auto log = run_stage(m, "base", data);
    const double head = std::accumulate(log.loss.begin(), log.loss.begin() + 30, 0.0) / 30;
    const double tail = std::accumulate(log.loss.end() - 30, log.loss.end(), 0.0) / 30;
    INFO(head << " -> " << tail);
    CHECK(tail < head);
}

TEST_CASE("color reward rises over training on a single scene", "[model][stat]") {
    // 100-step block means of the reward curve, three seeds
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        RunConfig c = tiny();
        c.base_steps = 400;
        c.sketch_steps = 200;
        c.dglm_steps = 100;
        c.ccr_steps = 300;
        c.lr = 3e-3;
        c.ccr_lr = 1e-3;
        c.seed = seed;
        Model m(c);
        auto r = media::generate_scene(media::random_scene(70 + seed, 20, c.image_size));
        const std::vector<TrainScene> data{prepare_scene(m, r.frames, r.sketches, r.tag)};
        StageLog log;
        for (const auto& s : stage_names()) log = run_stage(m, s, data);
        REQUIRE(log.rewards.size() == 300);
        std::array<double, 3> block{};
        for (std::size_t i = 0; i < 300; ++i) block[i / 100] += log.rewards[i].reward / 100;
        INFO("seed " << seed << ": " << block[0] << " " << block[1] << " " << block[2]);
        CHECK(block[0] <= block[1]);
        CHECK(block[1] <= block[2]);
    }
}
