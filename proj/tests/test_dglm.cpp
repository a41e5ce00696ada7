#include <catch_amalgamated.hpp>

#include <cstring>

#include "longanim/dglm.hpp"

using namespace longanim;

namespace {

Tensor unit(std::size_t d, std::size_t i) {
    Tensor t({d});
    t[i] = 1.0f;
    return t;
}

std::vector<std::size_t> lengths(const std::vector<Span>& spans) {
    std::vector<std::size_t> out;
    for (const auto& s : spans) out.push_back(s.length);
    return out;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
    return a.dims() == b.dims() && std::memcmp(a.ptr(), b.ptr(), a.size() * sizeof(float)) == 0;
}

std::vector<Tensor> random_history(Rng& rng, std::size_t n, std::size_t d) {
    std::vector<Tensor> feats;
    Tensor cur = unit(d, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (rng.uniform() < 0.3) cur = unit(d, rng.below(d));
        feats.push_back(cur);
    }
    return feats;
}

MemoryCache random_cache(Rng& rng, std::size_t layers, std::size_t g, std::size_t l, std::size_t kv) {
    MemoryCache c;
    for (std::size_t m = 0; m < layers; ++m)
        c.layers.push_back({rng.normal_tensor({g, kv}), rng.normal_tensor({g, kv}), rng.normal_tensor({l, kv}),
                            rng.normal_tensor({l, kv})});
    return c;
}

// Scalar-loop cross-attention on already projected rows.
Tensor naive_fuse(const FusionStack& fs, const Tensor& h, const MemoryCache& cache) {
    Tensor x = h;
    const std::size_t d = fs.width;
    for (std::size_t m = 0; m < fs.layers(); ++m) {
        Tensor keys = fs.project_keys(m, cache.layers[m]);
        Tensor vals = fs.project_values(m, cache.layers[m]);
        const std::size_t r = keys.rows();
        auto lin = [&](const nn::Linear& L, const Tensor& in, std::size_t row, std::size_t j) {
            double s = L.b.value[j];
            for (std::size_t i = 0; i < d; ++i) s += double(in.at(row, i)) * L.w.value.at(i, j);
            return s;
        };
        Tensor next = x;
        for (std::size_t q = 0; q < x.rows(); ++q) {
            std::vector<double> qv(d), score(r);
            for (std::size_t j = 0; j < d; ++j) qv[j] = lin(fs.wq[m], x, q, j);
            double mx = -1e300;
            for (std::size_t k = 0; k < r; ++k) {
                double s = 0;
                for (std::size_t j = 0; j < d; ++j) s += qv[j] * lin(fs.wk[m], keys, k, j);
                score[k] = s / std::sqrt(double(d));
                mx = std::max(mx, score[k]);
            }
            double z = 0;
            for (auto& s : score) z += (s = std::exp(s - mx));
            for (std::size_t j = 0; j < d; ++j) {
                double acc = 0;
                for (std::size_t k = 0; k < r; ++k) acc += score[k] / z * lin(fs.wv[m], vals, k, j);
                next.at(q, j) = static_cast<float>(x.at(q, j) + acc);
            }
        }
        x = next;
    }
    return x;
}

}  // namespace

TEST_CASE("dynamic segmentation examples", "[dglm]") {
    std::vector<Tensor> same(16, unit(4, 1));
    CHECK(lengths(dynamic_segment(same, 0.1)) == std::vector<std::size_t>{8, 8});
    std::vector<Tensor> ten(10, unit(4, 1));
    CHECK(lengths(dynamic_segment(ten, 0.1)) == std::vector<std::size_t>{8, 2});
    std::vector<Tensor> alt;
    for (int i = 0; i < 12; ++i) alt.push_back(unit(4, i % 2));
    CHECK(lengths(dynamic_segment(alt, 0.1)) == std::vector<std::size_t>(6, 2));
    // calm first half, then motion
    std::vector<Tensor> mixed(4, unit(4, 0));
    for (int i = 0; i < 4; ++i) mixed.push_back(unit(4, (i % 2) + 1));
    CHECK(lengths(dynamic_segment(mixed, 0.1)) == std::vector<std::size_t>{4, 2, 2});
    CHECK_THROWS_AS(dynamic_segment({}, 0.1), ContractError);
}

TEST_CASE("segmentation tiles and respects the compression bound", "[dglm][property]") {
    Rng rng(1);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.below(60);
        auto feats = random_history(rng, n, 5);
        auto spans = dynamic_segment(feats, 0.1);
        std::size_t at = 0;
        for (std::size_t i = 0; i < spans.size(); ++i) {
            REQUIRE(spans[i].start == at);
            const auto len = spans[i].length;
            if (i + 1 < spans.size()) REQUIRE((len == 2 || len == 4 || len == 8));
            REQUIRE(len >= 1);
            at += len;
        }
        REQUIRE(at == n);
        REQUIRE(spans.size() <= (n + 1) / 2);
        std::vector<Tensor> still(n, feats[0]);
        REQUIRE(dynamic_segment(still, 0.1).size() <= (n + 7) / 8 + 1);
    }
}

TEST_CASE("frame features are unit vectors", "[dglm]") {
    Rng rng(2);
    FrameFeatureExtractor fx(4, 16, rng);
    for (int i = 0; i < 5; ++i) {
        Tensor f = fx(rng.uniform_tensor({8, 12, 3}, 0.0f, 1.0f));
        double n = 0;
        for (float v : f.data()) n += double(v) * v;
        CHECK(std::abs(std::sqrt(n) - 1.0) < 1e-6);
    }
}

TEST_CASE("summarizer recurrence", "[dglm]") {
    Rng rng(3);
    Summarizer s(4, 4, 1, 1, 1, 3, rng);
    s.a[0].fill(0.0f);
    s.b[0].fill(0.0f);
    for (std::size_t i = 0; i < 4; ++i) s.b[0].at(i, i) = 1.0f;
    std::vector<Tensor> feats = {Tensor({4}, {0.5f, -0.2f, 0.1f, 0.9f}), Tensor({4}, {0.3f, 0.4f, -0.5f, 0.1f})};
    auto sums = summarize(s, feats, {{0, 2}});
    REQUIRE(sums.size() == 1);
    for (std::size_t j = 0; j < 4; ++j) {
        const double u = (double(feats[0][j]) + feats[1][j]) / 2;
        CHECK(std::abs(sums[0].state[0][j] - std::tanh(u)) < 1e-6);
    }

    Summarizer deep(5, 6, 8, 3, 4, 5, rng);
    auto hist = random_history(rng, 24, 5);
    auto spans = dynamic_segment(hist, 0.1);
    REQUIRE(spans.size() >= 3);
    auto base = summarize(deep, hist, spans);
    const std::size_t j = 1;
    auto perturbed = hist;
    for (std::size_t f = spans[j].start; f < spans[j].start + spans[j].length; ++f) perturbed[f][0] += 0.5f;
    auto moved = summarize(deep, perturbed, spans);
    for (std::size_t g = 0; g < spans.size(); ++g) {
        for (std::size_t l = 0; l < 8; ++l) {
            if (g < j) {
                CHECK(moved[g].state[l] == base[g].state[l]);
            } else {
                CHECK(moved[g].state[l] != base[g].state[l]);
            }
        }
    }
}

TEST_CASE("memory bank grows incrementally exactly like a batch build", "[dglm][property]") {
    Rng rng(4);
    FrameFeatureExtractor fx(4, 8, rng);
    Summarizer sum(8, 8, 8, 3, 4, 6, rng);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.below(40);
        auto feats = random_history(rng, n, 8);
        MemoryBank batch(fx, sum, 0.1, 1);
        batch.append_features(feats);
        MemoryBank inc(fx, sum, 0.1, 1);
        std::size_t at = 0;
        while (at < n) {
            const std::size_t k = std::min<std::size_t>(n - at, 1 + rng.below(9));
            inc.append_features(std::vector<Tensor>(feats.begin() + at, feats.begin() + at + k));
            at += k;
        }
        REQUIRE(inc.history_frames() == n);
        CHECK(inc.spans() == batch.spans());
        CHECK(inc.spans() == dynamic_segment(feats, 0.1));
        MemoryCache a = inc.cache(), b = batch.cache();
        REQUIRE(a.layers.size() == b.layers.size());
        for (std::size_t m = 0; m < a.layers.size(); ++m) {
            CHECK(bit_equal(a.layers[m].k_g, b.layers[m].k_g));
            CHECK(bit_equal(a.layers[m].v_g, b.layers[m].v_g));
            CHECK(bit_equal(a.layers[m].k_l, b.layers[m].k_l));
            CHECK(bit_equal(a.layers[m].v_l, b.layers[m].v_l));
        }
        CHECK(inc.pending_frames() < 16);
    }
}

TEST_CASE("cache shapes", "[dglm]") {
    Rng rng(5);
    Summarizer sum(4, 6, 8, 3, 4, 5, rng);
    auto one = summarize(sum, {unit(4, 0), unit(4, 0)}, {{0, 2}});
    MemoryCache c1 = build_cache(sum, one, 1);
    REQUIRE(c1.layers.size() == 4);
    CHECK(c1.global_rows() == 1);
    CHECK(c1.local_rows() == 1);
    CHECK(bit_equal(c1.layers[0].k_g, c1.layers[0].k_l));

    auto hist = random_history(rng, 30, 4);
    auto spans = dynamic_segment(hist, 0.1);
    MemoryCache c = build_cache(sum, summarize(sum, hist, spans), 2);
    for (const auto& l : c.layers) {
        CHECK(l.k_g.rows() == spans.size());
        CHECK(l.v_g.rows() == spans.size());
        CHECK(l.k_l.rows() == std::min<std::size_t>(2, spans.size()));
        CHECK(l.k_g.cols() == 5);
    }
    CHECK_THROWS_AS(build_cache(sum, {}, 1), ContractError);

    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t kv = 1 + rng.below(9), d = 8 * (1 + rng.below(4));
        FusionStack fs(2, kv, d, rng);
        MemoryCache rc = random_cache(rng, 2, 3, 1, kv);
        CHECK(fs.project_keys(0, rc.layers[0]).dims() == Shape{4, d});
        CHECK(fs.project_values(1, rc.layers[1]).dims() == Shape{4, d});
    }
}

TEST_CASE("fusion attention", "[dglm]") {
    Rng rng(6);
    FusionStack fs(3, 5, 8, rng);
    Tensor h = rng.normal_tensor({6, 8});
    MemoryCache cache = random_cache(rng, 3, 4, 1, 5);
    CHECK(bit_equal(fs.fuse(h, cache), h));  // zero W_v

    for (auto& L : fs.wv)
        for (auto& v : L.w.value.data()) v = static_cast<float>(rng.normal() * 0.3);
    Tensor fused = fs.fuse(h, cache);
    Tensor oracle = naive_fuse(fs, h, cache);
    for (std::size_t i = 0; i < h.size(); ++i) CHECK(std::abs(fused[i] - oracle[i]) <= 1e-5 * std::max(1.0f, std::abs(oracle[i])));

    FusionStack::Cache fc;
    fs.fuse(h, cache, &fc);
    for (const auto& lc : fc.layers) {
        CHECK(lc.probs.cols() == 5);
        for (std::size_t r = 0; r < lc.probs.rows(); ++r) {
            double s = 0;
            for (std::size_t c = 0; c < lc.probs.cols(); ++c) s += lc.probs.at(r, c);
            CHECK(std::abs(s - 1.0) < 1e-6);
        }
    }

    // a single memory row gets all the weight
    FusionStack one(1, 5, 8, rng);
    for (auto& v : one.wv[0].w.value.data()) v = static_cast<float>(rng.normal());
    MemoryCache single;
    single.layers.push_back({rng.normal_tensor({1, 5}), rng.normal_tensor({1, 5}), Tensor({0, 5}), Tensor({0, 5})});
    Tensor out = one.fuse(h, single);
    Tensor vrow = one.wv[0].forward(one.project_values(0, single.layers[0]));
    for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(out.at(r, j) - (h.at(r, j) + vrow.at(0, j))) < 1e-5);

    CHECK_THROWS_AS(fs.fuse(h, random_cache(rng, 2, 4, 1, 5)), ContractError);
}

TEST_CASE("fusion rows are ordered global then local", "[dglm]") {
    Rng rng(7);
    FusionStack fs(1, 4, 8, rng);
    MemoryCache c = random_cache(rng, 1, 3, 1, 4);
    // make the local key stand out so it dominates one fixed column
    for (std::size_t j = 0; j < 4; ++j) c.layers[0].k_l.at(0, j) = 40.0f * c.layers[0].k_g.at(0, j);
    FusionStack::Cache fc;
    fs.fuse(rng.normal_tensor({2, 8}), c, &fc);
    Tensor keys = fs.project_keys(0, c.layers[0]);
    Tensor expect = fs.proj_k[0].forward(c.layers[0].k_l);
    for (std::size_t j = 0; j < 8; ++j) CHECK(keys.at(3, j) == expect.at(0, j));
}

TEST_CASE("identical global segments commute", "[dglm][property]") {
    Rng rng(8);
    FusionStack fs(2, 4, 8, rng);
    for (auto& L : fs.wv)
        for (auto& v : L.w.value.data()) v = static_cast<float>(rng.normal());
    MemoryCache c = random_cache(rng, 2, 4, 1, 4);
    for (auto& l : c.layers) {
        for (std::size_t j = 0; j < 4; ++j) {
            l.k_g.at(2, j) = l.k_g.at(0, j);
            l.v_g.at(2, j) = l.v_g.at(0, j);
        }
    }
    MemoryCache swapped = c;
    for (auto& l : swapped.layers) {
        for (std::size_t j = 0; j < 4; ++j) {
            std::swap(l.k_g.at(0, j), l.k_g.at(2, j));
            std::swap(l.v_g.at(0, j), l.v_g.at(2, j));
        }
    }
    Tensor h = rng.normal_tensor({5, 8});
    CHECK(bit_equal(fs.fuse(h, c), fs.fuse(h, swapped)));
}

TEST_CASE("fusion gradients match finite differences", "[dglm]") {
    Rng rng(9);
    FusionStack fs(2, 4, 8, rng);
    for (auto& L : fs.wv)
        for (auto& v : L.w.value.data()) v = static_cast<float>(rng.normal() * 0.5);
    MemoryCache c = random_cache(rng, 2, 3, 1, 4);
    Tensor h = rng.normal_tensor({4, 8});
    Tensor probe = rng.normal_tensor({4, 8});
    auto loss = [&] {
        Tensor y = fs.fuse(h, c);
        double s = 0;
        for (std::size_t i = 0; i < y.size(); ++i) s += double(probe[i]) * y[i];
        return s;
    };
    auto ps = fs.params();
    nn::zero_grads(ps);
    FusionStack::Cache fc;
    fs.fuse(h, c, &fc);
    Tensor dh = fs.backward(fc, probe);
    auto fd = [&](float& slot) {
        const float keep = slot;
        slot = keep + 1e-2f;
        const double up = loss();
        slot = keep - 1e-2f;
        const double dn = loss();
        slot = keep;
        return (up - dn) / 2e-2;
    };
    for (std::size_t i = 0; i < h.size(); i += 3) {
        const double num = fd(h[i]);
        CHECK(std::abs(dh[i] - num) <= 2e-2 * std::max(1.0, std::abs(num)));
    }
    for (auto* p : ps) {
        for (int k = 0; k < 2; ++k) {
            const std::size_t i = rng.below(p->value.size());
            const double num = fd(p->value[i]);
            INFO(p->name);
            CHECK(std::abs(p->grad[i] - num) <= 2e-2 * std::max(1.0, std::abs(num)));
        }
    }
}
