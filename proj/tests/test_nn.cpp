#include <catch_amalgamated.hpp>

#include <functional>

#include "longanim/nn.hpp"

using namespace longanim;
using namespace longanim::nn;

namespace {

// Loss = sum(w_i * y_i) with fixed random weights; checks analytic gradients
// against central differences in the inputs and in every parameter.
struct GradCheck {
    Tensor probe;
    double loss(const Tensor& y) const {
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += static_cast<double>(probe[i]) * y[i];
        return s;
    }
};

double fd(std::function<double()> f, float& slot, float h = 1e-2f) {
    const float keep = slot;
    slot = keep + h;
    const double up = f();
    slot = keep - h;
    const double dn = f();
    slot = keep;
    return (up - dn) / (2.0 * h);
}

void expect_close(double analytic, double numeric) {
    CHECK(std::abs(analytic - numeric) <= 2e-2 * std::max(1.0, std::abs(numeric)));
}

template <class Fwd>
void check_params(ParamList ps, Fwd fwd, const GradCheck& gc, Rng& rng) {
    for (auto* p : ps) {
        for (int k = 0; k < 3; ++k) {
            const std::size_t i = rng.below(p->value.size());
            const double num = fd([&] { return gc.loss(fwd()); }, p->value[i]);
            INFO(p->name << "[" << i << "]");
            expect_close(p->grad[i], num);
        }
    }
}

}  // namespace

TEST_CASE("linear and layer norm gradients", "[nn]") {
    Rng rng(1);
    Linear lin("l", 5, 4, rng);
    for (auto& v : lin.b.value.data()) v = static_cast<float>(rng.normal());
    Tensor x = rng.normal_tensor({3, 5});
    GradCheck gc{rng.normal_tensor({3, 4})};
    Tensor dx = lin.backward(x, gc.probe);
    ParamList ps;
    lin.collect(ps);
    check_params(ps, [&] { return lin.forward(x); }, gc, rng);
    for (std::size_t i = 0; i < x.size(); ++i) expect_close(dx[i], fd([&] { return gc.loss(lin.forward(x)); }, x[i]));

    LayerNorm ln("n", 6);
    for (auto& v : ln.gain.value.data()) v = static_cast<float>(1.0 + 0.3 * rng.normal());
    Tensor y = rng.normal_tensor({2, 6});
    GradCheck g2{rng.normal_tensor({2, 6})};
    Tensor dy = ln.backward(y, g2.probe);
    for (std::size_t i = 0; i < y.size(); ++i)
        expect_close(dy[i], fd([&] { return g2.loss(ln.forward(y)); }, y[i], 1e-3f));
}

TEST_CASE("attention and block gradients", "[nn]") {
    Rng rng(2);
    SelfAttention attn("a", 8, 2, rng);
    Tensor x = rng.normal_tensor({5, 8});
    GradCheck gc{rng.normal_tensor({5, 8})};
    SelfAttention::Cache cache;
    attn.forward(x, &cache);
    Tensor dx = attn.backward(cache, gc.probe);
    for (std::size_t i = 0; i < x.size(); i += 3)
        expect_close(dx[i], fd([&] { return gc.loss(attn.forward(x)); }, x[i], 1e-2f));
    ParamList ps;
    attn.collect(ps);
    check_params(ps, [&] { return attn.forward(x); }, gc, rng);

    Block blk("b", 8, 2, 2, rng);
    Tensor add = rng.normal_tensor({3, 8});
    Block::Cache bc;
    blk.forward(x, &add, 2, 0.7f, &bc);
    Tensor dx1;
    Tensor dbx = blk.backward(bc, gc.probe, true, &dx1);
    auto run = [&] { return blk.forward(x, &add, 2, 0.7f); };
    for (std::size_t i = 0; i < x.size(); i += 2) expect_close(dbx[i], fd([&] { return gc.loss(run()); }, x[i]));
    // d(loss)/d(add) = scale * dx1 on the injected rows
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t j = 0; j < 8; j += 3)
            expect_close(0.7 * dx1.at(2 + r, j), fd([&] { return gc.loss(run()); }, add.at(r, j)));
    ParamList bps;
    blk.collect(bps);
    zero_grads(bps);
    blk.forward(x, &add, 2, 0.7f, &bc);
    blk.backward(bc, gc.probe, true);
    check_params(bps, run, gc, rng);
}

TEST_CASE("identity block and attention row sums", "[nn]") {
    Rng rng(3);
    Block blk("b", 8, 2, 4, rng);
    blk.make_identity();
    Tensor x = rng.normal_tensor({6, 8});
    CHECK(blk.forward(x, nullptr, 0, 1.0f) == x);

    SelfAttention attn("a", 8, 4, rng);
    SelfAttention::Cache c;
    attn.forward(rng.normal_tensor({7, 8}, 3.0f), &c);
    for (std::size_t h = 0; h < 4; ++h)
        for (std::size_t r = 0; r < 7; ++r) {
            double s = 0.0;
            for (std::size_t k = 0; k < 7; ++k) s += c.probs[(h * 7 + r) * 7 + k];
            CHECK(std::abs(s - 1.0) <= 1e-6);
        }
}

TEST_CASE("adam reduces a quadratic", "[nn]") {
    Rng rng(4);
    Param p("p", rng.normal_tensor({4}));
    Adam opt({&p}, 0.05);
    for (int i = 0; i < 500; ++i) {
        for (std::size_t j = 0; j < 4; ++j) p.grad[j] = 2.0f * (p.value[j] - 1.0f);
        opt.step();
    }
    for (float v : p.value.data()) CHECK(std::abs(v - 1.0f) < 1e-2f);
}
