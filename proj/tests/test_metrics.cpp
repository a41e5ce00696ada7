#include <catch_amalgamated.hpp>

#include <sstream>

#include "longanim/metrics.hpp"

using namespace longanim;
using namespace longanim::metrics;

namespace {

// Naive SSIM: explicit loops over every window.
double ssim_oracle(const Tensor& a, const Tensor& b, std::size_t win) {
    const std::size_t h = a.dim(0), w = a.dim(1), ch = a.dim(2);
    double total = 0;
    std::size_t count = 0;
    for (std::size_t c = 0; c < ch; ++c)
        for (std::size_t y = 0; y + win <= h; ++y)
            for (std::size_t x = 0; x + win <= w; ++x) {
                double ma = 0, mb = 0;
                for (std::size_t i = 0; i < win; ++i)
                    for (std::size_t j = 0; j < win; ++j) {
                        ma += a[((y + i) * w + x + j) * ch + c];
                        mb += b[((y + i) * w + x + j) * ch + c];
                    }
                const double n = double(win * win);
                ma /= n;
                mb /= n;
                double va = 0, vb = 0, cv = 0;
                for (std::size_t i = 0; i < win; ++i)
                    for (std::size_t j = 0; j < win; ++j) {
                        const double da = a[((y + i) * w + x + j) * ch + c] - ma;
                        const double db = b[((y + i) * w + x + j) * ch + c] - mb;
                        va += da * da;
                        vb += db * db;
                        cv += da * db;
                    }
                va /= n;
                vb /= n;
                cv /= n;
                const double c1 = 1e-4, c2 = 9e-4;
                total += (2 * ma * mb + c1) * (2 * cv + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                ++count;
            }
    return total / double(count);
}

}  // namespace

TEST_CASE("psnr", "[metrics]") {
    Rng rng(1);
    Tensor a = rng.uniform_tensor({16, 16, 3}, 0.0f, 0.8f);
    CHECK(psnr(a, a) == 100.0);
    Tensor b({16, 16, 3}, 0.25f), c({16, 16, 3}, 0.35f);
    CHECK(std::abs(psnr(b, c) - 20.0) < 1e-4);
    Tensor d = rng.uniform_tensor({16, 16, 3}, 0.0f, 1.0f);
    CHECK(psnr(a, d) == psnr(d, a));
    CHECK(psnr(a, d) >= 0.0);
    CHECK_THROWS_AS(psnr(a, Tensor({16, 15, 3})), ShapeError);
}

TEST_CASE("ssim", "[metrics]") {
    Rng rng(2);
    Tensor a = rng.uniform_tensor({20, 24, 3}, 0.0f, 1.0f);
    CHECK(std::abs(ssim(a, a) - 1.0) < 1e-12);
    Tensor checker({16, 16, 1});
    for (std::size_t y = 0; y < 16; ++y)
        for (std::size_t x = 0; x < 16; ++x) checker[y * 16 + x] = ((x / 2 + y / 2) % 2) ? 1.0f : 0.0f;
    Tensor inv = checker;
    for (auto& v : inv.data()) v = 1.0f - v;
    CHECK(ssim(checker, inv) < 0.0);
    for (int trial = 0; trial < 5; ++trial) {
        Tensor x = rng.uniform_tensor({12 + rng.below(10), 10 + rng.below(10), 3}, 0.0f, 1.0f);
        Tensor y = x;
        for (auto& v : y.data()) v = std::clamp(v + static_cast<float>(0.2 * rng.normal()), 0.0f, 1.0f);
        CHECK(std::abs(ssim(x, y) - ssim_oracle(x, y, 8)) < 1e-6);
    }
}

TEST_CASE("frequency split", "[metrics]") {
    Rng rng(3);
    Tensor ref = rng.uniform_tensor({32, 32, 3}, 0.1f, 0.8f);
    BandMse same = band_mse(ref, ref, 0.25);
    CHECK(psnr_from_mse(same.low) == 100.0);
    CHECK(psnr_from_mse(same.high) == 100.0);

    Tensor shifted = ref;
    for (auto& v : shifted.data()) v += 0.05f;
    BandMse dc = band_mse(shifted, ref, 0.25);
    CHECK(psnr_from_mse(dc.low) < 40.0);
    CHECK(psnr_from_mse(dc.high) == 100.0);

    for (double rho : {0.1, 0.25, 0.7, 1.5}) {
        Tensor gen = rng.uniform_tensor({32, 32, 3}, 0.0f, 1.0f);
        BandMse m = band_mse(gen, ref, rho);
        CHECK(std::abs(m.low + m.high - m.total) < 1e-6);
        CHECK(std::abs(m.total - mse(gen, ref)) < 1e-6);
    }

    auto low = low_mask(16, 16, 0.25);
    std::size_t lows = 0;
    for (auto v : low) lows += v;
    CHECK(low[0] == 1);
    CHECK(lows > 0);
    CHECK(lows < low.size());
    const auto all = low_mask(16, 16, 1.5);
    CHECK(std::count(all.begin(), all.end(), 1) == 256);

    BandSeries s = frequency_split_psnr({ref, shifted}, {ref, ref}, 0.25);
    CHECK(s.low[0] == 100.0);
    CHECK(s.high[1] == 100.0);
    CHECK_THROWS_AS(frequency_split_psnr({ref}, {ref, ref}, 0.25), ShapeError);
}

TEST_CASE("decay ratio", "[metrics]") {
    std::vector<double> flat(40, 30.0);
    for (double r : decay_ratio(flat, {14, 20, 40})) CHECK(r == 0.0);

    std::vector<double> drop(70, 30.0);
    for (std::size_t i = 14; i < 70; ++i) drop[i] = 27.0;
    const auto r = decay_ratio(drop, {14, 70});
    CHECK(r[0] == 0.0);
    // closed form: 0.1 * (frames past 14) / h
    CHECK(std::abs(r[1] - 0.1 * 56.0 / 70.0) < 1e-12);

    CHECK_THROWS_AS(decay_ratio(std::vector<double>(13, 1.0), {13}), ContractError);
    CHECK_THROWS_AS(decay_ratio(flat, {41}), ContractError);
}

TEST_CASE("preprocessing pipeline is pinned", "[metrics]") {
    media::Image img(6, 10);
    for (std::size_t i = 0; i < img.rgb.size(); ++i) img.rgb[i] = static_cast<std::uint8_t>((i * 37 + 11) % 256);
    Tensor t = prepare_frame(img);
    CHECK(t.dims() == Shape{256, 256, 3});
    for (float v : t.data()) {
        REQUIRE(v >= 0.0f);
        REQUIRE(v <= 1.0f);
    }
    CHECK(hash_tensor(t) == 0xfdc1cde844c7b9a7ull);
    // top-left output pixel maps inside the first source pixel (edge clamp)
    CHECK(t[0] == img.rgb[0] / 255.0f);
}

TEST_CASE("report output", "[metrics]") {
    media::FrameSequence a, b;
    for (int f = 0; f < 15; ++f) {
        a.frames.emplace_back(8, 8, static_cast<std::uint8_t>(100));
        b.frames.emplace_back(8, 8, static_cast<std::uint8_t>(100 + f));
    }
    MetricReport rep = evaluate(a, b, 0.25, 100.0, 32);
    REQUIRE(rep.frames.size() == 15);
    CHECK(rep.frames[0].psnr == 100.0);
    std::ostringstream csv, txt;
    write_csv(csv, rep);
    write_report(txt, rep);
    CHECK(csv.str().rfind("frame,psnr,ssim,psnr_low,psnr_high\n", 0) == 0);
    for (const char* key : {"mean_psnr = ", "decay_low@14 = ", "decay_high@15 = ", "rho = ", "cap_db = "})
        CHECK(txt.str().find(key) != std::string::npos);
}

TEST_CASE("color drift", "[metrics]") {
    const std::size_t n = 6;
    std::vector<std::vector<media::BinaryMap>> masks(1);
    for (std::size_t f = 0; f < n; ++f) {
        media::BinaryMap m(4, 4);
        m.at(f % 4, 1) = 1;
        m.at(2, 2) = 1;
        masks[0].push_back(m);
    }
    Tensor steady({n, 4, 4, 3}, 0.5f);
    CHECK(color_drift(steady, masks, 3) == 0.0);

    // object pixels shift by (0.1, 0, 0) after the anchor: drift 0.1 exactly in the limit
    Tensor shifted = steady;
    for (std::size_t f = 3; f < n; ++f)
        for (std::size_t i = 0; i < 16; ++i)
            if (masks[0][f].bits[i]) shifted[(f * 16 + i) * 3] += 0.1f;
    CHECK(std::abs(color_drift(shifted, masks, 3) - 0.1) < 1e-6);
    CHECK_THROWS_AS(color_drift(steady, masks, n), ContractError);
}
