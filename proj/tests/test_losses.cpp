#include <doctest.h>

#include <cmath>

#include "dip/losses.hpp"
#include "fixtures.hpp"

using namespace dip;

TEST_CASE("reconstruction loss basics and scalar-loop oracle") {
    Image a = fixtures::random_tensor(3, 4, 4, 1);
    CHECK(reconstruction_loss(a, a) == 0.0);

    Image zeros = Image::full(3, 4, 4, 0.0);
    Image halves = Image::full(3, 4, 4, 0.5);
    CHECK(reconstruction_loss(zeros, halves) == doctest::Approx(0.25).epsilon(1e-12));

    Image b = fixtures::random_tensor(3, 4, 4, 2);
    real oracle = 0.0;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) {
                real d = a.at(c, y, x) - b.at(c, y, x);
                oracle += d * d;
            }
    oracle /= 48.0;
    CHECK(std::fabs(reconstruction_loss(a, b) - oracle) < 1e-12);

    Image c5 = fixtures::random_tensor(3, 4, 5, 3);
    CHECK_THROWS_AS(reconstruction_loss(a, c5), ShapeError);
}

TEST_CASE("weighted mse reduces to mse under a uniform map") {
    Image a = fixtures::random_tensor(3, 5, 5, 4);
    Image b = fixtures::random_tensor(3, 5, 5, 5);
    Image w = Image::full(1, 5, 5, 1.0);
    CHECK(weighted_mse(a, b, w) == doctest::Approx(reconstruction_loss(a, b)).epsilon(1e-13));
}

namespace {

// Independent scalar-loop evaluation of the single-scale exclusion loss.
real exclusion_oracle_1scale(const Image& y1, const Image& y2) {
    const int h = y1.height(), w = y1.width(), ch = y1.channels();
    real sum_a = 0.0, sum_b = 0.0;
    long n = 0;
    auto gx = [&](const Image& im, int c, int y, int x) {
        return im.at(c, y, x + 1) - im.at(c, y, x);
    };
    auto gy = [&](const Image& im, int c, int y, int x) {
        return im.at(c, y + 1, x) - im.at(c, y, x);
    };
    for (int c = 0; c < ch; ++c) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x + 1 < w; ++x) {
                sum_a += std::fabs(gx(y1, c, y, x));
                sum_b += std::fabs(gx(y2, c, y, x));
                ++n;
            }
        for (int y = 0; y + 1 < h; ++y)
            for (int x = 0; x < w; ++x) {
                sum_a += std::fabs(gy(y1, c, y, x));
                sum_b += std::fabs(gy(y2, c, y, x));
                ++n;
            }
    }
    real ma = sum_a / n, mb = sum_b / n;
    if (ma <= 0.0 || mb <= 0.0) return 0.0;
    real l1 = std::sqrt(mb / ma), l2 = std::sqrt(ma / mb);
    real accx = 0.0, accy = 0.0;
    long nx = 0, ny = 0;
    for (int c = 0; c < ch; ++c) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x + 1 < w; ++x) {
                accx += std::tanh(l1 * std::fabs(gx(y1, c, y, x))) *
                        std::tanh(l2 * std::fabs(gx(y2, c, y, x)));
                ++nx;
            }
        for (int y = 0; y + 1 < h; ++y)
            for (int x = 0; x < w; ++x) {
                accy += std::tanh(l1 * std::fabs(gy(y1, c, y, x))) *
                        std::tanh(l2 * std::fabs(gy(y2, c, y, x)));
                ++ny;
            }
    }
    return accx / nx + accy / ny;
}

} // namespace

TEST_CASE("exclusion loss: zeros, symmetry, oracle") {
    Image y1 = fixtures::random_tensor(3, 8, 8, 6);
    Image flat = Image::full(3, 8, 8, 0.3);
    CHECK(exclusion_loss(y1, flat, 1) == 0.0);
    CHECK(exclusion_loss(flat, y1, 3) == 0.0);

    CHECK(exclusion_loss(y1, y1, 1) > 0.0);

    Image y2 = fixtures::random_tensor(3, 8, 8, 7);
    CHECK(exclusion_loss(y1, y2, 2) == doctest::Approx(exclusion_loss(y2, y1, 2)).epsilon(1e-14));

    CHECK(std::fabs(exclusion_loss(y1, y2, 1) - exclusion_oracle_1scale(y1, y2)) < 1e-10);

    // Multi-scale equals per-level sum of the oracle applied to pooled images.
    Image p1 = avg_pool2(y1), p2 = avg_pool2(y2);
    real expect = exclusion_oracle_1scale(y1, y2) + exclusion_oracle_1scale(p1, p2);
    CHECK(std::fabs(exclusion_loss(y1, y2, 2) - expect) < 1e-10);
}

TEST_CASE("exclusion loss pyramid validation") {
    Image small = fixtures::random_tensor(1, 4, 4, 8);
    CHECK_THROWS_AS(exclusion_loss(small, small, 3), ConfigError);
    CHECK_THROWS_AS(exclusion_loss(small, small, 0), ConfigError);
    Image other = fixtures::random_tensor(1, 5, 4, 9);
    CHECK_THROWS_AS(exclusion_loss(small, other, 1), ShapeError);
}

TEST_CASE("binary mask regularizer closed-form cases") {
    Image bin(1, 10, 10);
    for (long i = 0; i < bin.size(); ++i) bin[i] = i % 2 ? 1.0 : 0.0;
    CHECK(binary_mask_reg(bin) == doctest::Approx(1.0 / (50.0 + kBinaryRegEps)).epsilon(1e-12));

    Image half = Image::full(1, 10, 10, 0.5);
    CHECK(binary_mask_reg(half) == doctest::Approx(1.0 / kBinaryRegEps).epsilon(1e-12));

    Image zeros = Image::full(1, 2, 2, 0.0);
    CHECK(binary_mask_reg(zeros) == doctest::Approx(1.0 / (2.0 + kBinaryRegEps)).epsilon(1e-12));
}

TEST_CASE("binary mask regularizer strictly decreases toward binary values") {
    Image m = Image::full(1, 4, 4, 0.5);
    real prev = binary_mask_reg(m);
    for (real v : {0.6, 0.75, 0.9, 1.0}) {
        m[5] = v;
        real cur = binary_mask_reg(m);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("smoothness regularizer: affine kernels and impulse stencil oracle") {
    Image flat = Image::full(1, 7, 7, 0.42);
    CHECK(smoothness_reg(flat) == 0.0);

    Image ramp(1, 7, 9);
    for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 9; ++x) ramp.at(0, y, x) = 0.1 * x + 0.03 * y;
    CHECK(smoothness_reg(ramp) == doctest::Approx(0.0).epsilon(1e-18));

    // Centered unit impulse on 5x5: stencil responses 1,1,1,1 and -4.
    Image imp = Image::full(1, 5, 5, 0.0);
    imp.at(0, 2, 2) = 1.0;
    CHECK(smoothness_reg(imp) == doctest::Approx(20.0 / 9.0).epsilon(1e-12));

    Image tiny = Image::full(1, 2, 5, 0.0);
    CHECK_THROWS_AS(smoothness_reg(tiny), ShapeError);
    Image multi = Image::full(3, 5, 5, 0.0);
    CHECK_THROWS_AS(smoothness_reg(multi), ShapeError);
}

TEST_CASE("airlight regularizer cases and loop oracle") {
    Rgb col{0.8, 0.7, 0.6};
    Image a(3, 4, 4);
    for (int c = 0; c < 3; ++c)
        for (long i = 0; i < a.plane(); ++i) a.channel(c)[i] = col[c];
    CHECK(airlight_reg(a, col) == 0.0);

    for (long i = 0; i < a.size(); ++i) a[i] += 0.1;
    CHECK(airlight_reg(a, col) == doctest::Approx(0.01).epsilon(1e-12));

    Image r = fixtures::random_tensor(3, 4, 4, 10);
    real oracle = 0.0;
    for (int c = 0; c < 3; ++c)
        for (long i = 0; i < r.plane(); ++i) {
            real d = r.channel(c)[i] - col[c];
            oracle += d * d;
        }
    oracle /= r.size();
    CHECK(std::fabs(airlight_reg(r, col) - oracle) < 1e-12);
}

TEST_CASE("total loss assembly") {
    Image y1 = fixtures::random_tensor(3, 16, 16, 11);
    Image y2 = fixtures::random_tensor(3, 16, 16, 12);
    Image m = fixtures::random_tensor(1, 16, 16, 13);
    LayerSet ls;
    ls.y1 = y1;
    ls.y2 = y2;
    ls.mask = m;
    ls.reconstruction = mix(m, y1, y2);
    Image input = fixtures::random_tensor(3, 16, 16, 14);

    SUBCASE("alpha = beta = 0 leaves only reconstruction") {
        LossWeights w;
        w.alpha = 0.0;
        w.beta = 0.0;
        LossReport r = total_loss(input, ls, w, RegKind::kBinaryMask);
        CHECK(r.total == doctest::Approx(r.reconst));
        CHECK(r.reconst == doctest::Approx(reconstruction_loss(input, ls.reconstruction)));
    }

    SUBCASE("term-wise recomputation and alpha linearity") {
        LossWeights w;
        w.alpha = 0.1;
        w.beta = 0.5;
        LossReport r = total_loss(input, ls, w, RegKind::kBinaryMask);
        real expect = reconstruction_loss(input, ls.reconstruction) +
                      0.1 * exclusion_loss(y1, y2, w.excl_scales) + 0.5 * binary_mask_reg(m);
        CHECK(r.total == doctest::Approx(expect).epsilon(1e-13));
        CHECK(r.total == doctest::Approx(r.reconst + w.alpha * r.excl + w.beta * r.reg));

        LossWeights w2 = w;
        w2.alpha = 0.2;
        LossReport r2 = total_loss(input, ls, w2, RegKind::kBinaryMask);
        CHECK(r2.total - r2.reconst - w2.beta * r2.reg ==
              doctest::Approx(2.0 * (r.total - r.reconst - w.beta * r.reg)));
    }

    SUBCASE("perfect decomposition of a binary-mask mixture") {
        Image bm(1, 16, 16);
        for (long i = 0; i < bm.size(); ++i) bm[i] = i % 3 ? 1.0 : 0.0;
        LayerSet perfect;
        perfect.y1 = y1;
        perfect.y2 = y2;
        perfect.mask = bm;
        perfect.reconstruction = mix(bm, y1, y2);
        LossWeights w;
        w.alpha = 0.1;
        w.beta = 0.5;
        LossReport r = total_loss(perfect.reconstruction, perfect, w, RegKind::kBinaryMask);
        CHECK(r.reconst == 0.0);
        real n_half = 0.5 * bm.size();
        CHECK(r.total == doctest::Approx(0.1 * exclusion_loss(y1, y2, 3) +
                                         0.5 / (n_half + kBinaryRegEps)));
    }

    SUBCASE("dehaze regularizer needs airlight color") {
        LossWeights w;
        CHECK_THROWS_AS(total_loss(input, ls, w, RegKind::kDehaze), ConfigError);
        LayerSet dh = ls;
        dh.airlight_color = Rgb{0.8, 0.8, 0.8};
        LossReport r = total_loss(input, dh, w, RegKind::kDehaze);
        CHECK(r.reg == doctest::Approx(smoothness_reg(m) +
                                       20.0 * airlight_reg(y2, *dh.airlight_color)));
    }

    SUBCASE("hint weights switch the reconstruction to weighted mse") {
        Image w1 = fixtures::random_tensor(1, 16, 16, 15, 0.2, 1.8);
        LossWeights w;
        LossReport r = total_loss(input, ls, w, RegKind::kNone, &w1);
        CHECK(r.reconst == doctest::Approx(weighted_mse(input, ls.reconstruction, w1)));
    }

    SUBCASE("unknown selector name") {
        CHECK_THROWS_AS(parse_reg_kind("bogus"), ConfigError);
        CHECK(parse_reg_kind("binary") == RegKind::kBinaryMask);
    }
}

TEST_CASE("video total loss averages frames and keeps the breakdown") {
    std::vector<Image> frames;
    std::vector<LayerSet> sets;
    for (int f = 0; f < 3; ++f) {
        Image y1 = fixtures::random_tensor(3, 8, 8, 20 + f);
        Image y2 = fixtures::random_tensor(3, 8, 8, 30 + f);
        LayerSet ls;
        ls.y1 = y1;
        ls.y2 = y2;
        ls.alpha = 0.5;
        ls.reconstruction = mix(0.5, y1, y2);
        sets.push_back(ls);
        frames.push_back(fixtures::random_tensor(3, 8, 8, 40 + f));
    }
    LossWeights w;
    w.alpha = 0.1;
    w.beta = 0.0;
    LossReport r = total_loss(frames, sets, w, RegKind::kNone);
    REQUIRE(r.frame_reconst.size() == 3);
    real mean_rec = 0.0;
    for (int f = 0; f < 3; ++f) {
        CHECK(r.frame_reconst[f] ==
              doctest::Approx(reconstruction_loss(frames[f], sets[f].reconstruction)));
        mean_rec += r.frame_reconst[f] / 3.0;
    }
    CHECK(r.reconst == doctest::Approx(mean_rec));
    CHECK(r.total == doctest::Approx(r.reconst + 0.1 * r.excl));
}
