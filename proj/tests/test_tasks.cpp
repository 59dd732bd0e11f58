#include <doctest.h>

#include <cmath>

#include "dip/optimizer.hpp"
#include "dip/tasks.hpp"
#include "fixtures.hpp"

using namespace dip;

namespace {

TaskConfig tiny_task(std::uint64_t seed) {
    TaskConfig tc;
    tc.seed = seed;
    tc.layer_spec = GeneratorSpec::make(2, 6, 2, 3, 4);
    tc.hints_enabled = false;
    return tc;
}

} // namespace

TEST_CASE("segmentation graph structure") {
    Image img = synth_texture(16, 16, 1);
    TaskConfig tc = tiny_task(2);
    TaskGraph g = build_segmentation(img, tc);
    CHECK(g.generator_count() == 3);
    CHECK(g.frame_count() == 1);
    CHECK(g.reg_kind() == RegKind::kBinaryMask);
    CHECK(g.weights().alpha == doctest::Approx(0.1));
    CHECK(g.weights().beta == doctest::Approx(0.5));

    auto [layers, report] = g.snapshot();
    REQUIRE(layers.size() == 1);
    const LayerSet& ls = layers[0];
    CHECK(ls.mask.channels() == 1);
    CHECK(ls.y1.same_shape(img));
    CHECK(ls.y2.same_shape(img));
    // Both layers are full images, defined at every pixel, inside (0,1).
    CHECK(ls.y1.min() > 0.0);
    CHECK(ls.y2.min() > 0.0);
    CHECK(ls.y1.max() < 1.0);
    // Reconstruction equals the mix of the snapshot layers.
    Image rec = mix(ls.mask, ls.y1, ls.y2);
    CHECK(fixtures::images_equal(rec, ls.reconstruction, 1e-12));
    CHECK(report.total == doctest::Approx(report.reconst + 0.1 * report.excl + 0.5 * report.reg));
}

TEST_CASE("task graphs are pure descriptions: same config -> same initial outputs") {
    Image img = synth_texture(16, 16, 3);
    TaskConfig tc = tiny_task(9);
    TaskGraph a = build_segmentation(img, tc);
    TaskGraph b = build_segmentation(img, tc);
    auto [la, ra] = a.snapshot();
    auto [lb, rb] = b.snapshot();
    CHECK(fixtures::images_equal(la[0].y1, lb[0].y1));
    CHECK(fixtures::images_equal(la[0].mask, lb[0].mask));
    CHECK(ra.total == rb.total);
}

TEST_CASE("video segmentation: shared generators and noise random walk") {
    std::vector<Image> frames;
    for (int f = 0; f < 4; ++f) frames.push_back(synth_texture(16, 16, 100 + f));
    TaskConfig tc = tiny_task(4);
    tc.noise_delta_ratio = 0.05;
    TaskGraph g = build_video_segmentation(frames, tc);
    CHECK(g.generator_count() == 3); // independent of frame count
    CHECK(g.frame_count() == 4);

    // ||dz|| / ||z0|| equals the configured ratio for every step.
    for (int gi = 0; gi < 3; ++gi) {
        const auto& zs = g.noises(gi);
        REQUIRE(zs.size() == 4);
        real base_norm = 0.0;
        for (long i = 0; i < zs[0].base.size(); ++i) base_norm += zs[0].base[i] * zs[0].base[i];
        base_norm = std::sqrt(base_norm);
        for (int f = 1; f < 4; ++f) {
            real dn = 0.0;
            for (long i = 0; i < zs[f].base.size(); ++i) {
                real d = zs[f].base[i] - zs[f - 1].base[i];
                dn += d * d;
            }
            CHECK(std::sqrt(dn) / base_norm == doctest::Approx(0.05).epsilon(1e-10));
        }
    }

    auto [layers, report] = g.snapshot();
    CHECK(layers.size() == 4);
    CHECK(report.frame_reconst.size() == 4);

    std::vector<Image> bad = frames;
    bad.push_back(synth_texture(12, 16, 999));
    CHECK_THROWS_AS(build_video_segmentation(bad, tiny_task(5)), ShapeError);
    CHECK_THROWS_AS(build_video_segmentation({frames[0]}, tiny_task(5)), ConfigError);
}

TEST_CASE("transparency graphs: scalar alpha, dip alpha, two mixtures") {
    Image img = synth_texture(16, 16, 6);

    TaskConfig tc = tiny_task(7);
    TaskGraph scalar = build_transparency(img, tc);
    CHECK(scalar.generator_count() == 2);
    auto [sl, sr] = scalar.snapshot();
    CHECK(sl[0].scalar_mask());
    CHECK(sl[0].alpha == doctest::Approx(0.5)); // sigmoid(0)

    tc.alpha_model = TaskConfig::AlphaModel::kDip;
    TaskGraph dip_alpha = build_transparency(img, tc);
    CHECK(dip_alpha.generator_count() == 3);
    auto [dl, dr] = dip_alpha.snapshot();
    CHECK(dl[0].scalar_mask());
    CHECK(dl[0].alpha > 0.0);
    CHECK(dl[0].alpha < 1.0);

    Image img2 = synth_texture(16, 16, 8);
    TaskGraph two = build_transparency_two(img, img2, tiny_task(9));
    CHECK(two.generator_count() == 3);
    CHECK(two.noises(2).size() == 2); // one mask DIP fed two noises
    auto [tl, tr] = two.snapshot();
    REQUIRE(tl.size() == 2);
    CHECK(fixtures::images_equal(tl[0].y1, tl[1].y1)); // shared layers
    CHECK(fixtures::images_equal(tl[0].y2, tl[1].y2));
    CHECK(tr.frame_reconst.size() == 2);
}

TEST_CASE("transparency video keeps the static layer identical across frames") {
    std::vector<Image> frames;
    for (int f = 0; f < 3; ++f) frames.push_back(synth_texture(16, 16, 200 + f));
    TaskConfig tc = tiny_task(10);
    TaskGraph g = build_transparency_video(frames, tc);
    CHECK(g.generator_count() == 2); // scalar alpha model: y1 + static y2
    CHECK(g.frame_count() == 3);
    auto [layers, report] = g.snapshot();
    REQUIRE(layers.size() == 3);
    CHECK(fixtures::images_equal(layers[0].y2, layers[1].y2));
    CHECK(fixtures::images_equal(layers[1].y2, layers[2].y2));
    for (const LayerSet& ls : layers) CHECK(ls.scalar_mask());
}

TEST_CASE("watermark graphs: bbox constraint and multi-image sharing") {
    Image img = synth_texture(20, 20, 11);
    BBox box{4, 5, 8, 6};
    TaskGraph g = build_watermark(img, box, tiny_task(12));
    CHECK(g.generator_count() == 3);
    auto [layers, report] = g.snapshot();
    const Image& m = layers[0].mask;
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x) {
            bool inside = x >= 4 && x < 12 && y >= 5 && y < 11;
            if (!inside) CHECK(m.at(0, y, x) == 0.0);
        }
    // Outside the box the reconstruction is exactly the clean layer.
    for (int c = 0; c < 3; ++c) CHECK(layers[0].reconstruction.at(c, 0, 0) ==
                                      doctest::Approx(layers[0].y1.at(c, 0, 0)));

    CHECK_THROWS_AS(build_watermark(img, BBox{15, 15, 10, 10}, tiny_task(13)), ConfigError);

    std::vector<Image> imgs{synth_texture(16, 16, 14), synth_texture(16, 16, 15),
                            synth_texture(16, 16, 16)};
    TaskGraph multi = build_watermark_multi(imgs, tiny_task(17));
    CHECK(multi.generator_count() == 5); // 3 clean + shared watermark + shared mask
    auto [ml, mr] = multi.snapshot();
    REQUIRE(ml.size() == 3);
    CHECK(fixtures::images_equal(ml[0].y2, ml[1].y2)); // bit-identical shared layer
    CHECK(fixtures::images_equal(ml[0].y2, ml[2].y2));
    CHECK(fixtures::images_equal(ml[0].mask, ml[2].mask));
}

TEST_CASE("dehaze graph: t-map bounds, reg wiring, airlight estimate") {
    Image clear = synth_texture(24, 24, 18);
    Image t = synth_smooth_field(24, 24, 19, 0.3, 1.0);
    Image a = Image::full(3, 24, 24, 0.82);
    Image hazy = mix(t, clear, a);

    TaskConfig tc = tiny_task(20);
    TaskGraph g = build_dehaze(hazy, tc);
    CHECK(g.generator_count() == 3);
    CHECK(g.reg_kind() == RegKind::kDehaze);
    CHECK(g.weights().beta == doctest::Approx(0.05));
    REQUIRE(g.airlight().has_value());

    auto [layers, report] = g.snapshot();
    const Image& tm = layers[0].mask;
    CHECK(tm.channels() == 1);
    CHECK(tm.min() >= 0.05);
    CHECK(tm.max() < 1.0);
    REQUIRE(layers[0].airlight_color.has_value());

    Image gray = Image::full(1, 8, 8, 0.5);
    CHECK_THROWS_AS(build_dehaze(gray, tiny_task(21)), ConfigError);
}

TEST_CASE("estimate_airlight: constant image, synthetic haze corner, clamping") {
    Image flat(3, 32, 32);
    Rgb c{0.31, 0.52, 0.73};
    for (int ch = 0; ch < 3; ++ch)
        for (long i = 0; i < flat.plane(); ++i) flat.channel(ch)[i] = c[ch];
    Rgb est = estimate_airlight(flat);
    for (int ch = 0; ch < 3; ++ch) CHECK(est[ch] == doctest::Approx(c[ch]).epsilon(1e-12));

    // Clear half / fully hazed half: pure airlight pixels exist where t = 0.
    const int n = 64;
    Image img(3, n, n);
    Rgb air{0.9, 0.85, 0.8};
    dip::Rng rng(22);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            bool hazed = x >= n / 2;
            for (int ch = 0; ch < 3; ++ch)
                img.at(ch, y, x) = hazed ? air[ch] : 0.25 * rng.uniform();
        }
    Rgb est2 = estimate_airlight(img);
    for (int ch = 0; ch < 3; ++ch) CHECK(std::fabs(est2[ch] - air[ch]) <= 0.02);

    for (int ch = 0; ch < 3; ++ch) {
        CHECK(est2[ch] >= 0.0);
        CHECK(est2[ch] <= 1.0);
    }
}

TEST_CASE("train_step reports a consistent composite loss") {
    auto [img, gt] = fixtures::split_texture_image(16, 16, 23);
    (void)gt;
    TaskConfig tc = tiny_task(24);
    TaskGraph g = build_segmentation(img, tc);
    g.zero_grads();
    LossReport r = g.train_step(0, 100, 0, 0);
    CHECK(std::isfinite(r.total));
    CHECK(r.total == doctest::Approx(r.reconst + g.weights().alpha * r.excl +
                                     g.weights().beta * r.reg));

    // Gradients actually arrive at the parameters.
    real norm = 0.0;
    for (ParamRef p : g.params())
        for (long i = 0; i < p.n; ++i) norm += p.grad[i] * p.grad[i];
    CHECK(norm > 0.0);
}
