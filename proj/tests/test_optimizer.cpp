#include <doctest.h>

#include <cmath>

#include "dip/optimizer.hpp"
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

TEST_CASE("dihedral transforms: identity, inverses, orbit size, shapes") {
    Image base = fixtures::asymmetric3x3();
    CHECK(fixtures::images_equal(dihedral_transform(base, 0), base));

    std::vector<Image> orbit;
    for (int i = 0; i < 8; ++i) orbit.push_back(dihedral_transform(base, i));
    int distinct = 0;
    for (int i = 0; i < 8; ++i) {
        bool dup = false;
        for (int j = 0; j < i; ++j) dup = dup || fixtures::images_equal(orbit[i], orbit[j]);
        distinct += !dup;
    }
    CHECK(distinct == 8);

    for (int i = 0; i < 8; ++i) {
        Image back = dihedral_transform(orbit[i], dihedral_inverse(i));
        CHECK(fixtures::images_equal(back, base));
    }

    Image rect = fixtures::random_tensor(3, 5, 9, 1);
    Image rot = dihedral_transform(rect, 1);
    CHECK(rot.height() == 9);
    CHECK(rot.width() == 5);
    CHECK(fixtures::images_equal(dihedral_transform(rot, dihedral_inverse(1)), rect));

    CHECK_THROWS_AS(dihedral_transform(rect, 8), DomainError);
    CHECK_THROWS_AS(dihedral_inverse(-1), DomainError);
}

TEST_CASE("single_dip_fit: bookkeeping, determinism, constant-image convergence") {
    Image flat = Image::full(3, 16, 16, 0.42);
    OptimConfig oc;
    oc.iterations = 200;
    oc.seed = 5;
    oc.snapshot_every = 50;
    oc.learning_rate = 0.01; // the easiest fixture; converge well inside the budget
    GeneratorSpec spec = GeneratorSpec::make(2, 8, 2, 3, 4);

    RunState s1 = single_dip_fit(flat, oc, &spec);
    CHECK(static_cast<int>(s1.history.size()) == oc.iterations);
    for (const LossRow& r : s1.history) CHECK(std::isfinite(r.total));
    CHECK(s1.history.back().total < 1e-3);

    RunState s2 = single_dip_fit(flat, oc, &spec);
    REQUIRE(s1.history.size() == s2.history.size());
    for (std::size_t i = 0; i < s1.history.size(); ++i)
        CHECK(s1.history[i].total == s2.history[i].total);
}

TEST_CASE("optimize with zero learning rate keeps the initial outputs") {
    Image input = synth_texture(24, 24, 9);
    TaskConfig tc = tiny_task(3);
    TaskGraph graph = build_single_fit(input, tc);
    auto [before, report0] = graph.snapshot();

    OptimConfig oc;
    oc.iterations = 1;
    oc.learning_rate = 0.0;
    oc.seed = 3;
    OptimizeResult res = optimize(graph, oc);
    CHECK(fixtures::images_equal(res.layers[0].y1, before[0].y1));
    CHECK(res.state.best_total == doctest::Approx(report0.total));
}

TEST_CASE("optimize with zero iterations returns the initial state") {
    Image input = synth_texture(20, 20, 10);
    TaskConfig tc = tiny_task(4);
    TaskGraph graph = build_single_fit(input, tc);
    OptimConfig oc;
    oc.iterations = 0;
    oc.seed = 4;
    OptimizeResult res = optimize(graph, oc);
    CHECK(res.state.history.empty());
    CHECK(res.state.best_iteration == 0);
    CHECK(res.layers.size() == 1);
}

TEST_CASE("fixed seed reproduces the full loss history of a segmentation run") {
    auto [img, gt] = fixtures::split_texture_image(24, 24, 1);
    (void)gt;
    auto run = [&] {
        TaskConfig tc = tiny_task(11);
        TaskGraph g = build_segmentation(img, tc);
        OptimConfig oc;
        oc.iterations = 25;
        oc.seed = 11;
        oc.snapshot_every = 10;
        return optimize(g, oc).state;
    };
    RunState a = run();
    RunState b = run();
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].total == b.history[i].total);
        CHECK(a.history[i].reconst == b.history[i].reconst);
        CHECK(a.history[i].excl == b.history[i].excl);
        CHECK(a.history[i].reg == b.history[i].reg);
    }
    CHECK(a.best_total == b.best_total);
}

TEST_CASE("parallel and serial evaluation produce identical results") {
    auto [img, gt] = fixtures::split_texture_image(20, 20, 2);
    (void)gt;
    auto run = [&](bool parallel) {
        TaskConfig tc = tiny_task(12);
        TaskGraph g = build_segmentation(img, tc);
        g.set_parallel(parallel);
        OptimConfig oc;
        oc.iterations = 12;
        oc.seed = 12;
        oc.parallel = parallel;
        return optimize(g, oc).state;
    };
    RunState a = run(true);
    RunState b = run(false);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i)
        CHECK(a.history[i].total == b.history[i].total);
}

TEST_CASE("best snapshot total is non-increasing in the iteration budget") {
    Image input = synth_texture(20, 20, 13);
    auto best_at = [&](int iters) {
        TaskConfig tc = tiny_task(6);
        TaskGraph g = build_single_fit(input, tc);
        OptimConfig oc;
        oc.iterations = iters;
        oc.seed = 6;
        oc.snapshot_every = 5;
        return optimize(g, oc).state.best_total;
    };
    real b0 = best_at(0);
    real b1 = best_at(20);
    real b2 = best_at(60);
    CHECK(b1 <= b0);
    CHECK(b2 <= b1);
}

TEST_CASE("augmentation applies one dihedral index consistently to image and noises") {
    // Evaluating graph A under augmentation k must equal evaluating a twin
    // graph built from the k-transformed image whose noise bases are the
    // k-transformed copies of A's bases. Non-square canvas exercises the
    // dimension swap of the rotations.
    Image img = synth_texture(12, 18, 14);
    TaskConfig tc = tiny_task(14);
    TaskGraph a = build_segmentation(img, tc);
    for (int idx = 0; idx < 8; ++idx) {
        LossReport lhs = a.evaluate(0, 10, 0, idx); // iteration 0: no perturbation yet
        TaskGraph b = build_segmentation(dihedral_transform(img, idx), tc);
        for (int gi = 0; gi < b.generator_count(); ++gi)
            b.mutable_noise(gi, 0).base = dihedral_transform(a.noises(gi)[0].base, idx);
        LossReport rhs = b.evaluate(0, 10, 0, 0);
        CHECK(lhs.total == doctest::Approx(rhs.total).epsilon(1e-12));
        CHECK(lhs.reconst == doctest::Approx(rhs.reconst).epsilon(1e-12));
        CHECK(lhs.excl == doctest::Approx(rhs.excl).epsilon(1e-12));
        CHECK(lhs.reg == doctest::Approx(rhs.reg).epsilon(1e-12));
    }
}

TEST_CASE("optimize on a single-generator graph degenerates to single_dip_fit") {
    Image input = synth_texture(16, 16, 15);
    GeneratorSpec spec = GeneratorSpec::make(2, 6, 2, 3, 4);

    OptimConfig oc;
    oc.iterations = 30;
    oc.seed = 21;
    RunState fit = single_dip_fit(input, oc, &spec);

    TaskConfig tc;
    tc.seed = 21;
    tc.layer_spec = spec;
    TaskGraph graph = build_single_fit(input, tc);
    RunState direct = optimize(graph, oc).state;

    REQUIRE(fit.history.size() == direct.history.size());
    for (std::size_t i = 0; i < fit.history.size(); ++i)
        CHECK(fit.history[i].total == direct.history[i].total);
}
