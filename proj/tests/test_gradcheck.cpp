// Finite-difference validation of every loss gradient (step 1e-4, double
// precision, relative error < 1e-4 per the contract).

#include <doctest.h>

#include "dip/losses.hpp"
#include "fixtures.hpp"

using namespace dip;

TEST_CASE("reconstruction loss gradient vs central differences") {
    Tensor target = fixtures::smooth_random(3, 6, 6, 1);
    Tensor x = fixtures::smooth_random(3, 6, 6, 2);
    Tensor g;
    reconstruction_loss_grad(target, x, g);
    real err = fixtures::fd_check(
        [&](const Tensor& t) { return reconstruction_loss(target, t); }, x, g);
    CHECK(err < 1e-4);
}

TEST_CASE("weighted mse gradient vs central differences") {
    Tensor target = fixtures::smooth_random(3, 6, 6, 3);
    Tensor x = fixtures::smooth_random(3, 6, 6, 4);
    Image w(1, 6, 6);
    dip::Rng rng(5);
    for (long i = 0; i < w.size(); ++i) w[i] = 0.3 + 1.4 * rng.uniform();
    Tensor g;
    weighted_mse_grad(target, x, w, g);
    real err = fixtures::fd_check(
        [&](const Tensor& t) { return weighted_mse(target, t, w); }, x, g);
    CHECK(err < 1e-4);
}

TEST_CASE("exclusion loss gradient vs central differences (single scale)") {
    for (int channels : {1, 3}) {
        Tensor y1 = fixtures::kink_free_field(channels, 6, 6, 10 + channels);
        Tensor y2 = fixtures::kink_free_field(channels, 6, 6, 20 + channels);
        Tensor g1, g2;
        exclusion_loss_grad(y1, y2, 1, g1, g2);
        real e1 = fixtures::fd_check(
            [&](const Tensor& t) { return exclusion_loss(t, y2, 1); }, y1, g1);
        real e2 = fixtures::fd_check(
            [&](const Tensor& t) { return exclusion_loss(y1, t, 1); }, y2, g2);
        CHECK(e1 < 1e-4);
        CHECK(e2 < 1e-4);
    }
}

TEST_CASE("exclusion loss gradient vs central differences (two scales, pooled chain)") {
    Tensor y1 = fixtures::kink_free_field(1, 12, 12, 30);
    Tensor y2 = fixtures::kink_free_field(1, 12, 12, 31);
    Tensor g1, g2;
    exclusion_loss_grad(y1, y2, 2, g1, g2);
    real e1 = fixtures::fd_check(
        [&](const Tensor& t) { return exclusion_loss(t, y2, 2); }, y1, g1);
    real e2 = fixtures::fd_check(
        [&](const Tensor& t) { return exclusion_loss(y1, t, 2); }, y2, g2);
    CHECK(e1 < 1e-4);
    CHECK(e2 < 1e-4);
}

TEST_CASE("binary mask regularizer gradient vs central differences") {
    // Values away from the |m - 0.5| kink.
    Image m(1, 6, 6);
    dip::Rng rng(40);
    for (long i = 0; i < m.size(); ++i)
        m[i] = rng.uniform() < 0.5 ? rng.uniform(0.05, 0.42) : rng.uniform(0.58, 0.95);
    Tensor g;
    binary_mask_reg_grad(m, g);
    real err = fixtures::fd_check([&](const Tensor& t) { return binary_mask_reg(t); }, m, g);
    CHECK(err < 1e-4);
}

TEST_CASE("smoothness regularizer gradient vs central differences") {
    Tensor t = fixtures::smooth_random(1, 6, 6, 50);
    Tensor g;
    smoothness_reg_grad(t, g);
    real err = fixtures::fd_check([&](const Tensor& x) { return smoothness_reg(x); }, t, g);
    CHECK(err < 1e-4);
}

TEST_CASE("airlight regularizer gradient vs central differences") {
    Tensor a = fixtures::smooth_random(3, 6, 6, 60);
    Rgb col{0.75, 0.8, 0.85};
    Tensor g;
    airlight_reg_grad(a, col, g);
    real err = fixtures::fd_check([&](const Tensor& x) { return airlight_reg(x, col); }, a, g);
    CHECK(err < 1e-4);
}
