#pragma once

// Shared synthetic fixtures and finite-difference helpers for the test and
// acceptance suites.

#include <cmath>
#include <functional>
#include <vector>

#include "dip/composition.hpp"
#include "dip/rng.hpp"
#include "dip/synth.hpp"
#include "dip/tensor.hpp"

namespace fixtures {

using dip::Image;
using dip::real;
using dip::Rgb;
using dip::Tensor;

inline Tensor random_tensor(int c, int h, int w, std::uint64_t seed, real lo = 0.0, real hi = 1.0) {
    dip::Rng rng(seed);
    return dip::uniform_tensor(c, h, w, lo, hi, rng);
}

// Smooth random field: keeps |gradients| away from the kinks of |.| so
// central differences are valid for the exclusion loss.
inline Tensor smooth_random(int c, int h, int w, std::uint64_t seed) {
    Tensor t(c, h, w);
    dip::Rng rng(seed);
    for (int ch = 0; ch < c; ++ch) {
        real ax = rng.uniform(0.5, 2.0), ay = rng.uniform(0.5, 2.0);
        real px = rng.uniform(0.0, 6.28), py = rng.uniform(0.0, 6.28);
        real sc = rng.uniform(0.3, 0.7);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                t.at(ch, y, x) = 0.5 + sc * 0.5 * std::sin(ax * x + px) * std::cos(ay * y + py) +
                                 0.02 * rng.uniform();
    }
    return t;
}

// Field whose forward differences stay far from zero at the original and
// the 2x-pooled scale, so |.|-kinks cannot corrupt central differences.
inline Tensor kink_free_field(int c, int h, int w, std::uint64_t seed) {
    Tensor t(c, h, w);
    dip::Rng rng(seed);
    for (int ch = 0; ch < c; ++ch) {
        real bx = rng.uniform(0.04, 0.08), by = rng.uniform(0.03, 0.07);
        real d = rng.uniform(-8e-4, 8e-4), ex = rng.uniform(-5e-4, 5e-4), ey = rng.uniform(-5e-4, 5e-4);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                t.at(ch, y, x) = 0.3 + bx * x + by * y + d * x * y + ex * x * x + ey * y * y;
    }
    return t;
}

// Max relative error between analytic gradient and central differences.
inline real fd_check(const std::function<real(const Tensor&)>& f, const Tensor& x0,
                     const Tensor& analytic, real step = 1e-4) {
    Tensor x = x0;
    real worst = 0.0;
    for (long i = 0; i < x.size(); ++i) {
        real keep = x[i];
        x[i] = keep + step;
        real up = f(x);
        x[i] = keep - step;
        real dn = f(x);
        x[i] = keep;
        real fd = (up - dn) / (2.0 * step);
        real denom = std::max(std::fabs(fd) + std::fabs(analytic[i]), 1e-6);
        worst = std::max(worst, std::fabs(fd - analytic[i]) / denom);
    }
    return worst;
}

// Asymmetric 3x3 pattern whose D4 orbit has 8 distinct elements.
inline Image asymmetric3x3() {
    Image m(1, 3, 3);
    real v = 0.0;
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x)
            m.at(0, y, x) = (v += 0.1);
    return m;
}

inline bool images_equal(const Image& a, const Image& b, real tol = 0.0) {
    if (!a.same_shape(b)) return false;
    for (long i = 0; i < a.size(); ++i)
        if (std::fabs(a[i] - b[i]) > tol) return false;
    return true;
}

// Left half texture A, right half texture B, plus the ground-truth mask.
inline std::pair<Image, Image> split_texture_image(int h, int w, std::uint64_t seed) {
    Image a = dip::synth_stripes(h, w, 9.0, 0.3, {0.9, 0.75, 0.2}, {0.95, 0.9, 0.65});
    Image b = dip::synth_checker(h, w, 6, {0.1, 0.15, 0.4}, {0.2, 0.5, 0.6});
    (void)seed;
    Image img(3, h, w), gt(1, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool left = x < w / 2;
            gt.at(0, y, x) = left ? 1.0 : 0.0;
            for (int c = 0; c < 3; ++c)
                img.at(c, y, x) = left ? a.at(c, y, x) : b.at(c, y, x);
        }
    return {img, gt};
}

} // namespace fixtures
