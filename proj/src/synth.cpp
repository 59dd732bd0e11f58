#include "dip/synth.hpp"

#include <cmath>

#include "dip/rng.hpp"

namespace dip {

Image synth_stripes(int h, int w, real freq, real angle, const Rgb& lo, const Rgb& hi,
                    real phase) {
    Image out(3, h, w);
    const real ca = std::cos(angle), sa = std::sin(angle);
    const real scale = 2.0 * M_PI * freq / std::max(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            real t = 0.5 + 0.5 * std::sin(scale * (ca * x + sa * y) + phase);
            for (int c = 0; c < 3; ++c)
                out.at(c, y, x) = lo[c] + t * (hi[c] - lo[c]);
        }
    return out;
}

Image synth_checker(int h, int w, int cell, const Rgb& a, const Rgb& b) {
    Image out(3, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool odd = ((x / cell) + (y / cell)) & 1;
            const Rgb& col = odd ? b : a;
            for (int c = 0; c < 3; ++c) out.at(c, y, x) = col[c];
        }
    return out;
}

Image synth_dots(int h, int w, int cell, real radius_frac, const Rgb& bg, const Rgb& fg) {
    Image out(3, h, w);
    const real r2 = radius_frac * cell * radius_frac * cell;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            real cx = (x / cell) * cell + 0.5 * cell;
            real cy = (y / cell) * cell + 0.5 * cell;
            bool inside = (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r2;
            const Rgb& col = inside ? fg : bg;
            for (int c = 0; c < 3; ++c) out.at(c, y, x) = col[c];
        }
    return out;
}

Image synth_plasma(int h, int w, std::uint64_t seed, int waves, int channels) {
    Rng rng(derive_seed(seed, 0x9157));
    Image out(channels, h, w);
    for (int c = 0; c < channels; ++c) {
        real* p = out.channel(c);
        std::vector<real> kx(waves), ky(waves), ph(waves), amp(waves);
        for (int i = 0; i < waves; ++i) {
            real f = rng.uniform(1.0, 6.0);
            real a = rng.uniform(0.0, 2.0 * M_PI);
            kx[i] = 2.0 * M_PI * f * std::cos(a) / std::max(h, w);
            ky[i] = 2.0 * M_PI * f * std::sin(a) / std::max(h, w);
            ph[i] = rng.uniform(0.0, 2.0 * M_PI);
            amp[i] = rng.uniform(0.3, 1.0);
        }
        real mn = 1e30, mx = -1e30;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                real v = 0.0;
                for (int i = 0; i < waves; ++i)
                    v += amp[i] * std::sin(kx[i] * x + ky[i] * y + ph[i]);
                p[static_cast<std::size_t>(y) * w + x] = v;
                mn = std::min(mn, v);
                mx = std::max(mx, v);
            }
        real span = mx > mn ? mx - mn : 1.0;
        for (long i = 0; i < out.plane(); ++i) p[i] = (p[i] - mn) / span;
    }
    return out;
}

Image synth_smooth_field(int h, int w, std::uint64_t seed, real lo, real hi) {
    Image f = synth_plasma(h, w, seed, 3, 1);
    for (long i = 0; i < f.size(); ++i) f[i] = lo + f[i] * (hi - lo);
    return f;
}

Image synth_texture(int h, int w, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x7e47));
    auto color = [&] {
        return Rgb{rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
    };
    switch (rng.uniform_int(4)) {
        case 0:
            return synth_stripes(h, w, rng.uniform(4.0, 14.0), rng.uniform(0.0, M_PI),
                                 color(), color(), rng.uniform(0.0, 2.0 * M_PI));
        case 1:
            return synth_checker(h, w, 2 + rng.uniform_int(8), color(), color());
        case 2:
            return synth_dots(h, w, 6 + rng.uniform_int(8), rng.uniform(0.25, 0.45),
                              color(), color());
        default:
            return synth_plasma(h, w, rng.raw());
    }
}

namespace {

void fill_rect(Image& m, int x0, int y0, int x1, int y1) {
    for (int y = std::max(0, y0); y < std::min(m.height(), y1); ++y)
        for (int x = std::max(0, x0); x < std::min(m.width(), x1); ++x)
            m.at(0, y, x) = 1.0;
}

} // namespace

Image synth_logo_mask(int h, int w) {
    Image m(1, h, w);
    // Three block glyphs across the middle band.
    const int bh = h / 3;
    const int y0 = (h - bh) / 2;
    const int gw = w / 5;
    const int t = std::max(2, bh / 5); // stroke width
    int x = gw / 2;
    // "D": left bar, top/bottom bars, right bar inset.
    fill_rect(m, x, y0, x + t, y0 + bh);
    fill_rect(m, x, y0, x + gw - t, y0 + t);
    fill_rect(m, x, y0 + bh - t, x + gw - t, y0 + bh);
    fill_rect(m, x + gw - t - t / 2, y0 + t / 2, x + gw - t / 2, y0 + bh - t / 2);
    x += gw + gw / 3;
    // "I": single bar with serifs.
    fill_rect(m, x + gw / 2 - t / 2, y0, x + gw / 2 + t / 2, y0 + bh);
    fill_rect(m, x + t / 2, y0, x + gw - t / 2, y0 + t);
    fill_rect(m, x + t / 2, y0 + bh - t, x + gw - t / 2, y0 + bh);
    x += gw + gw / 3;
    // "P": left bar plus upper bowl.
    fill_rect(m, x, y0, x + t, y0 + bh);
    fill_rect(m, x, y0, x + gw - t / 2, y0 + t);
    fill_rect(m, x, y0 + bh / 2 - t / 2, x + gw - t / 2, y0 + bh / 2 + t / 2);
    fill_rect(m, x + gw - t - t / 2, y0 + t / 2, x + gw - t / 2, y0 + bh / 2);
    return m;
}

} // namespace dip
