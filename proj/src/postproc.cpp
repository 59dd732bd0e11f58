#include "dip/postproc.hpp"

#include <cmath>

namespace dip {

namespace {

Image hadamard(const Image& a, const Image& b) {
    Image out(a.channels(), a.height(), a.width());
    for (long i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

Image guided_filter_gray(const Image& g, const Image& p, const GuidedFilterParams& prm) {
    Image mean_g = box_mean(g, prm.radius);
    Image mean_p = box_mean(p, prm.radius);
    Image corr_gg = box_mean(hadamard(g, g), prm.radius);
    Image corr_gp = box_mean(hadamard(g, p), prm.radius);

    Image a(1, g.height(), g.width()), b(1, g.height(), g.width());
    for (long i = 0; i < g.plane(); ++i) {
        real var = corr_gg[i] - mean_g[i] * mean_g[i];
        real cov = corr_gp[i] - mean_g[i] * mean_p[i];
        a[i] = cov / (var + prm.eps);
        b[i] = mean_p[i] - a[i] * mean_g[i];
    }
    Image mean_a = box_mean(a, prm.radius);
    Image mean_b = box_mean(b, prm.radius);
    Image q(1, g.height(), g.width());
    for (long i = 0; i < g.plane(); ++i)
        q[i] = mean_a[i] * g[i] + mean_b[i];
    return q;
}

Image guided_filter_color(const Image& g, const Image& p, const GuidedFilterParams& prm) {
    const int h = g.height(), w = g.width();
    Image mean_p = box_mean(p, prm.radius);
    Tensor mean_g = box_mean(g, prm.radius);

    // Per-pixel 3x3 guide covariance and guide/input cross-covariance.
    Tensor corr(9, h, w), cross(3, h, w);
    {
        Tensor prods(9, h, w), gp(3, h, w);
        for (int c = 0; c < 3; ++c) {
            const real* pc = p.data();
            const real* gc = g.channel(c);
            real* o = gp.channel(c);
            for (long i = 0; i < g.plane(); ++i) o[i] = gc[i] * pc[i];
        }
        int k = 0;
        for (int c1 = 0; c1 < 3; ++c1)
            for (int c2 = 0; c2 < 3; ++c2, ++k) {
                const real* a = g.channel(c1);
                const real* b = g.channel(c2);
                real* o = prods.channel(k);
                for (long i = 0; i < g.plane(); ++i) o[i] = a[i] * b[i];
            }
        corr = box_mean(prods, prm.radius);
        cross = box_mean(gp, prm.radius);
    }

    Tensor a(3, h, w);
    Image b(1, h, w);
    for (long i = 0; i < g.plane(); ++i) {
        real s[3][3], rhs[3];
        int k = 0;
        for (int c1 = 0; c1 < 3; ++c1)
            for (int c2 = 0; c2 < 3; ++c2, ++k)
                s[c1][c2] = corr.channel(k)[i] - mean_g.channel(c1)[i] * mean_g.channel(c2)[i];
        for (int c = 0; c < 3; ++c) {
            s[c][c] += prm.eps;
            rhs[c] = cross.channel(c)[i] - mean_g.channel(c)[i] * mean_p[i];
        }
        // 3x3 solve via adjugate.
        real det = s[0][0] * (s[1][1] * s[2][2] - s[1][2] * s[2][1]) -
                   s[0][1] * (s[1][0] * s[2][2] - s[1][2] * s[2][0]) +
                   s[0][2] * (s[1][0] * s[2][1] - s[1][1] * s[2][0]);
        real inv = det != 0.0 ? 1.0 / det : 0.0;
        real ai[3];
        ai[0] = inv * (rhs[0] * (s[1][1] * s[2][2] - s[1][2] * s[2][1]) -
                       s[0][1] * (rhs[1] * s[2][2] - s[1][2] * rhs[2]) +
                       s[0][2] * (rhs[1] * s[2][1] - s[1][1] * rhs[2]));
        ai[1] = inv * (s[0][0] * (rhs[1] * s[2][2] - s[1][2] * rhs[2]) -
                       rhs[0] * (s[1][0] * s[2][2] - s[1][2] * s[2][0]) +
                       s[0][2] * (s[1][0] * rhs[2] - rhs[1] * s[2][0]));
        ai[2] = inv * (s[0][0] * (s[1][1] * rhs[2] - rhs[1] * s[2][1]) -
                       s[0][1] * (s[1][0] * rhs[2] - rhs[1] * s[2][0]) +
                       rhs[0] * (s[1][0] * s[2][1] - s[1][1] * s[2][0]));
        real bv = mean_p[i];
        for (int c = 0; c < 3; ++c) {
            a.channel(c)[i] = ai[c];
            bv -= ai[c] * mean_g.channel(c)[i];
        }
        b[i] = bv;
    }

    Tensor mean_a = box_mean(a, prm.radius);
    Image mean_b = box_mean(b, prm.radius);
    Image q(1, h, w);
    for (long i = 0; i < g.plane(); ++i) {
        real v = mean_b[i];
        for (int c = 0; c < 3; ++c) v += mean_a.channel(c)[i] * g.channel(c)[i];
        q[i] = v;
    }
    return q;
}

} // namespace

Image guided_filter(const Image& guide, const Image& input, const GuidedFilterParams& params) {
    if (input.channels() != 1)
        throw ShapeError("guided_filter: input must be single-channel");
    if (guide.height() != input.height() || guide.width() != input.width())
        throw ShapeError("guided_filter: guide/input size mismatch");
    if (guide.channels() == 1) return guided_filter_gray(guide, input, params);
    if (guide.channels() == 3) return guided_filter_color(guide, input, params);
    throw ShapeError("guided_filter: guide must have 1 or 3 channels");
}

Image binarize_mask(const Image& m, real threshold) {
    Image out(m.channels(), m.height(), m.width());
    for (long i = 0; i < m.size(); ++i) out[i] = m[i] > threshold ? 1.0 : 0.0;
    return out;
}

namespace {

// Squared mass of values outside [0,1] for one shifted channel pair.
real out_of_range_mass(const real* y1, const real* y2, long n, real c, real k) {
    real acc = 0.0;
    for (long i = 0; i < n; ++i) {
        real v1 = y1[i] - c;
        real v2 = y2[i] + c * k;
        if (v1 < 0.0) acc += v1 * v1;
        if (v1 > 1.0) acc += (v1 - 1.0) * (v1 - 1.0);
        if (v2 < 0.0) acc += v2 * v2;
        if (v2 > 1.0) acc += (v2 - 1.0) * (v2 - 1.0);
    }
    return acc;
}

} // namespace

std::tuple<Image, Image, Rgb> resolve_color_ambiguity(const Image& y1, const Image& y2,
                                                      real alpha, const Image* reference) {
    require_same_shape(y1, y2, "resolve_color_ambiguity");
    if (alpha <= 0.0 || alpha >= 1.0)
        throw DomainError("resolve_color_ambiguity: alpha must be in (0,1)");
    const real k = alpha / (1.0 - alpha);
    const long n = y1.plane();

    Rgb c{0.0, 0.0, 0.0};
    for (int ch = 0; ch < y1.channels(); ++ch) {
        const real* p1 = y1.channel(ch);
        if (reference) {
            const real* r = reference->channel(ch);
            real acc = 0.0;
            for (long i = 0; i < n; ++i) acc += p1[i] - r[i];
            c[ch] = acc / static_cast<real>(n);
            continue;
        }
        const real* p2 = y2.channel(ch);
        if (out_of_range_mass(p1, p2, n, 0.0, k) == 0.0) {
            c[ch] = 0.0;
            continue;
        }
        // Convex 1-D objective: golden-section search.
        real lo = -2.0, hi = 2.0;
        const real gr = 0.5 * (std::sqrt(5.0) - 1.0);
        real x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
        real f1 = out_of_range_mass(p1, p2, n, x1, k);
        real f2 = out_of_range_mass(p1, p2, n, x2, k);
        for (int it = 0; it < 120 && hi - lo > 1e-12; ++it) {
            if (f1 < f2) {
                hi = x2; x2 = x1; f2 = f1;
                x1 = hi - gr * (hi - lo);
                f1 = out_of_range_mass(p1, p2, n, x1, k);
            } else {
                lo = x1; x1 = x2; f1 = f2;
                x2 = lo + gr * (hi - lo);
                f2 = out_of_range_mass(p1, p2, n, x2, k);
            }
        }
        c[ch] = 0.5 * (lo + hi);
    }

    Image s1 = y1, s2 = y2;
    for (int ch = 0; ch < y1.channels(); ++ch) {
        real* p1 = s1.channel(ch);
        real* p2 = s2.channel(ch);
        for (long i = 0; i < n; ++i) {
            p1[i] -= c[ch];
            p2[i] += c[ch] * k;
        }
    }
    return {std::move(s1), std::move(s2), c};
}

} // namespace dip
