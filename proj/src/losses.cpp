#include "dip/losses.hpp"

#include <cmath>

namespace dip {

RegKind parse_reg_kind(const std::string& name) {
    if (name == "none") return RegKind::kNone;
    if (name == "binary") return RegKind::kBinaryMask;
    if (name == "dehaze") return RegKind::kDehaze;
    throw ConfigError("unknown regularizer selector: " + name);
}

real reconstruction_loss(const Image& target, const Image& rec) {
    require_same_shape(target, rec, "reconstruction_loss");
    const real* t = target.data();
    const real* r = rec.data();
    real acc = 0.0;
    for (long i = 0; i < target.size(); ++i) {
        real d = t[i] - r[i];
        acc += d * d;
    }
    return acc / static_cast<real>(target.size());
}

real reconstruction_loss_grad(const Image& target, const Image& rec, Tensor& g_rec) {
    require_same_shape(target, rec, "reconstruction_loss");
    g_rec = Tensor(rec.channels(), rec.height(), rec.width());
    const real* t = target.data();
    const real* r = rec.data();
    real* g = g_rec.data();
    const real inv = 1.0 / static_cast<real>(target.size());
    real acc = 0.0;
    for (long i = 0; i < target.size(); ++i) {
        real d = r[i] - t[i];
        acc += d * d;
        g[i] = 2.0 * inv * d;
    }
    return acc * inv;
}

real weighted_mse(const Image& target, const Image& y, const Image& weight) {
    require_same_shape(target, y, "weighted_mse");
    if (weight.channels() != 1 || weight.height() != y.height() || weight.width() != y.width())
        throw ShapeError("weighted_mse: weight must be a 1-channel map");
    const long plane = y.plane();
    const real* w = weight.data();
    real acc = 0.0;
    for (int c = 0; c < y.channels(); ++c) {
        const real* t = target.channel(c);
        const real* p = y.channel(c);
        for (long i = 0; i < plane; ++i) {
            real d = t[i] - p[i];
            acc += w[i] * d * d;
        }
    }
    return acc / static_cast<real>(y.size());
}

real weighted_mse_grad(const Image& target, const Image& y, const Image& weight, Tensor& g_y) {
    real loss = weighted_mse(target, y, weight);
    g_y = Tensor(y.channels(), y.height(), y.width());
    const long plane = y.plane();
    const real inv = 2.0 / static_cast<real>(y.size());
    const real* w = weight.data();
    for (int c = 0; c < y.channels(); ++c) {
        const real* t = target.channel(c);
        const real* p = y.channel(c);
        real* g = g_y.channel(c);
        for (long i = 0; i < plane; ++i)
            g[i] = inv * w[i] * (p[i] - t[i]);
    }
    return loss;
}

namespace {

inline real sgn(real v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

struct GradPair {
    Tensor gx; // (c, h, w-1) forward differences along x
    Tensor gy; // (c, h-1, w) forward differences along y
};

GradPair forward_diff(const Tensor& t) {
    GradPair g;
    g.gx = Tensor(t.channels(), t.height(), t.width() - 1);
    g.gy = Tensor(t.channels(), t.height() - 1, t.width());
    for (int c = 0; c < t.channels(); ++c) {
        const real* s = t.channel(c);
        real* px = g.gx.channel(c);
        real* py = g.gy.channel(c);
        const int h = t.height(), w = t.width();
        for (int y = 0; y < h; ++y)
            for (int x = 0; x + 1 < w; ++x)
                px[static_cast<std::size_t>(y) * (w - 1) + x] =
                    s[static_cast<std::size_t>(y) * w + x + 1] - s[static_cast<std::size_t>(y) * w + x];
        for (int y = 0; y + 1 < h; ++y)
            for (int x = 0; x < w; ++x)
                py[static_cast<std::size_t>(y) * w + x] =
                    s[static_cast<std::size_t>(y + 1) * w + x] - s[static_cast<std::size_t>(y) * w + x];
    }
    return g;
}

// Scatter of d(loss)/d(forward diff) back to the image.
void diff_backward(const Tensor& sx, const Tensor& sy, Tensor& g) {
    const int h = g.height(), w = g.width();
    for (int c = 0; c < g.channels(); ++c) {
        real* gp = g.channel(c);
        const real* px = sx.channel(c);
        const real* py = sy.channel(c);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x + 1 < w; ++x) {
                real v = px[static_cast<std::size_t>(y) * (w - 1) + x];
                gp[static_cast<std::size_t>(y) * w + x + 1] += v;
                gp[static_cast<std::size_t>(y) * w + x] -= v;
            }
        for (int y = 0; y + 1 < h; ++y)
            for (int x = 0; x < w; ++x) {
                real v = py[static_cast<std::size_t>(y) * w + x];
                gp[static_cast<std::size_t>(y + 1) * w + x] += v;
                gp[static_cast<std::size_t>(y) * w + x] -= v;
            }
    }
}

void check_pyramid(const Image& y1, const Image& y2, int n_scales) {
    require_same_shape(y1, y2, "exclusion_loss");
    if (n_scales < 1)
        throw ConfigError("exclusion_loss: n_scales must be >= 1");
    int h = y1.height(), w = y1.width();
    for (int n = 1; n < n_scales; ++n) { h /= 2; w /= 2; }
    if (h < 2 || w < 2)
        throw ConfigError("exclusion_loss: image too small for " +
                          std::to_string(n_scales) + " scales");
}

// One pyramid level. When g1/g2 are non-null they receive the gradient at
// this level's resolution (overwritten).
real exclusion_level(const Tensor& u, const Tensor& v, Tensor* g1, Tensor* g2) {
    GradPair du = forward_diff(u);
    GradPair dv = forward_diff(v);
    const long nx = du.gx.size(), ny = du.gy.size();
    const real n_all = static_cast<real>(nx + ny);

    real sum_a = 0.0, sum_b = 0.0;
    for (long i = 0; i < nx; ++i) { sum_a += std::fabs(du.gx[i]); sum_b += std::fabs(dv.gx[i]); }
    for (long i = 0; i < ny; ++i) { sum_a += std::fabs(du.gy[i]); sum_b += std::fabs(dv.gy[i]); }
    const real ma = sum_a / n_all, mb = sum_b / n_all;

    real l1 = 1.0, l2 = 1.0;
    const bool degenerate = (ma <= 0.0 || mb <= 0.0);
    if (!degenerate) {
        l1 = std::sqrt(mb / ma);
        l2 = std::sqrt(ma / mb);
    }

    real loss = 0.0;
    real dl_dl1 = 0.0, dl_dl2 = 0.0;
    Tensor sa_x, sa_y, sb_x, sb_y;
    if (g1) {
        sa_x = Tensor(du.gx.channels(), du.gx.height(), du.gx.width());
        sa_y = Tensor(du.gy.channels(), du.gy.height(), du.gy.width());
        sb_x = Tensor(dv.gx.channels(), dv.gx.height(), dv.gx.width());
        sb_y = Tensor(dv.gy.channels(), dv.gy.height(), dv.gy.width());
    }

    auto accumulate = [&](const Tensor& da, const Tensor& db, Tensor* sa, Tensor* sb, long n_dir) {
        const real inv = 1.0 / static_cast<real>(n_dir);
        for (long i = 0; i < n_dir; ++i) {
            real a = std::fabs(da[i]), b = std::fabs(db[i]);
            real ta = std::tanh(l1 * a), tb = std::tanh(l2 * b);
            loss += inv * ta * tb;
            if (g1) {
                real sech_a = 1.0 - ta * ta, sech_b = 1.0 - tb * tb;
                (*sa)[i] = inv * l1 * sech_a * tb;
                (*sb)[i] = inv * l2 * sech_b * ta;
                dl_dl1 += inv * a * sech_a * tb;
                dl_dl2 += inv * b * sech_b * ta;
            }
        }
    };
    accumulate(du.gx, dv.gx, g1 ? &sa_x : nullptr, g1 ? &sb_x : nullptr, nx);
    accumulate(du.gy, dv.gy, g1 ? &sa_y : nullptr, g1 ? &sb_y : nullptr, ny);

    if (g1) {
        // Chain through the normalizers l1, l2; each |grad| sample shifts the
        // per-layer mean magnitude by 1/n_all.
        real off_a = 0.0, off_b = 0.0;
        if (!degenerate) {
            off_a = (dl_dl1 * (-l1 / (2.0 * ma)) + dl_dl2 * (l2 / (2.0 * ma))) / n_all;
            off_b = (dl_dl2 * (-l2 / (2.0 * mb)) + dl_dl1 * (l1 / (2.0 * mb))) / n_all;
        }
        // d|g|/dg = sign(g); sign(0) = 0.
        for (long i = 0; i < nx; ++i) {
            sa_x[i] = (sa_x[i] + off_a) * sgn(du.gx[i]);
            sb_x[i] = (sb_x[i] + off_b) * sgn(dv.gx[i]);
        }
        for (long i = 0; i < ny; ++i) {
            sa_y[i] = (sa_y[i] + off_a) * sgn(du.gy[i]);
            sb_y[i] = (sb_y[i] + off_b) * sgn(dv.gy[i]);
        }
        *g1 = Tensor(u.channels(), u.height(), u.width());
        *g2 = Tensor(v.channels(), v.height(), v.width());
        diff_backward(sa_x, sa_y, *g1);
        diff_backward(sb_x, sb_y, *g2);
    }
    return loss;
}

} // namespace

real exclusion_loss(const Image& y1, const Image& y2, int n_scales) {
    check_pyramid(y1, y2, n_scales);
    Tensor u = y1, v = y2;
    real loss = 0.0;
    for (int n = 0; n < n_scales; ++n) {
        if (n > 0) { u = avg_pool2(u); v = avg_pool2(v); }
        loss += exclusion_level(u, v, nullptr, nullptr);
    }
    return loss;
}

real exclusion_loss_grad(const Image& y1, const Image& y2, int n_scales,
                         Tensor& g1, Tensor& g2) {
    check_pyramid(y1, y2, n_scales);
    std::vector<Tensor> us{y1}, vs{y2};
    for (int n = 1; n < n_scales; ++n) {
        us.push_back(avg_pool2(us.back()));
        vs.push_back(avg_pool2(vs.back()));
    }
    real loss = 0.0;
    std::vector<Tensor> gu(n_scales), gv(n_scales);
    for (int n = 0; n < n_scales; ++n)
        loss += exclusion_level(us[n], vs[n], &gu[n], &gv[n]);
    // Fold level gradients back up the pyramid.
    for (int n = n_scales - 1; n >= 1; --n) {
        gu[n - 1] += avg_pool2_backward(gu[n], us[n - 1].height(), us[n - 1].width());
        gv[n - 1] += avg_pool2_backward(gv[n], vs[n - 1].height(), vs[n - 1].width());
    }
    g1 = std::move(gu[0]);
    g2 = std::move(gv[0]);
    return loss;
}

real binary_mask_reg(const Image& m) {
    real s = 0.0;
    const real* p = m.data();
    for (long i = 0; i < m.size(); ++i) s += std::fabs(p[i] - 0.5);
    return 1.0 / (s + kBinaryRegEps);
}

real binary_mask_reg_grad(const Image& m, Tensor& g) {
    real s = 0.0;
    const real* p = m.data();
    for (long i = 0; i < m.size(); ++i) s += std::fabs(p[i] - 0.5);
    const real denom = s + kBinaryRegEps;
    const real scale = -1.0 / (denom * denom);
    g = Tensor(m.channels(), m.height(), m.width());
    real* gp = g.data();
    for (long i = 0; i < m.size(); ++i) gp[i] = scale * sgn(p[i] - 0.5);
    return 1.0 / denom;
}

namespace {

void check_laplacian_input(const Image& t) {
    if (t.channels() != 1)
        throw ShapeError("smoothness_reg: mask must be single-channel");
    if (t.height() < 3 || t.width() < 3)
        throw ShapeError("smoothness_reg: image smaller than 3x3");
}

} // namespace

real smoothness_reg(const Image& t) {
    check_laplacian_input(t);
    const int h = t.height(), w = t.width();
    const real* p = t.data();
    real acc = 0.0;
    for (int y = 1; y + 1 < h; ++y)
        for (int x = 1; x + 1 < w; ++x) {
            real lap = p[static_cast<std::size_t>(y - 1) * w + x] + p[static_cast<std::size_t>(y + 1) * w + x] +
                       p[static_cast<std::size_t>(y) * w + x - 1] + p[static_cast<std::size_t>(y) * w + x + 1] -
                       4.0 * p[static_cast<std::size_t>(y) * w + x];
            acc += lap * lap;
        }
    return acc / (static_cast<real>(h - 2) * (w - 2));
}

real smoothness_reg_grad(const Image& t, Tensor& g) {
    check_laplacian_input(t);
    const int h = t.height(), w = t.width();
    const real* p = t.data();
    g = Tensor(1, h, w);
    real* gp = g.data();
    const real inv = 1.0 / (static_cast<real>(h - 2) * (w - 2));
    real acc = 0.0;
    for (int y = 1; y + 1 < h; ++y)
        for (int x = 1; x + 1 < w; ++x) {
            real lap = p[static_cast<std::size_t>(y - 1) * w + x] + p[static_cast<std::size_t>(y + 1) * w + x] +
                       p[static_cast<std::size_t>(y) * w + x - 1] + p[static_cast<std::size_t>(y) * w + x + 1] -
                       4.0 * p[static_cast<std::size_t>(y) * w + x];
            acc += lap * lap;
            real s = 2.0 * inv * lap;
            gp[static_cast<std::size_t>(y - 1) * w + x] += s;
            gp[static_cast<std::size_t>(y + 1) * w + x] += s;
            gp[static_cast<std::size_t>(y) * w + x - 1] += s;
            gp[static_cast<std::size_t>(y) * w + x + 1] += s;
            gp[static_cast<std::size_t>(y) * w + x] -= 4.0 * s;
        }
    return acc * inv;
}

real airlight_reg(const Image& A, const Rgb& color) {
    if (A.channels() != 3)
        throw ShapeError("airlight_reg: layer must have 3 channels");
    real acc = 0.0;
    for (int c = 0; c < 3; ++c) {
        const real* p = A.channel(c);
        for (long i = 0; i < A.plane(); ++i) {
            real d = p[i] - color[c];
            acc += d * d;
        }
    }
    return acc / static_cast<real>(A.size());
}

real airlight_reg_grad(const Image& A, const Rgb& color, Tensor& g) {
    if (A.channels() != 3)
        throw ShapeError("airlight_reg: layer must have 3 channels");
    g = Tensor(3, A.height(), A.width());
    const real inv = 2.0 / static_cast<real>(A.size());
    real acc = 0.0;
    for (int c = 0; c < 3; ++c) {
        const real* p = A.channel(c);
        real* gp = g.channel(c);
        for (long i = 0; i < A.plane(); ++i) {
            real d = p[i] - color[c];
            acc += d * d;
            gp[i] = inv * d;
        }
    }
    return acc / static_cast<real>(A.size());
}

namespace {

real reg_value(const LayerSet& layers, const LossWeights& weights, RegKind reg) {
    switch (reg) {
        case RegKind::kNone:
            return 0.0;
        case RegKind::kBinaryMask:
            if (layers.scalar_mask())
                throw ConfigError("binary mask regularizer needs a spatial mask");
            return binary_mask_reg(layers.mask);
        case RegKind::kDehaze: {
            if (layers.scalar_mask())
                throw ConfigError("dehaze regularizer needs a spatial t-map");
            if (!layers.airlight_color)
                throw ConfigError("dehaze regularizer needs an airlight color");
            return smoothness_reg(layers.mask) +
                   weights.airlight_rel() * airlight_reg(layers.y2, *layers.airlight_color);
        }
    }
    throw ConfigError("unknown regularizer selector");
}

} // namespace

LossReport total_loss(const Image& input, const LayerSet& layers,
                      const LossWeights& weights, RegKind reg,
                      const Image* hint_weights) {
    LossReport r;
    r.reconst = hint_weights ? weighted_mse(input, layers.reconstruction, *hint_weights)
                             : reconstruction_loss(input, layers.reconstruction);
    r.excl = exclusion_loss(layers.y1, layers.y2, weights.excl_scales);
    r.reg = reg_value(layers, weights, reg);
    r.total = r.reconst + weights.alpha * r.excl + weights.beta * r.reg;
    return r;
}

LossReport total_loss(const std::vector<Image>& frames,
                      const std::vector<LayerSet>& per_frame,
                      const LossWeights& weights, RegKind reg) {
    if (frames.size() != per_frame.size() || frames.empty())
        throw ShapeError("total_loss: frame/layerset count mismatch");
    LossReport r;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        LossReport f = total_loss(frames[i], per_frame[i], weights, reg, nullptr);
        r.frame_reconst.push_back(f.reconst);
        r.reconst += f.reconst;
        r.excl += f.excl;
        r.reg += f.reg;
    }
    const real inv = 1.0 / static_cast<real>(frames.size());
    r.reconst *= inv;
    r.excl *= inv;
    r.reg *= inv;
    r.total = r.reconst + weights.alpha * r.excl + weights.beta * r.reg;
    return r;
}

} // namespace dip
