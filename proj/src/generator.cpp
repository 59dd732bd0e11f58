#include "dip/generator.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstring>

namespace dip {

void GeneratorSpec::validate() const {
    if (depth < 1)
        throw ConfigError("generator depth must be >= 1");
    if (static_cast<int>(down_channels.size()) != depth ||
        static_cast<int>(up_channels.size()) != depth ||
        static_cast<int>(skip_channels.size()) != depth)
        throw ConfigError("generator channel lists must have one entry per level");
    if (kernel_size < 1 || kernel_size % 2 == 0)
        throw ConfigError("generator kernel size must be odd");
    if (output_channels < 1 || input_channels < 1)
        throw ConfigError("generator channel counts must be >= 1");
    for (int i = 0; i < depth; ++i) {
        if (down_channels[i] < 1 || up_channels[i] < 1 || skip_channels[i] < 0)
            throw ConfigError("generator channel counts must be positive (skip may be 0)");
    }
}

GeneratorSpec GeneratorSpec::make(int depth, int width, int skip, int out_channels,
                                  int in_channels) {
    GeneratorSpec s;
    s.depth = depth;
    s.down_channels.assign(depth, width);
    s.up_channels.assign(depth, width);
    s.skip_channels.assign(depth, skip);
    s.output_channels = out_channels;
    s.input_channels = in_channels;
    return s;
}

NoiseField make_noise(int channels, int h, int w, std::uint64_t seed, real amplitude) {
    NoiseField z;
    Rng rng(derive_seed(seed, 0xbadc0ffeULL));
    z.base = uniform_tensor(channels, h, w, 0.0, amplitude, rng);
    z.perturb_sigma = amplitude / 30.0;
    z.seed = seed;
    return z;
}

real noise_ramp(int iteration, int ramp_iters) {
    if (ramp_iters <= 0) return 1.0;
    return std::min(1.0, static_cast<real>(iteration) / static_cast<real>(ramp_iters));
}

Tensor perturbed_input(const NoiseField& z, int iteration, int ramp_iters) {
    real sigma = z.perturb_sigma * noise_ramp(iteration, ramp_iters);
    Tensor t = z.base;
    if (sigma > 0.0) {
        Rng rng(derive_seed(z.seed, 0x70e5ULL + static_cast<std::uint64_t>(iteration)));
        real* p = t.data();
        for (long i = 0; i < t.size(); ++i) p[i] += rng.normal(sigma);
    }
    return t;
}

// ---------------------------------------------------------------------------
// Layers

namespace {

using RowMat = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using CMatMap = Eigen::Map<const RowMat>;

inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    if (i < 0) return -i;
    if (i >= n) return 2 * n - 2 - i;
    return i;
}

inline int conv_out_size(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

constexpr real kLeakySlope = 0.2;
constexpr real kNormEps = 1e-5;

struct Workspace {
    aligned_vector cols;
    std::vector<int> xmap;

    real* col_buffer(long n) {
        if (static_cast<long>(cols.size()) < n) cols.resize(n);
        return cols.data();
    }
};

struct ConvParams {
    int in_c = 0, out_c = 0, k = 1, stride = 1, pad = 0;
    aligned_vector w, b, gw, gb;

    void setup(int in, int out, int kernel, int str) {
        in_c = in; out_c = out; k = kernel; stride = str; pad = (kernel - 1) / 2;
        w.assign(static_cast<std::size_t>(out) * in * kernel * kernel, 0.0);
        b.assign(out, 0.0);
        gw.assign(w.size(), 0.0);
        gb.assign(b.size(), 0.0);
    }

    void init(Rng& rng) {
        real bound = 1.0 / std::sqrt(static_cast<real>(in_c) * k * k);
        for (real& v : w) v = rng.uniform(-bound, bound);
        for (real& v : b) v = rng.uniform(-bound, bound);
    }
};

void im2col(const Tensor& x, const ConvParams& p, int oh, int ow, real* cols, Workspace& ws) {
    const int h = x.height(), w = x.width(), k = p.k;
    const long n = static_cast<long>(oh) * ow;
    ws.xmap.resize(static_cast<std::size_t>(k) * ow);
    for (int kx = 0; kx < k; ++kx)
        for (int ox = 0; ox < ow; ++ox)
            ws.xmap[static_cast<std::size_t>(kx) * ow + ox] = reflect_index(ox * p.stride + kx - p.pad, w);
    for (int ic = 0; ic < p.in_c; ++ic) {
        const real* src = x.channel(ic);
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                real* dst = cols + (static_cast<long>((ic * k + ky)) * k + kx) * n;
                const int* xm = ws.xmap.data() + static_cast<std::size_t>(kx) * ow;
                for (int oy = 0; oy < oh; ++oy) {
                    const real* srow = src + static_cast<std::size_t>(reflect_index(oy * p.stride + ky - p.pad, h)) * w;
                    real* drow = dst + static_cast<std::size_t>(oy) * ow;
                    for (int ox = 0; ox < ow; ++ox) drow[ox] = srow[xm[ox]];
                }
            }
    }
}

void col2im_add(const real* cols, const ConvParams& p, int oh, int ow, Tensor& gx, Workspace& ws) {
    const int h = gx.height(), w = gx.width(), k = p.k;
    const long n = static_cast<long>(oh) * ow;
    ws.xmap.resize(static_cast<std::size_t>(k) * ow);
    for (int kx = 0; kx < k; ++kx)
        for (int ox = 0; ox < ow; ++ox)
            ws.xmap[static_cast<std::size_t>(kx) * ow + ox] = reflect_index(ox * p.stride + kx - p.pad, w);
    for (int ic = 0; ic < p.in_c; ++ic) {
        real* dst = gx.channel(ic);
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const real* src = cols + (static_cast<long>((ic * k + ky)) * k + kx) * n;
                const int* xm = ws.xmap.data() + static_cast<std::size_t>(kx) * ow;
                for (int oy = 0; oy < oh; ++oy) {
                    real* drow = dst + static_cast<std::size_t>(reflect_index(oy * p.stride + ky - p.pad, h)) * w;
                    const real* srow = src + static_cast<std::size_t>(oy) * ow;
                    for (int ox = 0; ox < ow; ++ox) drow[xm[ox]] += srow[ox];
                }
            }
    }
}

void conv_forward(const ConvParams& p, const Tensor& x, Tensor& y, Workspace& ws) {
    const int oh = conv_out_size(x.height(), p.k, p.stride, p.pad);
    const int ow = conv_out_size(x.width(), p.k, p.stride, p.pad);
    const long n = static_cast<long>(oh) * ow;
    const long kk = static_cast<long>(p.in_c) * p.k * p.k;
    y.reshape_to(p.out_c, oh, ow);

    CMatMap wm(p.w.data(), p.out_c, kk);
    MatMap ym(y.data(), p.out_c, n);
    if (p.k == 1 && p.stride == 1) {
        CMatMap xm(x.data(), p.in_c, n);
        ym.noalias() = wm * xm;
    } else {
        real* cols = ws.col_buffer(kk * n);
        im2col(x, p, oh, ow, cols, ws);
        CMatMap cm(cols, kk, n);
        ym.noalias() = wm * cm;
    }
    for (int oc = 0; oc < p.out_c; ++oc)
        ym.row(oc).array() += p.b[oc];
}

void conv_backward(ConvParams& p, const Tensor& x, const Tensor& gy, Tensor& gx, Workspace& ws) {
    const int oh = gy.height(), ow = gy.width();
    const long n = static_cast<long>(oh) * ow;
    const long kk = static_cast<long>(p.in_c) * p.k * p.k;

    CMatMap gym(gy.data(), p.out_c, n);
    MatMap gwm(p.gw.data(), p.out_c, kk);
    for (int oc = 0; oc < p.out_c; ++oc) {
        const real* row = gy.data() + static_cast<std::size_t>(oc) * n;
        real acc = 0.0;
        for (long i = 0; i < n; ++i) acc += row[i];
        p.gb[oc] += acc;
    }

    gx.reshape_to(p.in_c, x.height(), x.width());
    CMatMap wm(p.w.data(), p.out_c, kk);
    if (p.k == 1 && p.stride == 1) {
        CMatMap xm(x.data(), p.in_c, n);
        gwm.noalias() += gym * xm.transpose();
        MatMap gxm(gx.data(), p.in_c, n);
        gxm.noalias() = wm.transpose() * gym;
    } else {
        real* cols = ws.col_buffer(2 * kk * n);
        real* dcols = cols + kk * n;
        im2col(x, p, oh, ow, cols, ws);
        CMatMap cm(cols, kk, n);
        gwm.noalias() += gym * cm.transpose();
        MatMap dcm(dcols, kk, n);
        dcm.noalias() = wm.transpose() * gym;
        gx.zero();
        col2im_add(dcols, p, oh, ow, gx, ws);
    }
}

struct NormParams {
    int c = 0;
    std::vector<real> gamma, beta, gg, gb;

    void setup(int channels) {
        c = channels;
        gamma.assign(c, 1.0);
        beta.assign(c, 0.0);
        gg.assign(c, 0.0);
        gb.assign(c, 0.0);
    }
};

// Per-channel spatial normalization (training-mode batch norm at batch 1).
void norm_forward(const NormParams& p, const Tensor& x, Tensor& y, Tensor& xhat,
                  std::vector<real>& invstd) {
    const long n = x.plane();
    y.reshape_to(x.channels(), x.height(), x.width());
    xhat.reshape_to(x.channels(), x.height(), x.width());
    invstd.resize(x.channels());
    for (int c = 0; c < x.channels(); ++c) {
        const real* s = x.channel(c);
        real mu = 0.0, m2 = 0.0;
        for (long i = 0; i < n; ++i) { mu += s[i]; m2 += s[i] * s[i]; }
        mu /= static_cast<real>(n);
        real var = m2 / static_cast<real>(n) - mu * mu;
        real inv = 1.0 / std::sqrt(std::max(var, 0.0) + kNormEps);
        invstd[c] = inv;
        real* xh = xhat.channel(c);
        real* o = y.channel(c);
        const real g = p.gamma[c], b = p.beta[c];
        for (long i = 0; i < n; ++i) {
            xh[i] = (s[i] - mu) * inv;
            o[i] = g * xh[i] + b;
        }
    }
}

void norm_backward(NormParams& p, const Tensor& xhat, const std::vector<real>& invstd,
                   const Tensor& gy, Tensor& gx) {
    const long n = xhat.plane();
    gx.reshape_to(xhat.channels(), xhat.height(), xhat.width());
    for (int c = 0; c < xhat.channels(); ++c) {
        const real* xh = xhat.channel(c);
        const real* g = gy.channel(c);
        real s1 = 0.0, s2 = 0.0;
        for (long i = 0; i < n; ++i) { s1 += g[i]; s2 += g[i] * xh[i]; }
        p.gg[c] += s2;
        p.gb[c] += s1;
        const real mean_g = s1 / static_cast<real>(n);
        const real mean_gx = s2 / static_cast<real>(n);
        const real scale = p.gamma[c] * invstd[c];
        real* o = gx.channel(c);
        for (long i = 0; i < n; ++i)
            o[i] = scale * (g[i] - mean_g - xh[i] * mean_gx);
    }
}

enum class Act { kLinear, kLeakyRelu, kSigmoid };

void act_forward(Act act, Tensor& t) {
    real* p = t.data();
    switch (act) {
        case Act::kLinear: break;
        case Act::kLeakyRelu:
            for (long i = 0; i < t.size(); ++i)
                if (p[i] < 0.0) p[i] *= kLeakySlope;
            break;
        case Act::kSigmoid:
            for (long i = 0; i < t.size(); ++i) p[i] = 1.0 / (1.0 + std::exp(-p[i]));
            break;
    }
}

// In-place on g, using the activation's cached output.
void act_backward(Act act, const Tensor& out, Tensor& g) {
    real* gp = g.data();
    const real* op = out.data();
    switch (act) {
        case Act::kLinear: break;
        case Act::kLeakyRelu:
            for (long i = 0; i < g.size(); ++i)
                if (op[i] <= 0.0) gp[i] *= kLeakySlope;
            break;
        case Act::kSigmoid:
            for (long i = 0; i < g.size(); ++i) gp[i] *= op[i] * (1.0 - op[i]);
            break;
    }
}

// conv [+ norm] [+ activation], with the caches backward needs.
struct ConvBlock {
    ConvParams conv;
    bool has_norm = true;
    NormParams norm;
    Act act = Act::kLeakyRelu;

    Tensor in, pre, xhat, out;
    std::vector<real> invstd;

    void setup(int in_c, int out_c, int k, int stride, bool with_norm, Act a) {
        conv.setup(in_c, out_c, k, stride);
        has_norm = with_norm;
        if (with_norm) norm.setup(out_c);
        act = a;
    }

    void init(Rng& rng) { conv.init(rng); }

    const Tensor& forward(const Tensor& x, Workspace& ws) {
        in = x;
        if (has_norm) {
            conv_forward(conv, in, pre, ws);
            norm_forward(norm, pre, out, xhat, invstd);
        } else {
            conv_forward(conv, in, out, ws);
        }
        act_forward(act, out);
        return out;
    }

    Tensor backward(Tensor g, Workspace& ws) {
        act_backward(act, out, g);
        Tensor gx;
        if (has_norm) {
            Tensor gpre;
            norm_backward(norm, xhat, invstd, g, gpre);
            conv_backward(conv, in, gpre, gx, ws);
        } else {
            conv_backward(conv, in, g, gx, ws);
        }
        return gx;
    }

    void collect(std::vector<ParamRef>& refs) {
        refs.push_back({conv.w.data(), conv.gw.data(), static_cast<long>(conv.w.size())});
        refs.push_back({conv.b.data(), conv.gb.data(), static_cast<long>(conv.b.size())});
        if (has_norm) {
            refs.push_back({norm.gamma.data(), norm.gg.data(), static_cast<long>(norm.gamma.size())});
            refs.push_back({norm.beta.data(), norm.gb.data(), static_cast<long>(norm.beta.size())});
        }
    }
};

struct NormBlock {
    NormParams norm;
    Tensor xhat, out;
    std::vector<real> invstd;

    void setup(int c) { norm.setup(c); }

    const Tensor& forward(const Tensor& x, Workspace&) {
        norm_forward(norm, x, out, xhat, invstd);
        return out;
    }

    Tensor backward(const Tensor& g, Workspace&) {
        Tensor gx;
        norm_backward(norm, xhat, invstd, g, gx);
        return gx;
    }

    void collect(std::vector<ParamRef>& refs) {
        refs.push_back({norm.gamma.data(), norm.gg.data(), static_cast<long>(norm.gamma.size())});
        refs.push_back({norm.beta.data(), norm.gb.data(), static_cast<long>(norm.beta.size())});
    }
};

void upsample2_forward(const Tensor& x, GeneratorSpec::Upsample mode, Tensor& y) {
    const int h = x.height(), w = x.width();
    const int oh = 2 * h, ow = 2 * w;
    y.reshape_to(x.channels(), oh, ow);
    if (mode == GeneratorSpec::Upsample::kNearest) {
        for (int c = 0; c < x.channels(); ++c) {
            const real* s = x.channel(c);
            real* d = y.channel(c);
            for (int oy = 0; oy < oh; ++oy) {
                const real* srow = s + static_cast<std::size_t>(oy / 2) * w;
                real* drow = d + static_cast<std::size_t>(oy) * ow;
                for (int ox = 0; ox < ow; ++ox) drow[ox] = srow[ox / 2];
            }
        }
        return;
    }
    auto coords = [](int o, int n, int& i0, int& i1, real& f) {
        real src = (o + 0.5) * 0.5 - 0.5;
        if (src < 0.0) src = 0.0;
        i0 = std::min(static_cast<int>(src), n - 1);
        i1 = std::min(i0 + 1, n - 1);
        f = src - i0;
    };
    std::vector<int> x0(ow), x1(ow);
    std::vector<real> fx(ow);
    for (int ox = 0; ox < ow; ++ox) coords(ox, w, x0[ox], x1[ox], fx[ox]);
    for (int c = 0; c < x.channels(); ++c) {
        const real* s = x.channel(c);
        real* d = y.channel(c);
        for (int oy = 0; oy < oh; ++oy) {
            int y0, y1; real fy;
            coords(oy, h, y0, y1, fy);
            const real* r0 = s + static_cast<std::size_t>(y0) * w;
            const real* r1 = s + static_cast<std::size_t>(y1) * w;
            real* drow = d + static_cast<std::size_t>(oy) * ow;
            for (int ox = 0; ox < ow; ++ox) {
                real top = r0[x0[ox]] * (1.0 - fx[ox]) + r0[x1[ox]] * fx[ox];
                real bot = r1[x0[ox]] * (1.0 - fx[ox]) + r1[x1[ox]] * fx[ox];
                drow[ox] = top * (1.0 - fy) + bot * fy;
            }
        }
    }
}

void upsample2_backward(const Tensor& gy, GeneratorSpec::Upsample mode, int h, int w, Tensor& gx) {
    const int oh = gy.height(), ow = gy.width();
    gx.reshape_to(gy.channels(), h, w);
    gx.zero();
    if (mode == GeneratorSpec::Upsample::kNearest) {
        for (int c = 0; c < gy.channels(); ++c) {
            const real* s = gy.channel(c);
            real* d = gx.channel(c);
            for (int oy = 0; oy < oh; ++oy) {
                real* drow = d + static_cast<std::size_t>(oy / 2) * w;
                const real* srow = s + static_cast<std::size_t>(oy) * ow;
                for (int ox = 0; ox < ow; ++ox) drow[ox / 2] += srow[ox];
            }
        }
        return;
    }
    auto coords = [](int o, int n, int& i0, int& i1, real& f) {
        real src = (o + 0.5) * 0.5 - 0.5;
        if (src < 0.0) src = 0.0;
        i0 = std::min(static_cast<int>(src), n - 1);
        i1 = std::min(i0 + 1, n - 1);
        f = src - i0;
    };
    std::vector<int> x0(ow), x1(ow);
    std::vector<real> fx(ow);
    for (int ox = 0; ox < ow; ++ox) coords(ox, w, x0[ox], x1[ox], fx[ox]);
    for (int c = 0; c < gy.channels(); ++c) {
        const real* s = gy.channel(c);
        real* d = gx.channel(c);
        for (int oy = 0; oy < oh; ++oy) {
            int y0, y1; real fy;
            coords(oy, h, y0, y1, fy);
            real* r0 = d + static_cast<std::size_t>(y0) * w;
            real* r1 = d + static_cast<std::size_t>(y1) * w;
            const real* srow = s + static_cast<std::size_t>(oy) * ow;
            for (int ox = 0; ox < ow; ++ox) {
                real g = srow[ox];
                r0[x0[ox]] += g * (1.0 - fx[ox]) * (1.0 - fy);
                r0[x1[ox]] += g * fx[ox] * (1.0 - fy);
                r1[x0[ox]] += g * (1.0 - fx[ox]) * fy;
                r1[x1[ox]] += g * fx[ox] * fy;
            }
        }
    }
}

} // namespace

// ---------------------------------------------------------------------------
// Skip-architecture generator

struct Generator::Impl {
    GeneratorSpec spec;

    struct Scale {
        bool has_skip = false;
        ConvBlock skip;   // 1x1 at this scale's input resolution
        ConvBlock down1;  // stride-2
        ConvBlock down2;
        NormBlock cat_norm;
        ConvBlock up1;
        ConvBlock up2;    // 1x1
        int in_h = 0, in_w = 0;         // crop target for the upsampled deeper path
        int deeper_h = 0, deeper_w = 0; // deeper output size before upsampling
        Tensor skip_grad;               // dL/dx_i via the skip branch
    };
    std::vector<Scale> scales;
    ConvBlock out_conv;
    Workspace ws;
    Image output;

    Impl(const GeneratorSpec& s, std::uint64_t seed) : spec(s) {
        spec.validate();
        const int d = spec.depth;
        scales.resize(d);
        int in_c = spec.input_channels;
        for (int i = 0; i < d; ++i) {
            Scale& sc = scales[i];
            sc.has_skip = spec.skip_channels[i] > 0;
            if (sc.has_skip)
                sc.skip.setup(in_c, spec.skip_channels[i], 1, 1, true, Act::kLeakyRelu);
            sc.down1.setup(in_c, spec.down_channels[i], spec.kernel_size, 2, true, Act::kLeakyRelu);
            sc.down2.setup(spec.down_channels[i], spec.down_channels[i], spec.kernel_size, 1, true, Act::kLeakyRelu);
            int deeper_c = (i + 1 < d) ? spec.up_channels[i + 1] : spec.down_channels[d - 1];
            int cat_c = spec.skip_channels[i] + deeper_c;
            sc.cat_norm.setup(cat_c);
            sc.up1.setup(cat_c, spec.up_channels[i], spec.kernel_size, 1, true, Act::kLeakyRelu);
            sc.up2.setup(spec.up_channels[i], spec.up_channels[i], 1, 1, true, Act::kLeakyRelu);
            in_c = spec.down_channels[i];
        }
        out_conv.setup(spec.up_channels[0], spec.output_channels, 1, 1, false,
                       spec.output_activation == GeneratorSpec::OutputActivation::kSigmoid
                           ? Act::kSigmoid : Act::kLinear);

        Rng rng(derive_seed(seed, 0x9e17ULL));
        for (Scale& sc : scales) {
            if (sc.has_skip) sc.skip.init(rng);
            sc.down1.init(rng);
            sc.down2.init(rng);
            sc.up1.init(rng);
            sc.up2.init(rng);
        }
        out_conv.init(rng);
    }

    const Image& forward(const Tensor& input) {
        if (input.channels() != spec.input_channels)
            throw ShapeError("generator input has " + std::to_string(input.channels()) +
                             " channels, expected " + std::to_string(spec.input_channels));
        const int d = spec.depth;
        Tensor cur = input;
        for (int i = 0; i < d; ++i) {
            Scale& sc = scales[i];
            sc.in_h = cur.height();
            sc.in_w = cur.width();
            if (sc.has_skip) sc.skip.forward(cur, ws);
            cur = sc.down2.forward(sc.down1.forward(cur, ws), ws);
        }
        for (int i = d - 1; i >= 0; --i) {
            Scale& sc = scales[i];
            sc.deeper_h = cur.height();
            sc.deeper_w = cur.width();
            Tensor up;
            upsample2_forward(cur, spec.upsample_mode, up);
            if (up.height() != sc.in_h || up.width() != sc.in_w)
                up = crop(up, 0, 0, sc.in_h, sc.in_w);
            Tensor cat = sc.has_skip ? concat_channels(sc.skip.out, up) : std::move(up);
            cur = sc.up2.forward(sc.up1.forward(sc.cat_norm.forward(cat, ws), ws), ws);
        }
        output = out_conv.forward(cur, ws);
        return output;
    }

    void backward(const Tensor& grad_output) {
        require_same_shape(grad_output, output, "generator backward");
        const int d = spec.depth;
        Tensor g = out_conv.backward(grad_output, ws);
        for (int i = 0; i < d; ++i) {
            Scale& sc = scales[i];
            g = sc.up1.backward(sc.up2.backward(std::move(g), ws), ws);
            g = sc.cat_norm.backward(g, ws);
            Tensor g_up;
            if (sc.has_skip) {
                Tensor g_skip;
                split_channels(g, spec.skip_channels[i], g_skip, g_up);
                sc.skip_grad = sc.skip.backward(std::move(g_skip), ws);
            } else {
                g_up = std::move(g);
            }
            // Undo the crop, then the upsampling.
            Tensor padded(g_up.channels(), 2 * sc.deeper_h, 2 * sc.deeper_w);
            for (int c = 0; c < g_up.channels(); ++c)
                for (int y = 0; y < g_up.height(); ++y)
                    std::memcpy(padded.channel(c) + static_cast<std::size_t>(y) * padded.width(),
                                g_up.channel(c) + static_cast<std::size_t>(y) * g_up.width(),
                                sizeof(real) * g_up.width());
            upsample2_backward(padded, spec.upsample_mode, sc.deeper_h, sc.deeper_w, g);
        }
        for (int i = d - 1; i >= 0; --i) {
            Scale& sc = scales[i];
            g = sc.down1.backward(sc.down2.backward(std::move(g), ws), ws);
            if (sc.has_skip) g += sc.skip_grad;
        }
    }

    std::vector<ParamRef> params() {
        std::vector<ParamRef> refs;
        for (Scale& sc : scales) {
            if (sc.has_skip) sc.skip.collect(refs);
            sc.down1.collect(refs);
            sc.down2.collect(refs);
            sc.cat_norm.collect(refs);
            sc.up1.collect(refs);
            sc.up2.collect(refs);
        }
        out_conv.collect(refs);
        return refs;
    }
};

Generator::Generator(const GeneratorSpec& spec, std::uint64_t seed)
    : impl_(std::make_unique<Impl>(spec, seed)) {}
Generator::~Generator() = default;
Generator::Generator(Generator&&) noexcept = default;
Generator& Generator::operator=(Generator&&) noexcept = default;

const GeneratorSpec& Generator::spec() const { return impl_->spec; }

const Image& Generator::forward(const Tensor& input) { return impl_->forward(input); }

const Image& Generator::forward(const NoiseField& z, int iteration, int ramp_iters) {
    return impl_->forward(perturbed_input(z, iteration, ramp_iters));
}

const Image& Generator::output() const { return impl_->output; }

void Generator::backward(const Tensor& grad_output) { impl_->backward(grad_output); }

void Generator::zero_grad() {
    for (ParamRef& p : impl_->params())
        std::fill(p.grad, p.grad + p.n, 0.0);
}

std::vector<ParamRef> Generator::params() { return impl_->params(); }

long Generator::param_count() {
    long n = 0;
    for (const ParamRef& p : impl_->params()) n += p.n;
    return n;
}

Generator build_generator(const GeneratorSpec& spec, std::uint64_t seed) {
    return Generator(spec, seed);
}

} // namespace dip
