#include "dip/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace dip {

real Tensor::sum() const {
    real s = 0.0;
    for (real v : data_) s += v;
    return s;
}

real Tensor::min() const {
    real m = std::numeric_limits<real>::infinity();
    for (real v : data_) m = std::min(m, v);
    return m;
}

real Tensor::max() const {
    real m = -std::numeric_limits<real>::infinity();
    for (real v : data_) m = std::max(m, v);
    return m;
}

bool Tensor::all_finite() const {
    for (real v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Tensor& Tensor::operator+=(const Tensor& o) {
    require_same_shape(*this, o, "operator+=");
    for (long i = 0; i < size(); ++i) data_[i] += o.data_[i];
    return *this;
}

Tensor& Tensor::operator-=(const Tensor& o) {
    require_same_shape(*this, o, "operator-=");
    for (long i = 0; i < size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

Tensor& Tensor::operator*=(real s) {
    for (real& v : data_) v *= s;
    return *this;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": " +
                         std::to_string(a.channels()) + "x" + std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                         " vs " +
                         std::to_string(b.channels()) + "x" + std::to_string(b.height()) + "x" + std::to_string(b.width()));
}

void axpy(real s, const Tensor& x, Tensor& y) {
    require_same_shape(x, y, "axpy");
    const real* xp = x.data();
    real* yp = y.data();
    for (long i = 0; i < x.size(); ++i) yp[i] += s * xp[i];
}

Tensor clamp01(const Tensor& t) {
    Tensor out = t;
    real* p = out.data();
    for (long i = 0; i < out.size(); ++i) p[i] = std::clamp(p[i], 0.0, 1.0);
    return out;
}

Tensor crop(const Tensor& t, int oy, int ox, int h, int w) {
    if (oy < 0 || ox < 0 || oy + h > t.height() || ox + w > t.width())
        throw ShapeError("crop window outside tensor");
    Tensor out(t.channels(), h, w);
    for (int c = 0; c < t.channels(); ++c) {
        const real* src = t.channel(c);
        real* dst = out.channel(c);
        for (int y = 0; y < h; ++y)
            std::memcpy(dst + static_cast<std::size_t>(y) * w,
                        src + (static_cast<std::size_t>(y + oy)) * t.width() + ox,
                        sizeof(real) * w);
    }
    return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    if (a.height() != b.height() || a.width() != b.width())
        throw ShapeError("concat_channels: spatial mismatch");
    Tensor out(a.channels() + b.channels(), a.height(), a.width());
    std::memcpy(out.data(), a.data(), sizeof(real) * a.size());
    std::memcpy(out.data() + a.size(), b.data(), sizeof(real) * b.size());
    return out;
}

void split_channels(const Tensor& cat, int c_first, Tensor& a, Tensor& b) {
    a = Tensor(c_first, cat.height(), cat.width());
    b = Tensor(cat.channels() - c_first, cat.height(), cat.width());
    std::memcpy(a.data(), cat.data(), sizeof(real) * a.size());
    std::memcpy(b.data(), cat.data() + a.size(), sizeof(real) * b.size());
}

Tensor avg_pool2(const Tensor& t) {
    int oh = t.height() / 2, ow = t.width() / 2;
    if (oh < 1 || ow < 1) throw ShapeError("avg_pool2: input too small");
    Tensor out(t.channels(), oh, ow);
    for (int c = 0; c < t.channels(); ++c) {
        const real* src = t.channel(c);
        real* dst = out.channel(c);
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                const real* r0 = src + static_cast<std::size_t>(2 * y) * t.width() + 2 * x;
                const real* r1 = r0 + t.width();
                dst[static_cast<std::size_t>(y) * ow + x] = 0.25 * (r0[0] + r0[1] + r1[0] + r1[1]);
            }
    }
    return out;
}

Tensor avg_pool2_backward(const Tensor& g, int h, int w) {
    Tensor out(g.channels(), h, w);
    for (int c = 0; c < g.channels(); ++c) {
        const real* src = g.channel(c);
        real* dst = out.channel(c);
        for (int y = 0; y < g.height(); ++y)
            for (int x = 0; x < g.width(); ++x) {
                real v = 0.25 * src[static_cast<std::size_t>(y) * g.width() + x];
                real* r0 = dst + static_cast<std::size_t>(2 * y) * w + 2 * x;
                real* r1 = r0 + w;
                r0[0] += v; r0[1] += v; r1[0] += v; r1[1] += v;
            }
    }
    return out;
}

namespace {
inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }
}

Tensor box_mean(const Tensor& t, int radius) {
    const int h = t.height(), w = t.width();
    Tensor out(t.channels(), h, w);
    const real inv = 1.0 / ((2.0 * radius + 1.0) * (2.0 * radius + 1.0));
    // Separable: rows then columns, replicate padding via index clamping.
    std::vector<real> row(static_cast<std::size_t>(h) * w);
    for (int c = 0; c < t.channels(); ++c) {
        const real* src = t.channel(c);
        for (int y = 0; y < h; ++y) {
            const real* s = src + static_cast<std::size_t>(y) * w;
            real acc = 0.0;
            for (int k = -radius; k <= radius; ++k) acc += s[clampi(k, 0, w - 1)];
            for (int x = 0; x < w; ++x) {
                row[static_cast<std::size_t>(y) * w + x] = acc;
                acc += s[clampi(x + radius + 1, 0, w - 1)] - s[clampi(x - radius, 0, w - 1)];
            }
        }
        real* dst = out.channel(c);
        for (int x = 0; x < w; ++x) {
            real acc = 0.0;
            for (int k = -radius; k <= radius; ++k) acc += row[static_cast<std::size_t>(clampi(k, 0, h - 1)) * w + x];
            for (int y = 0; y < h; ++y) {
                dst[static_cast<std::size_t>(y) * w + x] = acc * inv;
                acc += row[static_cast<std::size_t>(clampi(y + radius + 1, 0, h - 1)) * w + x]
                     - row[static_cast<std::size_t>(clampi(y - radius, 0, h - 1)) * w + x];
            }
        }
    }
    return out;
}

namespace {

// Fractional coverage of source cells by one output cell along one axis.
struct AreaSpan {
    int begin;
    std::vector<real> weights; // sums to 1
};

std::vector<AreaSpan> area_spans(int in, int out) {
    std::vector<AreaSpan> spans(out);
    const real scale = static_cast<real>(in) / out;
    for (int o = 0; o < out; ++o) {
        real lo = o * scale, hi = (o + 1) * scale;
        int b = static_cast<int>(std::floor(lo));
        int e = static_cast<int>(std::ceil(hi));
        e = std::min(e, in);
        AreaSpan s;
        s.begin = b;
        s.weights.resize(e - b);
        for (int i = b; i < e; ++i) {
            real cover = std::min(hi, static_cast<real>(i + 1)) - std::max(lo, static_cast<real>(i));
            s.weights[i - b] = cover / scale;
        }
        spans[o] = std::move(s);
    }
    return spans;
}

} // namespace

Tensor resize_area(const Tensor& t, int oh, int ow) {
    if (oh == t.height() && ow == t.width()) return t;
    auto ys = area_spans(t.height(), oh);
    auto xs = area_spans(t.width(), ow);
    Tensor tmp(t.channels(), t.height(), ow);
    for (int c = 0; c < t.channels(); ++c) {
        const real* src = t.channel(c);
        real* dst = tmp.channel(c);
        for (int y = 0; y < t.height(); ++y)
            for (int x = 0; x < ow; ++x) {
                const AreaSpan& s = xs[x];
                real acc = 0.0;
                for (std::size_t k = 0; k < s.weights.size(); ++k)
                    acc += s.weights[k] * src[static_cast<std::size_t>(y) * t.width() + s.begin + k];
                dst[static_cast<std::size_t>(y) * ow + x] = acc;
            }
    }
    Tensor out(t.channels(), oh, ow);
    for (int c = 0; c < t.channels(); ++c) {
        const real* src = tmp.channel(c);
        real* dst = out.channel(c);
        for (int y = 0; y < oh; ++y) {
            const AreaSpan& s = ys[y];
            for (int x = 0; x < ow; ++x) {
                real acc = 0.0;
                for (std::size_t k = 0; k < s.weights.size(); ++k)
                    acc += s.weights[k] * src[(static_cast<std::size_t>(s.begin) + k) * ow + x];
                dst[static_cast<std::size_t>(y) * ow + x] = acc;
            }
        }
    }
    return out;
}

Tensor resize_bilinear(const Tensor& t, int oh, int ow) {
    if (oh == t.height() && ow == t.width()) return t;
    Tensor out(t.channels(), oh, ow);
    const real sy = static_cast<real>(t.height()) / oh;
    const real sx = static_cast<real>(t.width()) / ow;
    std::vector<int> x0(ow), x1(ow);
    std::vector<real> fx(ow);
    for (int x = 0; x < ow; ++x) {
        real src = (x + 0.5) * sx - 0.5;
        src = std::max(src, 0.0);
        x0[x] = std::min(static_cast<int>(src), t.width() - 1);
        x1[x] = std::min(x0[x] + 1, t.width() - 1);
        fx[x] = src - x0[x];
    }
    for (int c = 0; c < t.channels(); ++c) {
        const real* src = t.channel(c);
        real* dst = out.channel(c);
        for (int y = 0; y < oh; ++y) {
            real sv = (y + 0.5) * sy - 0.5;
            sv = std::max(sv, 0.0);
            int y0 = std::min(static_cast<int>(sv), t.height() - 1);
            int y1 = std::min(y0 + 1, t.height() - 1);
            real fy = sv - y0;
            const real* r0 = src + static_cast<std::size_t>(y0) * t.width();
            const real* r1 = src + static_cast<std::size_t>(y1) * t.width();
            for (int x = 0; x < ow; ++x) {
                real top = r0[x0[x]] * (1.0 - fx[x]) + r0[x1[x]] * fx[x];
                real bot = r1[x0[x]] * (1.0 - fx[x]) + r1[x1[x]] * fx[x];
                dst[static_cast<std::size_t>(y) * ow + x] = top * (1.0 - fy) + bot * fy;
            }
        }
    }
    return out;
}

Tensor uniform_tensor(int c, int h, int w, real lo, real hi, Rng& rng) {
    Tensor t(c, h, w);
    real* p = t.data();
    for (long i = 0; i < t.size(); ++i) p[i] = rng.uniform(lo, hi);
    return t;
}

} // namespace dip
