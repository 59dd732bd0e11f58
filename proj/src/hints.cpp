#include "dip/hints.hpp"

#include <algorithm>
#include <cmath>

namespace dip {

void BBox::validate_inside(int img_h, int img_w) const {
    if (w < 0 || h < 0 || x < 0 || y < 0 || x + w > img_w || y + h > img_h)
        throw ConfigError("bbox " + std::to_string(x) + "," + std::to_string(y) + "," +
                          std::to_string(w) + "," + std::to_string(h) +
                          " outside image bounds " + std::to_string(img_w) + "x" + std::to_string(img_h));
}

Image compute_saliency(const Image& input) {
    if (input.empty()) throw ShapeError("compute_saliency: empty image");
    const int h = input.height(), w = input.width();

    // Opponent color features; intensity only for grayscale.
    int nf = input.channels() == 3 ? 3 : 1;
    Tensor feat(nf, h, w);
    if (input.channels() == 3) {
        const real* r = input.channel(0);
        const real* g = input.channel(1);
        const real* b = input.channel(2);
        real* fl = feat.channel(0);
        real* fo1 = feat.channel(1);
        real* fo2 = feat.channel(2);
        for (long i = 0; i < input.plane(); ++i) {
            fl[i] = (r[i] + g[i] + b[i]) / 3.0;
            fo1[i] = r[i] - g[i];
            fo2[i] = 0.5 * (r[i] + g[i]) - b[i];
        }
    } else {
        std::copy(input.channel(0), input.channel(0) + input.plane(), feat.channel(0));
    }

    const int radius = std::max(1, std::min(h, w) / 16);
    Tensor smooth = box_mean(feat, radius);

    Rgb mean{};
    for (int c = 0; c < nf; ++c) {
        const real* p = smooth.channel(c);
        real acc = 0.0;
        for (long i = 0; i < smooth.plane(); ++i) acc += p[i];
        mean[c] = acc / static_cast<real>(smooth.plane());
    }

    Image dist(1, h, w);
    real* d = dist.data();
    for (long i = 0; i < dist.plane(); ++i) {
        real acc = 0.0;
        for (int c = 0; c < nf; ++c) {
            real v = smooth.channel(c)[i] - mean[c];
            acc += v * v;
        }
        d[i] = std::sqrt(acc);
    }

    Image out = box_mean(dist, radius);
    real mx = out.max();
    if (mx <= 1e-9) return Image(1, h, w); // constant image: nothing is salient
    out *= 1.0 / mx;
    return out;
}

namespace {

// Rescale a nonnegative map to mean 1; uniform if the map is all zero.
Image normalize_mean1(const Image& m) {
    real mu = m.mean();
    if (mu <= 0.0) return Image::full(1, m.height(), m.width(), 1.0);
    Image out = m;
    out *= 1.0 / mu;
    return out;
}

} // namespace

std::pair<Image, Image> hint_weight_maps(const HintSchedule& schedule, int iteration,
                                         int height, int width) {
    Image uniform = Image::full(1, height, width, 1.0);
    if (!schedule.has_saliency() || iteration >= schedule.active_until_iteration)
        return {uniform, uniform};
    if (schedule.saliency.height() != height || schedule.saliency.width() != width)
        throw ShapeError("hint_weight_maps: saliency map size mismatch");

    Image w1 = normalize_mean1(schedule.saliency);
    Image inv(1, height, width);
    for (long i = 0; i < inv.size(); ++i) inv[i] = 1.0 - schedule.saliency[i];
    Image w2 = normalize_mean1(inv);

    if (schedule.fade == HintSchedule::Fade::kLinear && schedule.active_until_iteration > 0) {
        real f = static_cast<real>(iteration) / schedule.active_until_iteration;
        for (long i = 0; i < w1.size(); ++i) {
            w1[i] = (1.0 - f) * w1[i] + f;
            w2[i] = (1.0 - f) * w2[i] + f;
        }
    }
    return {w1, w2};
}

Image bbox_mask_constraint(const BBox& bbox, const Image& mask) {
    if (mask.channels() != 1)
        throw ShapeError("bbox_mask_constraint: mask must be single-channel");
    bbox.validate_inside(mask.height(), mask.width());
    Image out(1, mask.height(), mask.width());
    for (int y = bbox.y; y < bbox.y + bbox.h; ++y)
        for (int x = bbox.x; x < bbox.x + bbox.w; ++x)
            out.at(0, y, x) = mask.at(0, y, x);
    return out;
}

} // namespace dip
