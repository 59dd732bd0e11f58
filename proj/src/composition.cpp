#include "dip/composition.hpp"

#include <cstdio>

namespace dip {

namespace {

void check_mask_range(const Image& mask) {
    const real* p = mask.data();
    for (long i = 0; i < mask.size(); ++i)
        if (p[i] < 0.0 || p[i] > 1.0)
            throw DomainError("mask value outside [0,1]");
}

} // namespace

Image mix(const Image& mask, const Image& y1, const Image& y2) {
    require_same_shape(y1, y2, "mix");
    if (mask.channels() != 1 || mask.height() != y1.height() || mask.width() != y1.width())
        throw ShapeError("mix: mask must be 1-channel with the layers' spatial size");
    check_mask_range(mask);
    Image out(y1.channels(), y1.height(), y1.width());
    const long plane = y1.plane();
    const real* m = mask.data();
    for (int c = 0; c < y1.channels(); ++c) {
        const real* a = y1.channel(c);
        const real* b = y2.channel(c);
        real* o = out.channel(c);
        for (long i = 0; i < plane; ++i)
            o[i] = m[i] * a[i] + (1.0 - m[i]) * b[i];
    }
    return out;
}

Image mix(real alpha, const Image& y1, const Image& y2) {
    require_same_shape(y1, y2, "mix");
    if (alpha < 0.0 || alpha > 1.0)
        throw DomainError("mix: alpha outside [0,1]");
    Image out(y1.channels(), y1.height(), y1.width());
    const real* a = y1.data();
    const real* b = y2.data();
    real* o = out.data();
    for (long i = 0; i < y1.size(); ++i)
        o[i] = alpha * a[i] + (1.0 - alpha) * b[i];
    return out;
}

std::pair<Image, Image> mix_two_mixtures(real alpha1, real alpha2,
                                         const Image& y1, const Image& y2) {
    if (alpha1 == alpha2)
        std::fprintf(stderr, "warning: mix_two_mixtures with alpha1 == alpha2 (%g); "
                             "the two mixtures are not identifiable\n", alpha1);
    return {mix(alpha1, y1, y2), mix(alpha2, y1, y2)};
}

std::vector<Image> mix_video(const std::vector<Image>& masks,
                             const std::vector<Image>& layer1_frames,
                             const std::vector<Image>& layer2) {
    const std::size_t n = layer1_frames.size();
    if (masks.size() != n)
        throw ShapeError("mix_video: mask count != frame count");
    if (layer2.size() != 1 && layer2.size() != n)
        throw ShapeError("mix_video: layer2 must be shared (1) or per-frame");
    std::vector<Image> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(mix(masks[i], layer1_frames[i], layer2.size() == 1 ? layer2[0] : layer2[i]));
    return out;
}

std::vector<Image> mix_video_scalar(const std::vector<real>& alphas,
                                    const std::vector<Image>& layer1_frames,
                                    const std::vector<Image>& layer2) {
    const std::size_t n = layer1_frames.size();
    if (alphas.size() != n)
        throw ShapeError("mix_video: alpha count != frame count");
    if (layer2.size() != 1 && layer2.size() != n)
        throw ShapeError("mix_video: layer2 must be shared (1) or per-frame");
    std::vector<Image> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(mix(alphas[i], layer1_frames[i], layer2.size() == 1 ? layer2[0] : layer2[i]));
    return out;
}

} // namespace dip
