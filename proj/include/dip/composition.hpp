#pragma once

#include <optional>
#include <vector>

#include "dip/tensor.hpp"

namespace dip {

// One decomposition result: layers, mixing mask (spatial or scalar alpha),
// and the reconstruction they imply. Task-specific extras ride along.
struct LayerSet {
    Image y1;
    Image y2;
    Image mask;        // 1-channel when spatial; empty when the mask is scalar
    real alpha = -1.0; // scalar mask value, used when mask is empty
    Image reconstruction;

    std::optional<Rgb> airlight_color;   // dehazing
    Rgb ambiguity_offset{0.0, 0.0, 0.0}; // constant c resolved at export

    bool scalar_mask() const { return mask.empty(); }
};

// I(x) = m(x) y1(x) + (1 - m(x)) y2(x)
Image mix(const Image& mask, const Image& y1, const Image& y2);
Image mix(real alpha, const Image& y1, const Image& y2);

// Two mixtures of the same layers with scalar coefficients.
// Returns (I1, I2) with Ik = alpha_k y1 + (1 - alpha_k) y2.
std::pair<Image, Image> mix_two_mixtures(real alpha1, real alpha2,
                                         const Image& y1, const Image& y2);

// Per-frame mixing. layer2 holds either one image per frame or a single
// shared image that is broadcast across frames (static-reflection mode).
// Masks may be spatial (entries in `masks`) or scalar (entries in `alphas`);
// exactly one of the two vectors must be sized like layer1_frames.
std::vector<Image> mix_video(const std::vector<Image>& masks,
                             const std::vector<Image>& layer1_frames,
                             const std::vector<Image>& layer2);
std::vector<Image> mix_video_scalar(const std::vector<real>& alphas,
                                    const std::vector<Image>& layer1_frames,
                                    const std::vector<Image>& layer2);

} // namespace dip
