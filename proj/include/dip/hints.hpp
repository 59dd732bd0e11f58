#pragma once

#include <optional>
#include <utility>

#include "dip/tensor.hpp"

namespace dip {

struct BBox {
    int x = 0, y = 0, w = 0, h = 0;
    void validate_inside(int img_h, int img_w) const;
};

// Spatial guidance that breaks layer ambiguity during the first iterations.
struct HintSchedule {
    Image saliency;            // 1-channel in [0,1]; empty when unused
    std::optional<BBox> bbox;  // watermark-removal constraint
    int active_until_iteration = 500;
    enum class Fade { kStep, kLinear } fade = Fade::kStep;

    bool has_saliency() const { return !saliency.empty(); }
};

// Crude color-distinctness saliency: distance of the box-smoothed opponent
// color features to the global mean feature, smoothed and normalized so the
// maximum is 1 (all-zero for constant images). Deterministic.
Image compute_saliency(const Image& input);

// Per-layer reconstruction weight maps (w1, w2), each of mean 1. Before the
// schedule relaxes, w1 emphasizes salient pixels and w2 their complement;
// at/after active_until_iteration both maps are uniform.
std::pair<Image, Image> hint_weight_maps(const HintSchedule& schedule, int iteration,
                                         int height, int width);

// Forces mask pixels outside the box to exactly zero. Idempotent.
Image bbox_mask_constraint(const BBox& bbox, const Image& mask);

} // namespace dip
