#pragma once

#include <tuple>

#include "dip/tensor.hpp"

namespace dip {

struct GuidedFilterParams {
    int radius = 8;
    real eps = 1e-4;
};

// He et al. guided filter. Guide may have 1 or 3 channels, input must have 1.
// Box means use edge-replicating padding over (2r+1)^2 windows.
Image guided_filter(const Image& guide, const Image& input, const GuidedFilterParams& params);

// Indicator of m > threshold (strict).
Image binarize_mask(const Image& m, real threshold = 0.5);

// Resolves the constant color ambiguity of scalar-alpha transparency:
// shifts y1 by +c and y2 by -c*alpha/(1-alpha), preserving the mix exactly.
// Without a reference, c minimizes the layers' out-of-[0,1] mass; with a
// reference, c matches y1 to it per channel in the least-squares sense.
std::tuple<Image, Image, Rgb> resolve_color_ambiguity(const Image& y1, const Image& y2,
                                                      real alpha,
                                                      const Image* reference = nullptr);

} // namespace dip
