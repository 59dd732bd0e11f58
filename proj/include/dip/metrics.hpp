#pragma once

#include <string>
#include <vector>

#include "dip/optimizer_config.hpp"
#include "dip/tensor.hpp"

namespace dip {

inline constexpr real kPsnrCap = 100.0; // dB reported for an exact match

// 10 log10(1 / MSE), capped at kPsnrCap.
real psnr(const Image& x, const Image& ref);

// Pearson correlation of flattened pixels after mean removal; invariant to a
// global constant offset. Zero-variance inputs return 0 with a warning.
real layer_correlation(const Image& y, const Image& gt);

// Intersection over union of binary masks; both empty -> 1.
real iou(const Image& mask, const Image& gt);

// Mean distance (RMS over patch values) of each patch to its nearest other
// patch; 0 for perfectly recurring textures, higher for diverse content.
real patch_diversity(const Image& input, int patch);

struct ComplexityArm {
    std::string name;
    std::vector<real> loss_curve;
    real final_loss = 0.0;
};

struct ComplexityCase {
    ComplexityArm component_a, component_b, mixture;
    bool mixture_harder = false;
};

struct DiagnosticReport {
    std::vector<ComplexityCase> cases;
    int sample_count = 0;
    real harder_fraction = 0.0;
    std::string mode;
};

enum class MixMode { kSuperimpose, kSplitLeftRight };

// Fits a single DIP to each component and to their mixture, and reports the
// fraction of pairs where the mixture's final loss exceeds the larger
// component loss. Reduced-scale reproduction of the loss-complexity probe.
DiagnosticReport mixture_complexity_experiment(
    const std::vector<std::pair<Image, Image>>& pairs, MixMode mode,
    const OptimConfig& config);

} // namespace dip
