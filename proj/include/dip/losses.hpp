#pragma once

#include <map>
#include <string>
#include <vector>

#include "dip/composition.hpp"
#include "dip/tensor.hpp"

namespace dip {

// Stabilizer for the binary-mask regularizer at m == 0.5 everywhere.
inline constexpr real kBinaryRegEps = 1e-6;
inline constexpr int kDefaultExclusionScales = 3;

struct LossWeights {
    real alpha = 0.1; // exclusion weight
    real beta = 0.5;  // regularizer weight
    int excl_scales = kDefaultExclusionScales;
    std::map<std::string, real> overrides;

    real term(const std::string& name, real fallback) const {
        auto it = overrides.find(name);
        return it == overrides.end() ? fallback : it->second;
    }
    // Airlight deviation term relative to beta. With beta = 0.05 the default
    // of 20 gives the airlight term an absolute weight of 1.
    real airlight_rel() const { return term("airlight_rel", 20.0); }
};

struct LossReport {
    real total = 0.0;
    real reconst = 0.0;
    real excl = 0.0;
    real reg = 0.0;
    std::vector<real> frame_reconst; // per-frame breakdown for video tasks
};

enum class RegKind { kNone, kBinaryMask, kDehaze };
RegKind parse_reg_kind(const std::string& name);

// Mean squared error over all pixels and channels.
real reconstruction_loss(const Image& target, const Image& rec);
real reconstruction_loss_grad(const Image& target, const Image& rec, Tensor& g_rec);

// MSE weighted by a 1-channel map (broadcast across channels). Hint maps are
// normalized to mean 1, so weighting redistributes rather than rescales.
real weighted_mse(const Image& target, const Image& y, const Image& weight);
real weighted_mse_grad(const Image& target, const Image& y, const Image& weight, Tensor& g_y);

// Multi-scale gradient-exclusion loss:
//   sum_n mean( tanh(l1 |dx y1|) tanh(l2 |dx y2|) ) + same for dy,
// at factor-2^(n-1) average-pooled scales, with l1 = sqrt(mean|grad y2| /
// mean|grad y1|) and l2 = 1/l1 balancing the layers per scale.
real exclusion_loss(const Image& y1, const Image& y2, int n_scales = kDefaultExclusionScales);
real exclusion_loss_grad(const Image& y1, const Image& y2, int n_scales,
                         Tensor& g1, Tensor& g2);

// (sum_x |m(x) - 0.5| + eps)^-1 ; minimized by binary masks.
real binary_mask_reg(const Image& m);
real binary_mask_reg_grad(const Image& m, Tensor& g);

// Mean squared 5-point Laplacian over interior pixels; zero for affine fields.
real smoothness_reg(const Image& t);
real smoothness_reg_grad(const Image& t, Tensor& g);

// Mean squared deviation of the airlight layer from a constant color.
real airlight_reg(const Image& A, const Rgb& color);
real airlight_reg_grad(const Image& A, const Rgb& color, Tensor& g);

// Assembles Eq.-style composite loss: reconst + alpha * excl + beta * reg.
// For RegKind::kDehaze, reg = smoothness(mask) + airlight_rel * airlight(y2).
// When hint_weights is non-null the reconstruction term is spatially weighted.
LossReport total_loss(const Image& input, const LayerSet& layers,
                      const LossWeights& weights, RegKind reg,
                      const Image* hint_weights = nullptr);
LossReport total_loss(const std::vector<Image>& frames,
                      const std::vector<LayerSet>& per_frame,
                      const LossWeights& weights, RegKind reg);

} // namespace dip
