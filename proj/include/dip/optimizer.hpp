#pragma once

#include "dip/optimizer_config.hpp"
#include "dip/tasks.hpp"

namespace dip {

// Element of the dihedral group D4: index 0..3 rotate CCW by 90 * index;
// 4..7 mirror horizontally first, then rotate by 90 * (index - 4).
Image dihedral_transform(const Image& input, int index);
int dihedral_inverse(int index);

class Adam {
public:
    Adam(std::vector<ParamRef> params, real lr, real beta1, real beta2, real eps = 1e-8);
    void step();

private:
    std::vector<ParamRef> params_;
    std::vector<real> m_, v_;
    real lr_, b1_, b2_, eps_;
    long t_ = 0;
};

struct OptimizeResult {
    std::vector<LayerSet> layers; // best snapshot, one entry per frame
    RunState state;
};

// Joint optimization of all generators in the graph: per iteration draws a
// frame (video) and an augmentation, evaluates with scheduled noise
// perturbation, and takes one Adam step on all parameters. Returns the
// best-snapshot layers and the full run state.
OptimizeResult optimize(TaskGraph& graph, const OptimConfig& config);

// Reconstruction-only fit of a single generator to one image; the probe
// behind the mixture-complexity diagnostic.
RunState single_dip_fit(const Image& input, const OptimConfig& config,
                        const GeneratorSpec* spec = nullptr);

// Small default generator for diagnostic fits.
GeneratorSpec diagnostic_generator_spec(int image_channels);

} // namespace dip
