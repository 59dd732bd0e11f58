#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dip/composition.hpp"
#include "dip/generator.hpp"
#include "dip/hints.hpp"
#include "dip/losses.hpp"

namespace dip {

enum class TaskType {
    kSegment,
    kSegmentVideo,
    kTransparencyHint,
    kTransparencyTwoMixtures,
    kTransparencyVideo,
    kWatermarkBBox,
    kWatermarkMulti,
    kDehaze,
    kSingleFit, // one-generator reconstruction probe
};

std::string task_name(TaskType t);

// Build-time knobs shared by all task builders. Loss weights default per
// task; explicit values here win.
struct TaskConfig {
    std::optional<real> alpha;
    std::optional<real> beta;
    int excl_scales = kDefaultExclusionScales;
    std::map<std::string, real> weight_overrides;

    bool hints_enabled = true; // saliency hints for single-image seg/transparency
    int hint_until = 500;
    HintSchedule::Fade hint_fade = HintSchedule::Fade::kStep;
    std::optional<Image> saliency_override;

    std::optional<BBox> bbox;
    std::optional<Rgb> airlight;     // dehaze: skip estimation when provided
    real noise_delta_ratio = 0.05;   // video: |dz| / |z| per frame step
    enum class AlphaModel { kScalar, kDip } alpha_model = AlphaModel::kScalar;
    bool video_spatial_mask = false; // experimental spatial per-frame masks
    real t_min = 0.05;               // dehaze transmission lower bound

    GeneratorSpec layer_spec;                 // output channels set by the task
    std::optional<GeneratorSpec> mask_spec;   // defaults to layer_spec with 1 output
    std::uint64_t seed = 0;
};

// A fully wired decomposition problem: generators, their noises, the mixing
// structure, regularizer and hints. Built once, then driven by optimize().
class TaskGraph {
public:
    ~TaskGraph();
    TaskGraph(TaskGraph&&) noexcept;
    TaskGraph& operator=(TaskGraph&&) noexcept;

    TaskType type() const;
    int generator_count() const;
    Generator& generator(int i);
    const std::vector<NoiseField>& noises(int gen) const;
    NoiseField& mutable_noise(int gen, int idx);
    int frame_count() const;              // frames sampled during optimization
    const std::vector<Image>& inputs() const;
    const LossWeights& weights() const;
    LossWeights& weights();
    const HintSchedule& hints() const;
    RegKind reg_kind() const;
    std::optional<Rgb> airlight() const;

    std::vector<ParamRef> params();
    void zero_grads();

    // One optimization step at the given augmentation/frame draw: forward all
    // generators with iteration-scheduled noise perturbation, assemble the
    // task loss, and push gradients back into every parameter.
    LossReport train_step(int iteration, int total_iterations, int frame_idx, int aug_idx);

    // Loss of a single evaluation without touching gradients; used by tests
    // to probe augmentation consistency.
    LossReport evaluate(int iteration, int total_iterations, int frame_idx, int aug_idx);

    // Perturbation-free, unaugmented evaluation of every frame.
    std::pair<std::vector<LayerSet>, LossReport> snapshot();

    void set_parallel(bool on);

    struct Impl;
    explicit TaskGraph(std::unique_ptr<Impl> impl);

private:
    std::unique_ptr<Impl> impl_;
};

TaskGraph build_segmentation(const Image& input, const TaskConfig& cfg);
TaskGraph build_video_segmentation(const std::vector<Image>& frames, const TaskConfig& cfg);
TaskGraph build_transparency(const Image& input, const TaskConfig& cfg);
TaskGraph build_transparency_two(const Image& mix1, const Image& mix2, const TaskConfig& cfg);
TaskGraph build_transparency_video(const std::vector<Image>& frames, const TaskConfig& cfg);
TaskGraph build_watermark(const Image& input, const BBox& bbox, const TaskConfig& cfg);
TaskGraph build_watermark_multi(const std::vector<Image>& images, const TaskConfig& cfg);
TaskGraph build_dehaze(const Image& input, const TaskConfig& cfg);
TaskGraph build_single_fit(const Image& input, const TaskConfig& cfg);

// Dark-channel airlight estimate: mean color of the brightest 0.1% of
// dark-channel pixels (15x15 min filter), clamped to [0,1].
Rgb estimate_airlight(const Image& input);

} // namespace dip
