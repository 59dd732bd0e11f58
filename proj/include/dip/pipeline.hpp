#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dip/optimizer.hpp"
#include "dip/postproc.hpp"
#include "dip/tasks.hpp"

namespace dip {

inline constexpr const char* kToolVersion = "0.1.0";

// Resolved run configuration; everything the manifest needs to reproduce a
// run bit for bit.
struct PipelineConfig {
    std::string task; // segment | segment-video | transparency | watermark | dehaze
    std::vector<std::string> inputs;
    std::string out_dir = "out";
    std::uint64_t seed = 0;

    int working_long_side = 384;
    int max_frames = 0;
    int stride = 1;

    std::optional<BBox> bbox; // original-image pixel coordinates
    std::optional<Rgb> airlight;
    std::optional<real> alpha;
    std::optional<real> beta;
    std::optional<int> iterations; // default: 4000 images, 8000 video/dehaze

    real learning_rate = 0.001;
    bool augment = true;
    int log_every = 0;
    int snapshot_every = 50;
    bool parallel = true;

    int gen_depth = 5;
    int gen_width = 128;
    int gen_skip = 4;
    int gen_kernel = 3;
    int gen_input_channels = 32;
    std::string upsample = "bilinear";

    std::string alpha_model = "scalar"; // scalar | dip
    bool hints = true;
    int hint_until = 500;
    real noise_delta_ratio = 0.05;
    real t_min = 0.05;
    int excl_scales = 3;

    bool refine_mask = true; // guided-filter segmentation masks at export
    GuidedFilterParams guided;
    bool export_full_mask = false; // extra full-resolution mask via guided upsampling

    void validate() const;
};

struct RunManifest {
    std::string task;
    std::string tool_version = kToolVersion;
    std::uint64_t seed = 0;
    nlohmann::json config;
    std::vector<std::string> input_paths;
    real duration_seconds = 0.0;
    LossReport final_loss;
    int best_iteration = -1;
    std::optional<Rgb> airlight_color;
    std::vector<real> alphas;
    Rgb ambiguity_offset{0.0, 0.0, 0.0};
};

struct PipelineResult {
    std::vector<LayerSet> layers;
    RunState state;
    RunManifest manifest;
    std::vector<std::string> files; // everything written, manifest last
    std::string out_dir;
};

nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

PipelineResult run_pipeline(const PipelineConfig& cfg);

// Re-runs the configuration recorded in a manifest into a fresh directory.
PipelineResult replay_manifest(const std::string& manifest_path, const std::string& out_dir);

// Writes layers + curves + manifest under out_dir and returns the file list
// (manifest.json last). Masks and t-maps are written as 16-bit PNGs; values
// are clamped to [0,1] here only.
std::vector<std::string> export_results(const std::vector<LayerSet>& layers,
                                        const RunState& state, RunManifest& manifest,
                                        const std::string& out_dir,
                                        bool is_video, bool write_airlight,
                                        const Image* full_mask = nullptr);

} // namespace dip
