#include "dip/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "dip/image_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dip {

void PipelineConfig::validate() const {
    static const char* names[] = {"segment", "segment-video", "transparency", "watermark", "dehaze"};
    bool ok = false;
    for (const char* n : names) ok = ok || task == n;
    if (!ok) throw ConfigError("unknown task '" + task + "'");
    if (inputs.empty()) throw ConfigError("no inputs given");
    if (iterations && *iterations < 0) throw ConfigError("iterations must be >= 0");
    if (learning_rate <= 0.0) throw ConfigError("learning rate must be > 0");
    if (gen_depth < 1 || gen_width < 1 || gen_kernel < 1 || gen_kernel % 2 == 0)
        throw ConfigError("bad generator override");
    if (alpha_model != "scalar" && alpha_model != "dip")
        throw ConfigError("alpha_model must be scalar or dip");
    if (upsample != "bilinear" && upsample != "nearest")
        throw ConfigError("upsample must be bilinear or nearest");
}

json pipeline_config_to_json(const PipelineConfig& c) {
    json j;
    j["task"] = c.task;
    j["inputs"] = c.inputs;
    j["out_dir"] = c.out_dir;
    j["seed"] = c.seed;
    j["working_long_side"] = c.working_long_side;
    j["max_frames"] = c.max_frames;
    j["stride"] = c.stride;
    if (c.bbox) j["bbox"] = {c.bbox->x, c.bbox->y, c.bbox->w, c.bbox->h};
    if (c.airlight) j["airlight"] = {(*c.airlight)[0], (*c.airlight)[1], (*c.airlight)[2]};
    if (c.alpha) j["alpha"] = *c.alpha;
    if (c.beta) j["beta"] = *c.beta;
    if (c.iterations) j["iterations"] = *c.iterations;
    j["learning_rate"] = c.learning_rate;
    j["augment"] = c.augment;
    j["log_every"] = c.log_every;
    j["snapshot_every"] = c.snapshot_every;
    j["parallel"] = c.parallel;
    j["gen_depth"] = c.gen_depth;
    j["gen_width"] = c.gen_width;
    j["gen_skip"] = c.gen_skip;
    j["gen_kernel"] = c.gen_kernel;
    j["gen_input_channels"] = c.gen_input_channels;
    j["upsample"] = c.upsample;
    j["alpha_model"] = c.alpha_model;
    j["hints"] = c.hints;
    j["hint_until"] = c.hint_until;
    j["noise_delta_ratio"] = c.noise_delta_ratio;
    j["t_min"] = c.t_min;
    j["excl_scales"] = c.excl_scales;
    j["refine_mask"] = c.refine_mask;
    j["guided_radius"] = c.guided.radius;
    j["guided_eps"] = c.guided.eps;
    j["export_full_mask"] = c.export_full_mask;
    return j;
}

PipelineConfig pipeline_config_from_json(const json& j) {
    PipelineConfig c;
    c.task = j.at("task").get<std::string>();
    c.inputs = j.at("inputs").get<std::vector<std::string>>();
    c.out_dir = j.value("out_dir", c.out_dir);
    c.seed = j.value("seed", static_cast<std::uint64_t>(0));
    c.working_long_side = j.value("working_long_side", c.working_long_side);
    c.max_frames = j.value("max_frames", c.max_frames);
    c.stride = j.value("stride", c.stride);
    if (j.contains("bbox")) {
        auto b = j["bbox"].get<std::vector<int>>();
        c.bbox = BBox{b[0], b[1], b[2], b[3]};
    }
    if (j.contains("airlight")) {
        auto a = j["airlight"].get<std::vector<real>>();
        c.airlight = Rgb{a[0], a[1], a[2]};
    }
    if (j.contains("alpha")) c.alpha = j["alpha"].get<real>();
    if (j.contains("beta")) c.beta = j["beta"].get<real>();
    if (j.contains("iterations")) c.iterations = j["iterations"].get<int>();
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.augment = j.value("augment", c.augment);
    c.log_every = j.value("log_every", c.log_every);
    c.snapshot_every = j.value("snapshot_every", c.snapshot_every);
    c.parallel = j.value("parallel", c.parallel);
    c.gen_depth = j.value("gen_depth", c.gen_depth);
    c.gen_width = j.value("gen_width", c.gen_width);
    c.gen_skip = j.value("gen_skip", c.gen_skip);
    c.gen_kernel = j.value("gen_kernel", c.gen_kernel);
    c.gen_input_channels = j.value("gen_input_channels", c.gen_input_channels);
    c.upsample = j.value("upsample", c.upsample);
    c.alpha_model = j.value("alpha_model", c.alpha_model);
    c.hints = j.value("hints", c.hints);
    c.hint_until = j.value("hint_until", c.hint_until);
    c.noise_delta_ratio = j.value("noise_delta_ratio", c.noise_delta_ratio);
    c.t_min = j.value("t_min", c.t_min);
    c.excl_scales = j.value("excl_scales", c.excl_scales);
    c.refine_mask = j.value("refine_mask", c.refine_mask);
    c.guided.radius = j.value("guided_radius", c.guided.radius);
    c.guided.eps = j.value("guided_eps", c.guided.eps);
    c.export_full_mask = j.value("export_full_mask", c.export_full_mask);
    return c;
}

namespace {

TaskConfig make_task_config(const PipelineConfig& c) {
    TaskConfig t;
    t.alpha = c.alpha;
    t.beta = c.beta;
    t.excl_scales = c.excl_scales;
    t.hints_enabled = c.hints;
    t.hint_until = c.hint_until;
    t.airlight = c.airlight;
    t.noise_delta_ratio = c.noise_delta_ratio;
    t.alpha_model = c.alpha_model == "dip" ? TaskConfig::AlphaModel::kDip
                                           : TaskConfig::AlphaModel::kScalar;
    t.t_min = c.t_min;
    t.seed = c.seed;
    t.layer_spec = GeneratorSpec::make(c.gen_depth, c.gen_width, c.gen_skip, 3,
                                       c.gen_input_channels);
    t.layer_spec.kernel_size = c.gen_kernel;
    t.layer_spec.upsample_mode = c.upsample == "nearest"
                                     ? GeneratorSpec::Upsample::kNearest
                                     : GeneratorSpec::Upsample::kBilinear;
    return t;
}

BBox scale_bbox(const BBox& b, int orig_h, int orig_w, int h, int w) {
    if (orig_h == h && orig_w == w) return b;
    const real sy = static_cast<real>(h) / orig_h;
    const real sx = static_cast<real>(w) / orig_w;
    BBox s;
    s.x = static_cast<int>(std::floor(b.x * sx));
    s.y = static_cast<int>(std::floor(b.y * sy));
    s.w = std::max(1, static_cast<int>(std::ceil(b.w * sx)));
    s.h = std::max(1, static_cast<int>(std::ceil(b.h * sy)));
    s.w = std::min(s.w, w - s.x);
    s.h = std::min(s.h, h - s.y);
    return s;
}

void write_loss_csv(const std::string& path, const RunState& state) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "iter,total,reconst,excl,reg\n";
    char buf[160];
    for (const LossRow& r : state.history) {
        std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g,%.12g\n",
                      r.iteration, r.total, r.reconst, r.excl, r.reg);
        out << buf;
    }
}

void write_layer_files(const std::string& dir, const LayerSet& ls, bool write_airlight,
                       std::vector<std::string>& files) {
    auto put8 = [&](const std::string& name, const Image& img) {
        std::string p = dir + "/" + name;
        save_png(p, clamp01(img));
        files.push_back(p);
    };
    put8("y1.png", ls.y1);
    put8("y2.png", ls.y2);
    {
        std::string p = dir + "/mask.png";
        Image m = ls.scalar_mask()
                      ? Image::full(1, ls.y1.height(), ls.y1.width(), std::clamp(ls.alpha, 0.0, 1.0))
                      : clamp01(ls.mask);
        save_png16(p, m);
        files.push_back(p);
    }
    put8("reconstruction.png", ls.reconstruction);
    if (write_airlight) put8("airlight.png", ls.y2);
}

} // namespace

std::vector<std::string> export_results(const std::vector<LayerSet>& layers,
                                        const RunState& state, RunManifest& manifest,
                                        const std::string& out_dir,
                                        bool is_video, bool write_airlight,
                                        const Image* full_mask) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir))
        throw IoError("cannot create output directory " + out_dir);

    std::vector<std::string> files;
    if (!is_video && layers.size() == 1) {
        write_layer_files(out_dir, layers[0], write_airlight, files);
    } else {
        for (std::size_t f = 0; f < layers.size(); ++f) {
            char sub[32];
            std::snprintf(sub, sizeof(sub), "frame_%03zu", f);
            std::string dir = out_dir + "/" + sub;
            fs::create_directories(dir, ec);
            write_layer_files(dir, layers[f], write_airlight, files);
        }
    }
    if (full_mask) {
        std::string p = out_dir + "/mask_full.png";
        save_png16(p, clamp01(*full_mask));
        files.push_back(p);
    }
    {
        std::string p = out_dir + "/loss_curve.csv";
        write_loss_csv(p, state);
        files.push_back(p);
    }

    json j;
    j["task"] = manifest.task;
    j["tool_version"] = manifest.tool_version;
    j["seed"] = manifest.seed;
    j["config"] = manifest.config;
    j["hash_algorithm"] = "fnv1a64";
    json jin = json::array();
    for (const std::string& p : manifest.input_paths)
        jin.push_back({{"path", p}, {"hash", fnv1a_file_hex(p)}});
    j["inputs"] = jin;
    json jout = json::array();
    for (const std::string& p : files)
        jout.push_back({{"path", fs::path(p).lexically_relative(out_dir).string()},
                        {"hash", fnv1a_file_hex(p)}});
    j["outputs"] = jout;
    j["duration_seconds"] = manifest.duration_seconds;
    j["final_loss"] = {{"total", manifest.final_loss.total},
                       {"reconst", manifest.final_loss.reconst},
                       {"excl", manifest.final_loss.excl},
                       {"reg", manifest.final_loss.reg}};
    j["best_iteration"] = manifest.best_iteration;
    if (manifest.airlight_color)
        j["airlight_color"] = {(*manifest.airlight_color)[0], (*manifest.airlight_color)[1],
                               (*manifest.airlight_color)[2]};
    if (!manifest.alphas.empty()) j["alphas"] = manifest.alphas;
    j["ambiguity_offset"] = {manifest.ambiguity_offset[0], manifest.ambiguity_offset[1],
                             manifest.ambiguity_offset[2]};

    std::string mp = out_dir + "/manifest.json";
    std::ofstream out(mp);
    if (!out) throw IoError("cannot write " + mp);
    out << j.dump(2) << "\n";
    out.close();
    files.push_back(mp);
    return files;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();

    TaskConfig tcfg = make_task_config(cfg);
    const bool is_video_task = cfg.task == "segment-video" ||
                               (cfg.task == "transparency" && cfg.inputs.size() == 1 &&
                                fs::is_directory(cfg.inputs[0]));

    // Ingest at working resolution.
    std::vector<Image> images;
    int orig_h = 0, orig_w = 0;
    Image original_full; // for full-resolution mask export
    if (is_video_task) {
        images = load_frames(cfg.inputs[0], cfg.max_frames, cfg.stride, cfg.working_long_side);
    } else {
        for (const std::string& p : cfg.inputs) {
            Image img = load_image(p);
            orig_h = img.height();
            orig_w = img.width();
            if (cfg.export_full_mask && images.empty()) original_full = img;
            images.push_back(downscale_to_long_side(img, cfg.working_long_side));
        }
    }

    // Dispatch.
    TaskGraph graph = [&]() -> TaskGraph {
        if (cfg.task == "segment" && !is_video_task) {
            if (images.size() != 1) throw ConfigError("segment takes exactly one input");
            return build_segmentation(images[0], tcfg);
        }
        if (cfg.task == "segment-video")
            return build_video_segmentation(images, tcfg);
        if (cfg.task == "transparency") {
            if (is_video_task) return build_transparency_video(images, tcfg);
            if (images.size() == 2) {
                if (!images[0].same_shape(images[1]))
                    throw ShapeError("the two mixtures must have the same size");
                return build_transparency_two(images[0], images[1], tcfg);
            }
            if (images.size() == 1) return build_transparency(images[0], tcfg);
            throw ConfigError("transparency takes one image, two images, or a frame directory");
        }
        if (cfg.task == "watermark") {
            if (images.size() >= 2) return build_watermark_multi(images, tcfg);
            if (!cfg.bbox)
                throw ConfigError("single-image watermark removal needs --bbox (the "
                                  "decomposition is ambiguous without it)");
            BBox sb = scale_bbox(*cfg.bbox, orig_h, orig_w,
                                 images[0].height(), images[0].width());
            return build_watermark(images[0], sb, tcfg);
        }
        if (cfg.task == "dehaze") {
            if (images.size() != 1) throw ConfigError("dehaze takes exactly one input");
            return build_dehaze(images[0], tcfg);
        }
        throw ConfigError("unknown task '" + cfg.task + "'");
    }();
    graph.set_parallel(cfg.parallel);

    OptimConfig oc;
    const bool long_run = is_video_task || cfg.task == "dehaze";
    oc.iterations = cfg.iterations.value_or(long_run ? 8000 : 4000);
    oc.learning_rate = cfg.learning_rate;
    oc.augment = cfg.augment;
    oc.seed = cfg.seed;
    oc.log_every = cfg.log_every;
    oc.snapshot_every = cfg.snapshot_every;
    oc.parallel = cfg.parallel;

    OptimizeResult opt = optimize(graph, oc);

    PipelineResult res;
    res.state = std::move(opt.state);
    res.layers = std::move(opt.layers);
    res.out_dir = cfg.out_dir;

    RunManifest& m = res.manifest;
    m.task = cfg.task;
    m.seed = cfg.seed;
    m.config = pipeline_config_to_json(cfg);
    m.input_paths = cfg.inputs;
    m.final_loss = res.state.best_report;
    m.best_iteration = res.state.best_iteration;
    if (auto a = graph.airlight()) m.airlight_color = a;

    // Post-processing: mask refinement and color-ambiguity resolution.
    const bool segment_family = graph.type() == TaskType::kSegment ||
                                graph.type() == TaskType::kSegmentVideo;
    Image full_mask;
    for (std::size_t i = 0; i < res.layers.size(); ++i) {
        LayerSet& ls = res.layers[i];
        if (segment_family && cfg.refine_mask && !ls.scalar_mask()) {
            const Image& guide = graph.inputs()[std::min(i, graph.inputs().size() - 1)];
            ls.mask = guided_filter(guide, ls.mask, cfg.guided);
        }
        if (ls.scalar_mask() && ls.alpha > 0.0 && ls.alpha < 1.0 &&
            (graph.type() == TaskType::kTransparencyHint ||
             graph.type() == TaskType::kTransparencyTwoMixtures ||
             graph.type() == TaskType::kTransparencyVideo)) {
            auto [y1s, y2s, c] = resolve_color_ambiguity(ls.y1, ls.y2, ls.alpha);
            ls.y1 = std::move(y1s);
            ls.y2 = std::move(y2s);
            ls.ambiguity_offset = c;
            if (i == 0) m.ambiguity_offset = c;
        }
        if (ls.scalar_mask()) m.alphas.push_back(ls.alpha);
    }
    if (cfg.export_full_mask && !original_full.empty() && res.layers.size() == 1 &&
        !res.layers[0].scalar_mask()) {
        Image up = resize_bilinear(res.layers[0].mask, original_full.height(), original_full.width());
        full_mask = guided_filter(original_full, up, cfg.guided);
    }

    m.duration_seconds = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - t0).count();

    res.files = export_results(res.layers, res.state, m, cfg.out_dir,
                               res.layers.size() > 1,
                               graph.type() == TaskType::kDehaze,
                               full_mask.empty() ? nullptr : &full_mask);
    return res;
}

PipelineResult replay_manifest(const std::string& manifest_path, const std::string& out_dir) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open " + manifest_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("bad manifest " + manifest_path + ": " + e.what());
    }
    PipelineConfig cfg = pipeline_config_from_json(j.at("config"));
    cfg.out_dir = out_dir;
    return run_pipeline(cfg);
}

} // namespace dip
