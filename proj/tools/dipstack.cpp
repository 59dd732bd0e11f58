#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "dip/image_io.hpp"
#include "dip/metrics.hpp"
#include "dip/pipeline.hpp"
#include "dip/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliState {
    dip::PipelineConfig cfg;
    std::vector<int> bbox;
    std::vector<double> airlight;
    int iterations = -1;
    double alpha = -1.0, beta = -1.0;
    int jobs = 1;
};

void add_common_options(CLI::App* sub, CliState& s) {
    sub->add_option("--input", s.cfg.inputs, "input image/frame-dir (repeatable)")->required();
    sub->add_option("--input2", s.cfg.inputs, "second input image");
    sub->add_option("--bbox", s.bbox, "watermark bounding box X,Y,W,H (pixels)")->delimiter(',')->expected(4);
    sub->add_option("--iters", s.iterations, "optimization iterations");
    sub->add_option("--alpha", s.alpha, "exclusion loss weight");
    sub->add_option("--beta", s.beta, "regularizer weight");
    sub->add_option("--seed", s.cfg.seed, "RNG seed")->envname("DIPSTACK_SEED");
    sub->add_option("--out", s.cfg.out_dir, "output directory");
    sub->add_option("--size", s.cfg.working_long_side, "working resolution (longest side)");
    sub->add_option("--lr", s.cfg.learning_rate, "Adam learning rate");
    sub->add_flag("--augment,!--no-augment", s.cfg.augment, "dihedral augmentation");
    sub->add_option("--log-every", s.cfg.log_every, "print loss every N iterations");
    sub->add_option("--snapshot-every", s.cfg.snapshot_every, "best-snapshot cadence");
    sub->add_flag("--parallel,!--no-parallel", s.cfg.parallel, "per-generator threading");
    sub->add_option("--gen-depth", s.cfg.gen_depth, "generator depth");
    sub->add_option("--gen-width", s.cfg.gen_width, "generator channels per level");
    sub->add_option("--gen-skip", s.cfg.gen_skip, "skip channels per level");
    sub->add_option("--gen-kernel", s.cfg.gen_kernel, "conv kernel size (odd)");
    sub->add_option("--gen-input-channels", s.cfg.gen_input_channels, "noise input channels");
    sub->add_option("--upsample", s.cfg.upsample, "bilinear | nearest");
    sub->add_option("--alpha-model", s.cfg.alpha_model, "transparency constant mask: scalar | dip");
    sub->add_flag("--hints,!--no-hints", s.cfg.hints, "saliency hints");
    sub->add_option("--hint-until", s.cfg.hint_until, "hint relaxation iteration");
    sub->add_option("--max-frames", s.cfg.max_frames, "cap on loaded frames");
    sub->add_option("--stride", s.cfg.stride, "frame stride");
    sub->add_option("--airlight", s.airlight, "initial airlight R,G,B in [0,1]")->delimiter(',')->expected(3);
    sub->add_option("--t-min", s.cfg.t_min, "dehaze transmission lower bound");
    sub->add_option("--noise-delta", s.cfg.noise_delta_ratio, "video noise step ratio");
    sub->add_option("--excl-scales", s.cfg.excl_scales, "exclusion loss pyramid levels");
    sub->add_flag("--refine-mask,!--no-refine-mask", s.cfg.refine_mask,
                  "guided-filter segmentation masks at export");
    sub->add_option("--guided-radius", s.cfg.guided.radius, "guided filter radius");
    sub->add_option("--guided-eps", s.cfg.guided.eps, "guided filter regularization");
    sub->add_flag("--export-full-mask", s.cfg.export_full_mask,
                  "also export the mask at the original resolution");
    sub->add_option("--jobs", s.jobs, "parallel jobs for directory batch mode");
    sub->set_config("--config", "", "config file (flat key=value lines)");
}

void finalize(CliState& s, const std::string& task) {
    s.cfg.task = task;
    if (s.iterations >= 0) s.cfg.iterations = s.iterations;
    if (s.alpha >= 0.0) s.cfg.alpha = s.alpha;
    if (s.beta >= 0.0) s.cfg.beta = s.beta;
    if (s.bbox.size() == 4) s.cfg.bbox = dip::BBox{s.bbox[0], s.bbox[1], s.bbox[2], s.bbox[3]};
    if (s.airlight.size() == 3) s.cfg.airlight = dip::Rgb{s.airlight[0], s.airlight[1], s.airlight[2]};
}

int run_task(CliState& s) {
    // Directory batch mode for per-image tasks.
    const bool batchable = s.cfg.task == "segment" || s.cfg.task == "dehaze";
    if (batchable && s.cfg.inputs.size() == 1 && fs::is_directory(s.cfg.inputs[0])) {
        std::vector<std::string> files;
        for (const auto& e : fs::directory_iterator(s.cfg.inputs[0]))
            if (e.is_regular_file()) files.push_back(e.path().string());
        std::sort(files.begin(), files.end());
        if (files.empty()) throw dip::IoError("no inputs in " + s.cfg.inputs[0]);

        std::atomic<std::size_t> next{0};
        std::atomic<int> failures{0};
        auto worker = [&] {
            for (std::size_t i = next.fetch_add(1); i < files.size(); i = next.fetch_add(1)) {
                dip::PipelineConfig cfg = s.cfg;
                cfg.inputs = {files[i]};
                cfg.seed = dip::derive_seed(s.cfg.seed, i);
                cfg.out_dir = s.cfg.out_dir + "/" + fs::path(files[i]).stem().string();
                cfg.parallel = false; // one core per job
                try {
                    dip::run_pipeline(cfg);
                    std::fprintf(stderr, "done: %s\n", files[i].c_str());
                } catch (const std::exception& e) {
                    std::fprintf(stderr, "failed: %s: %s\n", files[i].c_str(), e.what());
                    ++failures;
                }
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < std::max(1, s.jobs); ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        return failures.load() == 0 ? 0 : 1;
    }

    dip::PipelineResult res = dip::run_pipeline(s.cfg);
    std::printf("%s: best loss %.6g at iteration %d; %zu files in %s\n",
                s.cfg.task.c_str(), res.state.best_total, res.state.best_iteration,
                res.files.size(), res.out_dir.c_str());
    return 0;
}

struct DiagnoseOptions {
    std::string input_dir;
    std::string out_dir = "out";
    int pairs = 10;
    int size = 64;
    int iters = 500;
    std::string mode = "both";
    std::uint64_t seed = 0;
    bool diversity = false;
};

json report_to_json(const dip::DiagnosticReport& r) {
    json cases = json::array();
    for (const auto& c : r.cases)
        cases.push_back({{"a", c.component_a.final_loss},
                         {"b", c.component_b.final_loss},
                         {"mixture", c.mixture.final_loss},
                         {"mixture_harder", c.mixture_harder}});
    return {{"mode", r.mode},
            {"sample_count", r.sample_count},
            {"harder_fraction", r.harder_fraction},
            {"cases", cases}};
}

void write_arm_curves(const dip::DiagnosticReport& r, const std::string& dir) {
    fs::create_directories(dir);
    auto write = [&](const dip::ComplexityArm& arm) {
        std::ofstream out(dir + "/" + r.mode + "_" + arm.name + ".csv");
        out << "iter,total\n";
        for (std::size_t i = 0; i < arm.loss_curve.size(); ++i)
            out << i << "," << arm.loss_curve[i] << "\n";
    };
    for (const auto& c : r.cases) {
        write(c.component_a);
        write(c.component_b);
        write(c.mixture);
    }
}

int run_diagnose(const DiagnoseOptions& o) {
    std::vector<std::pair<dip::Image, dip::Image>> pairs;
    if (!o.input_dir.empty()) {
        std::vector<dip::Image> imgs = dip::load_frames(o.input_dir, 2 * o.pairs, 1, 0);
        for (std::size_t i = 0; i + 1 < imgs.size(); i += 2)
            pairs.emplace_back(dip::resize_area(imgs[i], o.size, o.size),
                               dip::resize_area(imgs[i + 1], o.size, o.size));
    } else {
        for (int i = 0; i < o.pairs; ++i)
            pairs.emplace_back(dip::synth_texture(o.size, o.size, dip::derive_seed(o.seed, 2 * i)),
                               dip::synth_texture(o.size, o.size, dip::derive_seed(o.seed, 2 * i + 1)));
    }
    if (pairs.size() < 2) throw dip::ConfigError("diagnose needs at least 2 pairs");

    dip::OptimConfig oc;
    oc.iterations = o.iters;
    oc.seed = o.seed;
    oc.snapshot_every = 0;

    fs::create_directories(o.out_dir);
    json out = json::array();
    for (const std::string& mode : {std::string("superimpose"), std::string("split_lr")}) {
        if (o.mode != "both" && o.mode != mode) continue;
        dip::DiagnosticReport r = dip::mixture_complexity_experiment(
            pairs, mode == "superimpose" ? dip::MixMode::kSuperimpose : dip::MixMode::kSplitLeftRight,
            oc);
        json jr = report_to_json(r);
        if (o.diversity) {
            json divs = json::array();
            for (const auto& pr : pairs) {
                dip::Image miximg = mode == "superimpose"
                    ? dip::mix(0.5, pr.first, pr.second)
                    : dip::Image();
                json d = {{"a", dip::patch_diversity(pr.first, 5)},
                          {"b", dip::patch_diversity(pr.second, 5)}};
                if (!miximg.empty()) d["mixture"] = dip::patch_diversity(miximg, 5);
                divs.push_back(d);
            }
            jr["patch_diversity"] = divs;
        }
        out.push_back(jr);
        write_arm_curves(r, o.out_dir + "/curves");
        std::printf("diagnose %s: mixture harder in %.0f%% of %d pairs\n", mode.c_str(),
                    100.0 * r.harder_fraction, r.sample_count);
    }
    std::ofstream f(o.out_dir + "/diagnostic_report.json");
    if (!f) throw dip::IoError("cannot write " + o.out_dir + "/diagnostic_report.json");
    f << json(out).dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dipstack: unsupervised image decomposition via coupled per-image generators"};
    app.require_subcommand(1);
    app.set_version_flag("--version", dip::kToolVersion);

    CliState seg, segv, transp, wm, dh;
    add_common_options(app.add_subcommand("segment", "foreground/background separation"), seg);
    add_common_options(app.add_subcommand("segment-video", "video Fg/Bg separation"), segv);
    add_common_options(app.add_subcommand("transparency",
                                          "transparent layer separation (1 image, 2 mixtures, or frame dir)"),
                       transp);
    add_common_options(app.add_subcommand("watermark", "watermark removal (bbox or multi-image)"), wm);
    add_common_options(app.add_subcommand("dehaze", "single-image dehazing"), dh);

    DiagnoseOptions diag;
    CLI::App* dsub = app.add_subcommand("diagnose", "mixture-complexity diagnostic");
    dsub->add_option("--input", diag.input_dir, "directory of images (pairs in name order)");
    dsub->add_option("--pairs", diag.pairs, "number of pairs");
    dsub->add_option("--size", diag.size, "image size");
    dsub->add_option("--iters", diag.iters, "fit iterations per arm");
    dsub->add_option("--mode", diag.mode, "superimpose | split_lr | both");
    dsub->add_option("--seed", diag.seed, "RNG seed")->envname("DIPSTACK_SEED");
    dsub->add_option("--out", diag.out_dir, "output directory");
    dsub->add_flag("--diversity", diag.diversity, "also report patch diversity");
    dsub->set_config("--config", "", "config file (flat key=value lines)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("diagnose")) return run_diagnose(diag);
        for (auto& [name, state] : {std::pair<std::string, CliState*>{"segment", &seg},
                                    {"segment-video", &segv},
                                    {"transparency", &transp},
                                    {"watermark", &wm},
                                    {"dehaze", &dh}}) {
            if (app.got_subcommand(name)) {
                finalize(*state, name);
                return run_task(*state);
            }
        }
        std::fprintf(stderr, "no subcommand\n");
        return 2;
    } catch (const dip::ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const dip::ShapeError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const dip::DomainError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const dip::IoError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 3;
    } catch (const dip::NumericalError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
