#include "dip/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <numeric>

#include "dip/optimizer.hpp"

namespace dip {

std::string task_name(TaskType t) {
    switch (t) {
        case TaskType::kSegment: return "segment";
        case TaskType::kSegmentVideo: return "segment_video";
        case TaskType::kTransparencyHint: return "transparency_hint";
        case TaskType::kTransparencyTwoMixtures: return "transparency_two_mixtures";
        case TaskType::kTransparencyVideo: return "transparency_video";
        case TaskType::kWatermarkBBox: return "watermark_bbox";
        case TaskType::kWatermarkMulti: return "watermark_multi";
        case TaskType::kDehaze: return "dehaze";
        case TaskType::kSingleFit: return "single_fit";
    }
    return "unknown";
}

namespace {

void run_jobs(std::vector<std::function<void()>>& jobs, bool parallel) {
    if (!parallel || jobs.size() < 2) {
        for (auto& j : jobs) j();
        return;
    }
    std::vector<std::future<void>> futs;
    futs.reserve(jobs.size() - 1);
    for (std::size_t i = 1; i < jobs.size(); ++i)
        futs.push_back(std::async(std::launch::async, jobs[i]));
    jobs[0]();
    for (auto& f : futs) f.get();
}

inline real sigmoid(real x) { return 1.0 / (1.0 + std::exp(-x)); }

// d(mse)/d(layers) through rec = m .* a + (1-m) .* b. Gradients accumulate.
void mix_backward_spatial(const Tensor& g_rec, const Image& mask,
                          const Image& a, const Image& b,
                          Tensor& g_a, Tensor& g_b, Tensor& g_mask) {
    const long plane = a.plane();
    for (int c = 0; c < a.channels(); ++c) {
        const real* g = g_rec.channel(c);
        const real* m = mask.data();
        const real* pa = a.channel(c);
        const real* pb = b.channel(c);
        real* ga = g_a.channel(c);
        real* gb = g_b.channel(c);
        real* gm = g_mask.data();
        for (long i = 0; i < plane; ++i) {
            ga[i] += g[i] * m[i];
            gb[i] += g[i] * (1.0 - m[i]);
            gm[i] += g[i] * (pa[i] - pb[i]);
        }
    }
}

real mix_backward_scalar(const Tensor& g_rec, real alpha,
                         const Image& a, const Image& b,
                         Tensor& g_a, Tensor& g_b) {
    real g_alpha = 0.0;
    const real* g = g_rec.data();
    const real* pa = a.data();
    const real* pb = b.data();
    real* ga = g_a.data();
    real* gb = g_b.data();
    for (long i = 0; i < a.size(); ++i) {
        ga[i] += g[i] * alpha;
        gb[i] += g[i] * (1.0 - alpha);
        g_alpha += g[i] * (pa[i] - pb[i]);
    }
    return g_alpha;
}

Image spatial_mix(const Image& mask, const Image& a, const Image& b) {
    Image out(a.channels(), a.height(), a.width());
    const long plane = a.plane();
    for (int c = 0; c < a.channels(); ++c) {
        const real* m = mask.data();
        const real* pa = a.channel(c);
        const real* pb = b.channel(c);
        real* o = out.channel(c);
        for (long i = 0; i < plane; ++i)
            o[i] = m[i] * pa[i] + (1.0 - m[i]) * pb[i];
    }
    return out;
}

Image scalar_mix(real alpha, const Image& a, const Image& b) {
    Image out(a.channels(), a.height(), a.width());
    const real* pa = a.data();
    const real* pb = b.data();
    real* o = out.data();
    for (long i = 0; i < a.size(); ++i)
        o[i] = alpha * pa[i] + (1.0 - alpha) * pb[i];
    return out;
}

} // namespace

// ---------------------------------------------------------------------------

struct TaskGraph::Impl {
    TaskType type = TaskType::kSingleFit;
    std::vector<Image> inputs;
    std::vector<std::unique_ptr<Generator>> gens;
    std::vector<std::vector<NoiseField>> noises; // [gen][frame-or-variant]
    LossWeights weights;
    RegKind reg = RegKind::kNone;
    HintSchedule hint_schedule;
    std::optional<Rgb> airlight_color;
    Image bbox_indicator; // empty unless watermark_bbox
    TaskConfig::AlphaModel alpha_model = TaskConfig::AlphaModel::kScalar;
    bool spatial_video_mask = false;
    real t_min = 0.05;
    std::vector<real> theta, theta_grad; // learnable scalar alphas
    bool parallel = true;

    int frame_count() const {
        if (type == TaskType::kSegmentVideo || type == TaskType::kTransparencyVideo)
            return static_cast<int>(inputs.size());
        return 1;
    }

    std::vector<ParamRef> params() {
        std::vector<ParamRef> refs;
        for (auto& g : gens)
            for (ParamRef r : g->params()) refs.push_back(r);
        if (!theta.empty())
            refs.push_back({theta.data(), theta_grad.data(), static_cast<long>(theta.size())});
        return refs;
    }

    void zero_grads() {
        for (auto& g : gens) g->zero_grad();
        std::fill(theta_grad.begin(), theta_grad.end(), 0.0);
    }

    Tensor gen_input(int gi, int variant, int iter, int ramp, int aug, bool clean) const {
        const NoiseField& z = noises[gi][variant];
        Tensor in = clean ? z.base : perturbed_input(z, iter, ramp);
        return aug == 0 ? in : dihedral_transform(in, aug);
    }

    struct Eval {
        LossReport report;
        std::vector<LayerSet> layers;
    };

    Eval eval(int iter, int total, int frame, int aug, bool with_grad, bool capture);
};

TaskGraph::TaskGraph(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
TaskGraph::~TaskGraph() = default;
TaskGraph::TaskGraph(TaskGraph&&) noexcept = default;
TaskGraph& TaskGraph::operator=(TaskGraph&&) noexcept = default;

TaskType TaskGraph::type() const { return impl_->type; }
int TaskGraph::generator_count() const { return static_cast<int>(impl_->gens.size()); }
Generator& TaskGraph::generator(int i) { return *impl_->gens[i]; }
const std::vector<NoiseField>& TaskGraph::noises(int gen) const { return impl_->noises[gen]; }
NoiseField& TaskGraph::mutable_noise(int gen, int idx) { return impl_->noises[gen][idx]; }
int TaskGraph::frame_count() const { return impl_->frame_count(); }
const std::vector<Image>& TaskGraph::inputs() const { return impl_->inputs; }
const LossWeights& TaskGraph::weights() const { return impl_->weights; }
LossWeights& TaskGraph::weights() { return impl_->weights; }
const HintSchedule& TaskGraph::hints() const { return impl_->hint_schedule; }
RegKind TaskGraph::reg_kind() const { return impl_->reg; }
std::optional<Rgb> TaskGraph::airlight() const { return impl_->airlight_color; }
std::vector<ParamRef> TaskGraph::params() { return impl_->params(); }
void TaskGraph::zero_grads() { impl_->zero_grads(); }
void TaskGraph::set_parallel(bool on) { impl_->parallel = on; }

LossReport TaskGraph::train_step(int iteration, int total_iterations, int frame_idx, int aug_idx) {
    return impl_->eval(iteration, total_iterations, frame_idx, aug_idx, true, false).report;
}

LossReport TaskGraph::evaluate(int iteration, int total_iterations, int frame_idx, int aug_idx) {
    return impl_->eval(iteration, total_iterations, frame_idx, aug_idx, false, false).report;
}

std::pair<std::vector<LayerSet>, LossReport> TaskGraph::snapshot() {
    Impl& im = *impl_;
    const int frames = im.frame_count();
    if (frames == 1) {
        Impl::Eval e = im.eval(0, 1, 0, 0, false, true);
        return {std::move(e.layers), std::move(e.report)};
    }
    std::vector<LayerSet> layers;
    LossReport r;
    for (int f = 0; f < frames; ++f) {
        Impl::Eval e = im.eval(0, 1, f, 0, false, true);
        for (LayerSet& ls : e.layers) layers.push_back(std::move(ls));
        r.frame_reconst.push_back(e.report.reconst);
        r.reconst += e.report.reconst;
        r.excl += e.report.excl;
        r.reg += e.report.reg;
    }
    const real inv = 1.0 / frames;
    r.reconst *= inv;
    r.excl *= inv;
    r.reg *= inv;
    r.total = r.reconst + im.weights.alpha * r.excl + im.weights.beta * r.reg;
    return {std::move(layers), std::move(r)};
}

// ---------------------------------------------------------------------------
// Step evaluation

TaskGraph::Impl::Eval TaskGraph::Impl::eval(int iter, int total, int frame, int aug,
                                            bool with_grad, bool capture) {
    Eval out;
    const int ramp = std::max(1, total / 2);
    const bool clean = capture; // snapshots are perturbation-free by contract
    const real alpha_w = weights.alpha;

    const Image& input_frame = inputs[std::min<std::size_t>(frame, inputs.size() - 1)];
    Image input_t = aug == 0 ? input_frame : dihedral_transform(input_frame, aug);

    // Hint weight maps in the current orientation.
    Image w1, w2;
    bool hints_active = hint_schedule.has_saliency() &&
                        iter < hint_schedule.active_until_iteration && !clean;
    if (hints_active) {
        std::tie(w1, w2) = hint_weight_maps(hint_schedule, iter,
                                            inputs[frame].height(), inputs[frame].width());
        if (aug != 0) {
            w1 = dihedral_transform(w1, aug);
            w2 = dihedral_transform(w2, aug);
        }
    }

    auto add_exclusion = [&](const Image& a, const Image& b, Tensor* ga, Tensor* gb) {
        if (!with_grad || alpha_w == 0.0)
            return exclusion_loss(a, b, weights.excl_scales);
        Tensor ea, eb;
        real v = exclusion_loss_grad(a, b, weights.excl_scales, ea, eb);
        if (ga) axpy(alpha_w, ea, *ga);
        if (gb) axpy(alpha_w, eb, *gb);
        return v;
    };

    auto add_hints = [&](const Image& y1, const Image& y2, Tensor* g1, Tensor* g2) -> real {
        if (!hints_active) return 0.0;
        real v = 0.0;
        if (with_grad) {
            Tensor h1, h2;
            v += weighted_mse_grad(input_t, y1, w1, h1);
            v += weighted_mse_grad(input_t, y2, w2, h2);
            *g1 += h1;
            *g2 += h2;
        } else {
            v += weighted_mse(input_t, y1, w1);
            v += weighted_mse(input_t, y2, w2);
        }
        return v;
    };

    switch (type) {
    case TaskType::kSingleFit: {
        Tensor in = gen_input(0, 0, iter, ramp, aug, clean);
        const Image& y = gens[0]->forward(in);
        Tensor g;
        out.report.reconst = with_grad ? reconstruction_loss_grad(input_t, y, g)
                                       : reconstruction_loss(input_t, y);
        out.report.total = out.report.reconst;
        if (with_grad) gens[0]->backward(g);
        if (capture) {
            LayerSet ls;
            ls.y1 = y;
            ls.y2 = Tensor(y.channels(), y.height(), y.width());
            ls.alpha = 1.0;
            ls.reconstruction = y;
            out.layers.push_back(std::move(ls));
        }
        break;
    }

    case TaskType::kSegment:
    case TaskType::kSegmentVideo: {
        Image y1, y2, m;
        {
            std::vector<std::function<void()>> jobs;
            Tensor i0 = gen_input(0, type == TaskType::kSegment ? 0 : frame, iter, ramp, aug, clean);
            Tensor i1 = gen_input(1, type == TaskType::kSegment ? 0 : frame, iter, ramp, aug, clean);
            Tensor i2 = gen_input(2, type == TaskType::kSegment ? 0 : frame, iter, ramp, aug, clean);
            jobs.push_back([&] { y1 = gens[0]->forward(i0); });
            jobs.push_back([&] { y2 = gens[1]->forward(i1); });
            jobs.push_back([&] { m = gens[2]->forward(i2); });
            run_jobs(jobs, parallel);
        }
        Image rec = spatial_mix(m, y1, y2);
        Tensor g1(y1.channels(), y1.height(), y1.width());
        Tensor g2 = g1, gm(1, m.height(), m.width());
        Tensor g_rec;
        out.report.reconst = with_grad ? reconstruction_loss_grad(input_t, rec, g_rec)
                                       : reconstruction_loss(input_t, rec);
        if (with_grad) mix_backward_spatial(g_rec, m, y1, y2, g1, g2, gm);
        out.report.reconst += add_hints(y1, y2, &g1, &g2);
        out.report.excl = add_exclusion(y1, y2, &g1, &g2);
        if (with_grad) {
            Tensor gb;
            out.report.reg = binary_mask_reg_grad(m, gb);
            axpy(weights.beta, gb, gm);
        } else {
            out.report.reg = binary_mask_reg(m);
        }
        if (with_grad) {
            std::vector<std::function<void()>> jobs;
            jobs.push_back([&] { gens[0]->backward(g1); });
            jobs.push_back([&] { gens[1]->backward(g2); });
            jobs.push_back([&] { gens[2]->backward(gm); });
            run_jobs(jobs, parallel);
        }
        if (capture) {
            LayerSet ls;
            ls.y1 = y1; ls.y2 = y2; ls.mask = m; ls.reconstruction = rec;
            out.layers.push_back(std::move(ls));
        }
        break;
    }

    case TaskType::kTransparencyHint:
    case TaskType::kTransparencyVideo: {
        const bool video = type == TaskType::kTransparencyVideo;
        const int f = video ? frame : 0;
        const bool use_dip_alpha = alpha_model == TaskConfig::AlphaModel::kDip;
        Image y1, y2, mraw;
        {
            std::vector<std::function<void()>> jobs;
            Tensor i0 = gen_input(0, f, iter, ramp, aug, clean);
            Tensor i1 = gen_input(1, 0, iter, ramp, aug, clean); // static layer
            jobs.push_back([&] { y1 = gens[0]->forward(i0); });
            jobs.push_back([&] { y2 = gens[1]->forward(i1); });
            Tensor i2;
            if (use_dip_alpha) {
                i2 = gen_input(2, f, iter, ramp, aug, clean);
                jobs.push_back([&] { mraw = gens[2]->forward(i2); });
            }
            run_jobs(jobs, parallel);
        }

        Tensor g1(y1.channels(), y1.height(), y1.width());
        Tensor g2 = g1;
        Image rec;
        real a = 0.0;
        Image m_spatial;
        const bool spatial = video && spatial_video_mask && use_dip_alpha;
        if (spatial) {
            m_spatial = mraw;
            rec = spatial_mix(m_spatial, y1, y2);
        } else {
            a = use_dip_alpha ? mraw.mean() : sigmoid(theta[f]);
            rec = scalar_mix(a, y1, y2);
        }
        Tensor g_rec;
        out.report.reconst = with_grad ? reconstruction_loss_grad(input_t, rec, g_rec)
                                       : reconstruction_loss(input_t, rec);
        if (with_grad) {
            if (spatial) {
                Tensor gm(1, m_spatial.height(), m_spatial.width());
                mix_backward_spatial(g_rec, m_spatial, y1, y2, g1, g2, gm);
                gens[2]->backward(gm);
            } else {
                real g_alpha = mix_backward_scalar(g_rec, a, y1, y2, g1, g2);
                if (use_dip_alpha) {
                    Tensor gm = Tensor::full(1, mraw.height(), mraw.width(),
                                             g_alpha / static_cast<real>(mraw.plane()));
                    gens[2]->backward(gm);
                } else {
                    theta_grad[f] += g_alpha * a * (1.0 - a);
                }
            }
        }
        out.report.reconst += add_hints(y1, y2, &g1, &g2);
        out.report.excl = add_exclusion(y1, y2, &g1, &g2);
        if (with_grad) {
            std::vector<std::function<void()>> jobs;
            jobs.push_back([&] { gens[0]->backward(g1); });
            jobs.push_back([&] { gens[1]->backward(g2); });
            run_jobs(jobs, parallel);
        }
        if (capture) {
            LayerSet ls;
            ls.y1 = y1; ls.y2 = y2; ls.reconstruction = rec;
            if (spatial) ls.mask = m_spatial; else ls.alpha = a;
            out.layers.push_back(std::move(ls));
        }
        break;
    }

    case TaskType::kTransparencyTwoMixtures: {
        Image y1, y2, m0;
        {
            std::vector<std::function<void()>> jobs;
            Tensor i0 = gen_input(0, 0, iter, ramp, aug, clean);
            Tensor i1 = gen_input(1, 0, iter, ramp, aug, clean);
            Tensor i2 = gen_input(2, 0, iter, ramp, aug, clean);
            jobs.push_back([&] { y1 = gens[0]->forward(i0); });
            jobs.push_back([&] { y2 = gens[1]->forward(i1); });
            jobs.push_back([&] { m0 = gens[2]->forward(i2); });
            run_jobs(jobs, parallel);
        }
        Tensor i2b = gen_input(2, 1, iter, ramp, aug, clean);
        Image m1 = gens[2]->forward(i2b); // caches now belong to the second noise
        real a0 = m0.mean(), a1 = m1.mean();

        Image in0_t = aug == 0 ? inputs[0] : dihedral_transform(inputs[0], aug);
        Image in1_t = aug == 0 ? inputs[1] : dihedral_transform(inputs[1], aug);
        Image rec0 = scalar_mix(a0, y1, y2);
        Image rec1 = scalar_mix(a1, y1, y2);

        Tensor g1(y1.channels(), y1.height(), y1.width());
        Tensor g2 = g1;
        real ga0 = 0.0, ga1 = 0.0;
        if (with_grad) {
            Tensor gr0, gr1;
            real l0 = reconstruction_loss_grad(in0_t, rec0, gr0);
            real l1 = reconstruction_loss_grad(in1_t, rec1, gr1);
            gr0 *= 0.5; gr1 *= 0.5; // mean over the two mixtures
            out.report.reconst = 0.5 * (l0 + l1);
            ga0 = mix_backward_scalar(gr0, a0, y1, y2, g1, g2);
            ga1 = mix_backward_scalar(gr1, a1, y1, y2, g1, g2);
        } else {
            out.report.reconst = 0.5 * (reconstruction_loss(in0_t, rec0) +
                                        reconstruction_loss(in1_t, rec1));
        }
        out.report.excl = add_exclusion(y1, y2, &g1, &g2);
        if (with_grad) {
            // Mask DIP backward for the second noise (cached), then re-run the
            // first noise to restore its caches and push its gradient.
            Tensor gm1 = Tensor::full(1, m1.height(), m1.width(), ga1 / static_cast<real>(m1.plane()));
            gens[2]->backward(gm1);
            Tensor i2a = gen_input(2, 0, iter, ramp, aug, clean);
            gens[2]->forward(i2a);
            Tensor gm0 = Tensor::full(1, m0.height(), m0.width(), ga0 / static_cast<real>(m0.plane()));
            gens[2]->backward(gm0);
            std::vector<std::function<void()>> jobs;
            jobs.push_back([&] { gens[0]->backward(g1); });
            jobs.push_back([&] { gens[1]->backward(g2); });
            run_jobs(jobs, parallel);
        }
        if (capture) {
            LayerSet a;
            a.y1 = y1; a.y2 = y2; a.alpha = a0; a.reconstruction = rec0;
            LayerSet b;
            b.y1 = y1; b.y2 = y2; b.alpha = a1; b.reconstruction = rec1;
            out.layers.push_back(std::move(a));
            out.layers.push_back(std::move(b));
        }
        out.report.frame_reconst = {reconstruction_loss(in0_t, rec0), reconstruction_loss(in1_t, rec1)};
        break;
    }

    case TaskType::kWatermarkBBox: {
        Image y1, y2, mraw;
        {
            std::vector<std::function<void()>> jobs;
            Tensor i0 = gen_input(0, 0, iter, ramp, aug, clean);
            Tensor i1 = gen_input(1, 0, iter, ramp, aug, clean);
            Tensor i2 = gen_input(2, 0, iter, ramp, aug, clean);
            jobs.push_back([&] { y1 = gens[0]->forward(i0); });
            jobs.push_back([&] { y2 = gens[1]->forward(i1); });
            jobs.push_back([&] { mraw = gens[2]->forward(i2); });
            run_jobs(jobs, parallel);
        }
        Image box = aug == 0 ? bbox_indicator : dihedral_transform(bbox_indicator, aug);
        Image m(1, mraw.height(), mraw.width());
        for (long i = 0; i < m.size(); ++i) m[i] = mraw[i] * box[i];
        // Opacity mask applies to the watermark layer y2.
        Image rec = spatial_mix(m, y2, y1);
        Tensor g1(y1.channels(), y1.height(), y1.width());
        Tensor g2 = g1, gm(1, m.height(), m.width());
        Tensor g_rec;
        out.report.reconst = with_grad ? reconstruction_loss_grad(input_t, rec, g_rec)
                                       : reconstruction_loss(input_t, rec);
        if (with_grad) mix_backward_spatial(g_rec, m, y2, y1, g2, g1, gm);
        out.report.excl = add_exclusion(y1, y2, &g1, &g2);
        if (with_grad) {
            for (long i = 0; i < gm.size(); ++i) gm[i] *= box[i];
            std::vector<std::function<void()>> jobs;
            jobs.push_back([&] { gens[0]->backward(g1); });
            jobs.push_back([&] { gens[1]->backward(g2); });
            jobs.push_back([&] { gens[2]->backward(gm); });
            run_jobs(jobs, parallel);
        }
        if (capture) {
            LayerSet ls;
            ls.y1 = y1; ls.y2 = y2; ls.mask = m; ls.reconstruction = rec;
            out.layers.push_back(std::move(ls));
        }
        break;
    }

    case TaskType::kWatermarkMulti: {
        const int k = static_cast<int>(inputs.size());
        std::vector<Image> clean_imgs(k);
        Image y2, m;
        {
            std::vector<std::function<void()>> jobs;
            std::vector<Tensor> ins(k);
            for (int i = 0; i < k; ++i) {
                ins[i] = gen_input(i, 0, iter, ramp, aug, clean);
                jobs.push_back([&, i] { clean_imgs[i] = gens[i]->forward(ins[i]); });
            }
            Tensor iw = gen_input(k, 0, iter, ramp, aug, clean);
            Tensor im = gen_input(k + 1, 0, iter, ramp, aug, clean);
            jobs.push_back([&] { y2 = gens[k]->forward(iw); });
            jobs.push_back([&] { m = gens[k + 1]->forward(im); });
            run_jobs(jobs, parallel);
        }
        std::vector<Tensor> g1(k);
        Tensor g2(y2.channels(), y2.height(), y2.width());
        Tensor gm(1, m.height(), m.width());
        std::vector<Image> recs(k);
        const real invk = 1.0 / k;
        for (int i = 0; i < k; ++i) {
            Image in_t = aug == 0 ? inputs[i] : dihedral_transform(inputs[i], aug);
            recs[i] = spatial_mix(m, y2, clean_imgs[i]);
            g1[i] = Tensor(y2.channels(), y2.height(), y2.width());
            if (with_grad) {
                Tensor gr;
                real l = reconstruction_loss_grad(in_t, recs[i], gr);
                gr *= invk;
                out.report.reconst += invk * l;
                mix_backward_spatial(gr, m, y2, clean_imgs[i], g2, g1[i], gm);
            } else {
                out.report.reconst += invk * reconstruction_loss(in_t, recs[i]);
            }
            out.report.frame_reconst.push_back(reconstruction_loss(in_t, recs[i]));
        }
        for (int i = 0; i < k; ++i) {
            if (with_grad) {
                Tensor e1, e2;
                real v = exclusion_loss_grad(clean_imgs[i], y2, weights.excl_scales, e1, e2);
                out.report.excl += invk * v;
                axpy(weights.alpha * invk, e1, g1[i]);
                axpy(weights.alpha * invk, e2, g2);
            } else {
                out.report.excl += invk * exclusion_loss(clean_imgs[i], y2, weights.excl_scales);
            }
        }
        if (with_grad) {
            std::vector<std::function<void()>> jobs;
            for (int i = 0; i < k; ++i)
                jobs.push_back([&, i] { gens[i]->backward(g1[i]); });
            jobs.push_back([&] { gens[k]->backward(g2); });
            jobs.push_back([&] { gens[k + 1]->backward(gm); });
            run_jobs(jobs, parallel);
        }
        if (capture) {
            for (int i = 0; i < k; ++i) {
                LayerSet ls;
                ls.y1 = clean_imgs[i]; ls.y2 = y2; ls.mask = m; ls.reconstruction = recs[i];
                out.layers.push_back(std::move(ls));
            }
        }
        break;
    }

    case TaskType::kDehaze: {
        Image j, a_layer, traw;
        {
            std::vector<std::function<void()>> jobs;
            Tensor i0 = gen_input(0, 0, iter, ramp, aug, clean);
            Tensor i1 = gen_input(1, 0, iter, ramp, aug, clean);
            Tensor i2 = gen_input(2, 0, iter, ramp, aug, clean);
            jobs.push_back([&] { j = gens[0]->forward(i0); });
            jobs.push_back([&] { a_layer = gens[1]->forward(i1); });
            jobs.push_back([&] { traw = gens[2]->forward(i2); });
            run_jobs(jobs, parallel);
        }
        Image t(1, traw.height(), traw.width());
        for (long i = 0; i < t.size(); ++i) t[i] = t_min + (1.0 - t_min) * traw[i];
        Image rec = spatial_mix(t, j, a_layer);
        Tensor gj(j.channels(), j.height(), j.width());
        Tensor ga = gj, gt(1, t.height(), t.width());
        Tensor g_rec;
        out.report.reconst = with_grad ? reconstruction_loss_grad(input_t, rec, g_rec)
                                       : reconstruction_loss(input_t, rec);
        if (with_grad) mix_backward_spatial(g_rec, t, j, a_layer, gj, ga, gt);
        out.report.excl = add_exclusion(j, a_layer, &gj, &ga);
        const real air_rel = weights.airlight_rel();
        if (with_grad) {
            Tensor gs, gair;
            real sm = smoothness_reg_grad(t, gs);
            real ar = airlight_reg_grad(a_layer, *airlight_color, gair);
            out.report.reg = sm + air_rel * ar;
            axpy(weights.beta, gs, gt);
            axpy(weights.beta * air_rel, gair, ga);
            gt *= (1.0 - t_min); // chain through the scaled sigmoid
            std::vector<std::function<void()>> jobs;
            jobs.push_back([&] { gens[0]->backward(gj); });
            jobs.push_back([&] { gens[1]->backward(ga); });
            jobs.push_back([&] { gens[2]->backward(gt); });
            run_jobs(jobs, parallel);
        } else {
            out.report.reg = smoothness_reg(t) + air_rel * airlight_reg(a_layer, *airlight_color);
        }
        if (capture) {
            LayerSet ls;
            ls.y1 = j; ls.y2 = a_layer; ls.mask = t; ls.reconstruction = rec;
            ls.airlight_color = airlight_color;
            out.layers.push_back(std::move(ls));
        }
        break;
    }
    }

    out.report.total = out.report.reconst + weights.alpha * out.report.excl +
                       weights.beta * out.report.reg;
    return out;
}

// ---------------------------------------------------------------------------
// Builders

namespace {

struct BuilderCommon {
    std::unique_ptr<TaskGraph::Impl> impl = std::make_unique<TaskGraph::Impl>();

    GeneratorSpec layer_spec(const TaskConfig& cfg, int out_channels) {
        GeneratorSpec s = cfg.layer_spec;
        s.output_channels = out_channels;
        s.output_activation = GeneratorSpec::OutputActivation::kSigmoid;
        return s;
    }

    GeneratorSpec mask_spec(const TaskConfig& cfg) {
        GeneratorSpec s = cfg.mask_spec.value_or(cfg.layer_spec);
        s.output_channels = 1;
        s.output_activation = GeneratorSpec::OutputActivation::kSigmoid;
        return s;
    }

    void add_generator(const GeneratorSpec& spec, const TaskConfig& cfg, int h, int w,
                       int n_noises = 1) {
        const int gi = static_cast<int>(impl->gens.size());
        impl->gens.push_back(std::make_unique<Generator>(
            spec, derive_seed(cfg.seed, 0x100 + gi)));
        std::vector<NoiseField> zs;
        for (int f = 0; f < n_noises; ++f)
            zs.push_back(make_noise(spec.input_channels, h, w,
                                    derive_seed(cfg.seed, 0x10000 + gi * 1024 + f)));
        impl->noises.push_back(std::move(zs));
    }

    // Random-walk noises: z(i+1) = z(i) + dz with |dz| = ratio * |z(0)|.
    void add_video_generator(const GeneratorSpec& spec, const TaskConfig& cfg, int h, int w,
                             int frames) {
        const int gi = static_cast<int>(impl->gens.size());
        impl->gens.push_back(std::make_unique<Generator>(
            spec, derive_seed(cfg.seed, 0x100 + gi)));
        std::vector<NoiseField> zs;
        NoiseField base = make_noise(spec.input_channels, h, w,
                                     derive_seed(cfg.seed, 0x10000 + gi * 1024));
        real base_norm = 0.0;
        for (long i = 0; i < base.base.size(); ++i) base_norm += base.base[i] * base.base[i];
        base_norm = std::sqrt(base_norm);
        zs.push_back(base);
        for (int f = 1; f < frames; ++f) {
            Rng rng(derive_seed(cfg.seed, 0x20000 + gi * 1024 + f));
            Tensor delta(base.base.channels(), h, w);
            real dn = 0.0;
            for (long i = 0; i < delta.size(); ++i) {
                delta[i] = rng.uniform(-0.5, 0.5);
                dn += delta[i] * delta[i];
            }
            dn = std::sqrt(dn);
            const real scale = dn > 0.0 ? cfg.noise_delta_ratio * base_norm / dn : 0.0;
            NoiseField z = zs.back();
            for (long i = 0; i < delta.size(); ++i) z.base[i] += scale * delta[i];
            z.seed = derive_seed(cfg.seed, 0x30000 + gi * 1024 + f);
            zs.push_back(std::move(z));
        }
        impl->noises.push_back(std::move(zs));
    }

    void set_weights(const TaskConfig& cfg, real default_alpha, real default_beta) {
        impl->weights.alpha = cfg.alpha.value_or(default_alpha);
        impl->weights.beta = cfg.beta.value_or(default_beta);
        impl->weights.excl_scales = cfg.excl_scales;
        impl->weights.overrides = cfg.weight_overrides;
    }

    void set_hints(const TaskConfig& cfg, const Image& input) {
        if (!cfg.hints_enabled) return;
        impl->hint_schedule.saliency =
            cfg.saliency_override ? *cfg.saliency_override : compute_saliency(input);
        impl->hint_schedule.active_until_iteration = cfg.hint_until;
        impl->hint_schedule.fade = cfg.hint_fade;
    }

    TaskGraph finish() { return TaskGraph(std::move(impl)); }
};

void check_frames(const std::vector<Image>& frames, std::size_t min_count) {
    if (frames.size() < min_count)
        throw ConfigError("task needs at least " + std::to_string(min_count) + " inputs");
    for (const Image& f : frames)
        if (!f.same_shape(frames[0]))
            throw ShapeError("input frames have inconsistent sizes");
}

} // namespace

TaskGraph build_segmentation(const Image& input, const TaskConfig& cfg) {
    BuilderCommon b;
    b.impl->type = TaskType::kSegment;
    b.impl->inputs = {input};
    b.set_weights(cfg, 0.1, 0.5);
    b.impl->reg = RegKind::kBinaryMask;
    b.add_generator(b.layer_spec(cfg, input.channels()), cfg, input.height(), input.width());
    b.add_generator(b.layer_spec(cfg, input.channels()), cfg, input.height(), input.width());
    b.add_generator(b.mask_spec(cfg), cfg, input.height(), input.width());
    b.set_hints(cfg, input);
    return b.finish();
}

TaskGraph build_video_segmentation(const std::vector<Image>& frames, const TaskConfig& cfg) {
    check_frames(frames, 2);
    BuilderCommon b;
    b.impl->type = TaskType::kSegmentVideo;
    b.impl->inputs = frames;
    b.set_weights(cfg, 0.1, 0.5);
    b.impl->reg = RegKind::kBinaryMask;
    const int h = frames[0].height(), w = frames[0].width();
    const int n = static_cast<int>(frames.size());
    b.add_video_generator(b.layer_spec(cfg, frames[0].channels()), cfg, h, w, n);
    b.add_video_generator(b.layer_spec(cfg, frames[0].channels()), cfg, h, w, n);
    b.add_video_generator(b.mask_spec(cfg), cfg, h, w, n);
    return b.finish();
}

TaskGraph build_transparency(const Image& input, const TaskConfig& cfg) {
    BuilderCommon b;
    b.impl->type = TaskType::kTransparencyHint;
    b.impl->inputs = {input};
    b.set_weights(cfg, 0.1, 0.0);
    b.impl->alpha_model = cfg.alpha_model;
    b.add_generator(b.layer_spec(cfg, input.channels()), cfg, input.height(), input.width());
    b.add_generator(b.layer_spec(cfg, input.channels()), cfg, input.height(), input.width());
    if (cfg.alpha_model == TaskConfig::AlphaModel::kDip)
        b.add_generator(b.mask_spec(cfg), cfg, input.height(), input.width());
    else {
        b.impl->theta.assign(1, 0.0);
        b.impl->theta_grad.assign(1, 0.0);
    }
    b.set_hints(cfg, input);
    if (!b.impl->hint_schedule.has_saliency())
        std::fprintf(stderr, "warning: single-mixture transparency without hints; "
                             "the layer decomposition is ambiguous\n");
    return b.finish();
}

TaskGraph build_transparency_two(const Image& mix1, const Image& mix2, const TaskConfig& cfg) {
    check_frames({mix1, mix2}, 2);
    BuilderCommon b;
    b.impl->type = TaskType::kTransparencyTwoMixtures;
    b.impl->inputs = {mix1, mix2};
    b.set_weights(cfg, 0.1, 0.0);
    const int h = mix1.height(), w = mix1.width();
    b.add_generator(b.layer_spec(cfg, mix1.channels()), cfg, h, w);
    b.add_generator(b.layer_spec(cfg, mix1.channels()), cfg, h, w);
    b.add_generator(b.mask_spec(cfg), cfg, h, w, 2); // one DIP, two noises
    return b.finish();
}

TaskGraph build_transparency_video(const std::vector<Image>& frames, const TaskConfig& cfg) {
    check_frames(frames, 2);
    BuilderCommon b;
    b.impl->type = TaskType::kTransparencyVideo;
    b.impl->inputs = frames;
    b.set_weights(cfg, 0.1, 0.0);
    b.impl->alpha_model = cfg.alpha_model;
    b.impl->spatial_video_mask = cfg.video_spatial_mask;
    const int h = frames[0].height(), w = frames[0].width();
    const int n = static_cast<int>(frames.size());
    b.add_video_generator(b.layer_spec(cfg, frames[0].channels()), cfg, h, w, n);
    b.add_generator(b.layer_spec(cfg, frames[0].channels()), cfg, h, w); // static layer
    if (cfg.alpha_model == TaskConfig::AlphaModel::kDip || cfg.video_spatial_mask)
        b.add_video_generator(b.mask_spec(cfg), cfg, h, w, n);
    else {
        b.impl->theta.assign(n, 0.0);
        b.impl->theta_grad.assign(n, 0.0);
    }
    return b.finish();
}

TaskGraph build_watermark(const Image& input, const BBox& bbox, const TaskConfig& cfg) {
    bbox.validate_inside(input.height(), input.width());
    BuilderCommon b;
    b.impl->type = TaskType::kWatermarkBBox;
    b.impl->inputs = {input};
    b.set_weights(cfg, 0.1, 0.0);
    const int h = input.height(), w = input.width();
    b.add_generator(b.layer_spec(cfg, input.channels()), cfg, h, w);
    b.add_generator(b.layer_spec(cfg, input.channels()), cfg, h, w);
    b.add_generator(b.mask_spec(cfg), cfg, h, w);
    b.impl->bbox_indicator = Image(1, h, w);
    for (int y = bbox.y; y < bbox.y + bbox.h; ++y)
        for (int x = bbox.x; x < bbox.x + bbox.w; ++x)
            b.impl->bbox_indicator.at(0, y, x) = 1.0;
    return b.finish();
}

TaskGraph build_watermark_multi(const std::vector<Image>& images, const TaskConfig& cfg) {
    check_frames(images, 2);
    BuilderCommon b;
    b.impl->type = TaskType::kWatermarkMulti;
    b.impl->inputs = images;
    b.set_weights(cfg, 0.1, 0.0);
    const int h = images[0].height(), w = images[0].width();
    for (std::size_t i = 0; i < images.size(); ++i)
        b.add_generator(b.layer_spec(cfg, images[0].channels()), cfg, h, w);
    b.add_generator(b.layer_spec(cfg, images[0].channels()), cfg, h, w); // shared watermark
    b.add_generator(b.mask_spec(cfg), cfg, h, w);                        // shared opacity mask
    return b.finish();
}

TaskGraph build_dehaze(const Image& input, const TaskConfig& cfg) {
    if (input.channels() != 3)
        throw ConfigError("dehazing expects a 3-channel image");
    BuilderCommon b;
    b.impl->type = TaskType::kDehaze;
    b.impl->inputs = {input};
    b.set_weights(cfg, 0.1, 0.05);
    b.impl->reg = RegKind::kDehaze;
    b.impl->t_min = cfg.t_min;
    b.impl->airlight_color = cfg.airlight ? *cfg.airlight : estimate_airlight(input);
    const int h = input.height(), w = input.width();
    b.add_generator(b.layer_spec(cfg, 3), cfg, h, w);
    b.add_generator(b.layer_spec(cfg, 3), cfg, h, w);
    b.add_generator(b.mask_spec(cfg), cfg, h, w);
    return b.finish();
}

TaskGraph build_single_fit(const Image& input, const TaskConfig& cfg) {
    BuilderCommon b;
    b.impl->type = TaskType::kSingleFit;
    b.impl->inputs = {input};
    b.set_weights(cfg, 0.0, 0.0);
    b.add_generator(b.layer_spec(cfg, input.channels()), cfg, input.height(), input.width());
    return b.finish();
}

// ---------------------------------------------------------------------------

Rgb estimate_airlight(const Image& input) {
    if (input.channels() != 3)
        throw ConfigError("estimate_airlight expects a 3-channel image");
    const int h = input.height(), w = input.width();
    const int radius = 7; // 15x15 window

    // Dark channel: min over channels, then min filter (separable).
    Image dark(1, h, w);
    for (long i = 0; i < dark.plane(); ++i)
        dark[i] = std::min({input.channel(0)[i], input.channel(1)[i], input.channel(2)[i]});
    Image tmp(1, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            real m = 1.0;
            for (int k = std::max(0, x - radius); k <= std::min(w - 1, x + radius); ++k)
                m = std::min(m, dark.at(0, y, k));
            tmp.at(0, y, x) = m;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            real m = 1.0;
            for (int k = std::max(0, y - radius); k <= std::min(h - 1, y + radius); ++k)
                m = std::min(m, tmp.at(0, k, x));
            dark.at(0, y, x) = m;
        }

    // Brightest 0.1% of dark-channel pixels (ties broken by index).
    const long n = dark.plane();
    std::vector<long> idx(n);
    std::iota(idx.begin(), idx.end(), 0L);
    const long top = std::max<long>(1, static_cast<long>(std::llround(0.001 * n)));
    std::partial_sort(idx.begin(), idx.begin() + top, idx.end(), [&](long a, long b) {
        if (dark[a] != dark[b]) return dark[a] > dark[b];
        return a < b;
    });

    Rgb a{0.0, 0.0, 0.0};
    for (long i = 0; i < top; ++i)
        for (int c = 0; c < 3; ++c) a[c] += input.channel(c)[idx[i]];
    for (int c = 0; c < 3; ++c)
        a[c] = std::clamp(a[c] / static_cast<real>(top), 0.0, 1.0);
    return a;
}

} // namespace dip
