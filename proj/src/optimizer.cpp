#include "dip/optimizer.hpp"

#include <cmath>
#include <cstdio>

namespace dip {

namespace {

Image rot90ccw(const Image& in) {
    Image out(in.channels(), in.width(), in.height());
    for (int c = 0; c < in.channels(); ++c) {
        const real* s = in.channel(c);
        real* d = out.channel(c);
        const int oh = out.height(), ow = out.width();
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x)
                d[static_cast<std::size_t>(y) * ow + x] =
                    s[static_cast<std::size_t>(x) * in.width() + (in.width() - 1 - y)];
    }
    return out;
}

Image flip_h(const Image& in) {
    Image out(in.channels(), in.height(), in.width());
    for (int c = 0; c < in.channels(); ++c) {
        const real* s = in.channel(c);
        real* d = out.channel(c);
        const int w = in.width();
        for (int y = 0; y < in.height(); ++y)
            for (int x = 0; x < w; ++x)
                d[static_cast<std::size_t>(y) * w + x] = s[static_cast<std::size_t>(y) * w + (w - 1 - x)];
    }
    return out;
}

} // namespace

Image dihedral_transform(const Image& input, int index) {
    if (index < 0 || index > 7)
        throw DomainError("dihedral index must be in 0..7");
    Image out = index >= 4 ? flip_h(input) : input;
    for (int r = 0; r < (index & 3); ++r) out = rot90ccw(out);
    return out;
}

int dihedral_inverse(int index) {
    if (index < 0 || index > 7)
        throw DomainError("dihedral index must be in 0..7");
    return index < 4 ? (4 - index) & 3 : index;
}

// ---------------------------------------------------------------------------

Adam::Adam(std::vector<ParamRef> params, real lr, real beta1, real beta2, real eps)
    : params_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
    long total = 0;
    for (const ParamRef& p : params_) total += p.n;
    m_.assign(total, 0.0);
    v_.assign(total, 0.0);
}

void Adam::step() {
    ++t_;
    const real c1 = 1.0 - std::pow(b1_, static_cast<real>(t_));
    const real c2 = 1.0 - std::pow(b2_, static_cast<real>(t_));
    long off = 0;
    for (const ParamRef& p : params_) {
        for (long i = 0; i < p.n; ++i) {
            const real g = p.grad[i];
            real& m = m_[off + i];
            real& v = v_[off + i];
            m = b1_ * m + (1.0 - b1_) * g;
            v = b2_ * v + (1.0 - b2_) * g * g;
            p.value[i] -= lr_ * (m / c1) / (std::sqrt(v / c2) + eps_);
        }
        off += p.n;
    }
}

// ---------------------------------------------------------------------------

OptimizeResult optimize(TaskGraph& graph, const OptimConfig& config) {
    config.validate();
    OptimizeResult result;
    RunState& state = result.state;
    state.seed = config.seed;

    Rng aug_rng(derive_seed(config.seed, 0xa06));
    Rng frame_rng(derive_seed(config.seed, 0xf8a));
    Adam adam(graph.params(), config.learning_rate,
              config.adam_betas.first, config.adam_betas.second);

    auto take_snapshot = [&](int iteration) {
        auto [layers, report] = graph.snapshot();
        if (report.total < state.best_total) {
            state.best_total = report.total;
            state.best_iteration = iteration;
            state.best_layers = std::move(layers);
            state.best_report = std::move(report);
        }
    };

    take_snapshot(0);

    const int frames = graph.frame_count();
    for (int k = 0; k < config.iterations; ++k) {
        const int frame = frames > 1 ? frame_rng.uniform_int(frames) : 0;
        const int aug = config.augment ? aug_rng.uniform_int(8) : 0;
        graph.zero_grads();
        LossReport r = graph.train_step(k, config.iterations, frame, aug);
        if (!std::isfinite(r.total))
            throw NumericalError("non-finite loss (total=" + std::to_string(r.total) +
                                 ", reconst=" + std::to_string(r.reconst) +
                                 ", excl=" + std::to_string(r.excl) +
                                 ", reg=" + std::to_string(r.reg) + ") at iteration " +
                                 std::to_string(k), k);
        adam.step();
        state.history.push_back({k, r.total, r.reconst, r.excl, r.reg});
        state.iterations_completed = k + 1;
        if (config.log_every > 0 && ((k + 1) % config.log_every == 0 || k == 0))
            std::fprintf(stderr, "iter %6d  total %.6g  reconst %.6g  excl %.6g  reg %.6g\n",
                         k, r.total, r.reconst, r.excl, r.reg);
        if (config.snapshot_every > 0 &&
            ((k + 1) % config.snapshot_every == 0 || k + 1 == config.iterations))
            take_snapshot(k + 1);
    }

    result.layers = state.best_layers;
    return result;
}

GeneratorSpec diagnostic_generator_spec(int image_channels) {
    GeneratorSpec s = GeneratorSpec::make(3, 16, 4, image_channels, 8);
    return s;
}

RunState single_dip_fit(const Image& input, const OptimConfig& config,
                        const GeneratorSpec* spec) {
    TaskConfig tc;
    tc.seed = config.seed;
    tc.hints_enabled = false;
    tc.layer_spec = spec ? *spec : diagnostic_generator_spec(input.channels());
    TaskGraph graph = build_single_fit(input, tc);
    graph.set_parallel(config.parallel);
    return optimize(graph, config).state;
}

} // namespace dip
