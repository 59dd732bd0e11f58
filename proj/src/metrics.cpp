#include "dip/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>

#include "dip/optimizer.hpp"

namespace dip {

real psnr(const Image& x, const Image& ref) {
    real mse = reconstruction_loss(ref, x);
    if (mse <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

real layer_correlation(const Image& y, const Image& gt) {
    require_same_shape(y, gt, "layer_correlation");
    const long n = y.size();
    real my = y.mean(), mg = gt.mean();
    real syy = 0.0, sgg = 0.0, syg = 0.0;
    for (long i = 0; i < n; ++i) {
        real a = y[i] - my, b = gt[i] - mg;
        syy += a * a;
        sgg += b * b;
        syg += a * b;
    }
    if (syy <= 0.0 || sgg <= 0.0) {
        std::fprintf(stderr, "warning: layer_correlation of zero-variance input\n");
        return 0.0;
    }
    return syg / std::sqrt(syy * sgg);
}

real iou(const Image& mask, const Image& gt) {
    require_same_shape(mask, gt, "iou");
    long inter = 0, uni = 0;
    for (long i = 0; i < mask.size(); ++i) {
        real a = mask[i], b = gt[i];
        if ((a != 0.0 && a != 1.0) || (b != 0.0 && b != 1.0))
            throw DomainError("iou expects binary masks");
        inter += (a == 1.0 && b == 1.0);
        uni += (a == 1.0 || b == 1.0);
    }
    return uni == 0 ? 1.0 : static_cast<real>(inter) / static_cast<real>(uni);
}

real patch_diversity(const Image& input, int patch) {
    if (patch < 1 || patch > std::min(input.height(), input.width()))
        throw ShapeError("patch_diversity: patch exceeds image size");
    const int ph = input.height() - patch + 1;
    const int pw = input.width() - patch + 1;
    const long np = static_cast<long>(ph) * pw;
    const int dims = input.channels() * patch * patch;

    // Flatten all patches once; brute-force nearest neighbor with early abandon.
    std::vector<real> feats(static_cast<std::size_t>(np) * dims);
    long idx = 0;
    for (int y = 0; y < ph; ++y)
        for (int x = 0; x < pw; ++x, ++idx) {
            real* f = feats.data() + static_cast<std::size_t>(idx) * dims;
            int k = 0;
            for (int c = 0; c < input.channels(); ++c)
                for (int dy = 0; dy < patch; ++dy)
                    for (int dx = 0; dx < patch; ++dx)
                        f[k++] = input.at(c, y + dy, x + dx);
        }

    real acc = 0.0;
    for (long i = 0; i < np; ++i) {
        const real* fi = feats.data() + static_cast<std::size_t>(i) * dims;
        real best = std::numeric_limits<real>::infinity();
        for (long j = 0; j < np; ++j) {
            if (j == i) continue;
            const real* fj = feats.data() + static_cast<std::size_t>(j) * dims;
            real d = 0.0;
            for (int k = 0; k < dims && d < best; ++k) {
                real v = fi[k] - fj[k];
                d += v * v;
            }
            best = std::min(best, d);
            if (best == 0.0) break;
        }
        acc += std::sqrt(best / dims);
    }
    return acc / static_cast<real>(np);
}

namespace {

real arm_final_loss(const std::vector<LossRow>& history) {
    if (history.empty()) return 0.0;
    const std::size_t tail = std::min<std::size_t>(10, history.size());
    real acc = 0.0;
    for (std::size_t i = history.size() - tail; i < history.size(); ++i)
        acc += history[i].total;
    return acc / static_cast<real>(tail);
}

Image make_mixture(const Image& a, const Image& b, MixMode mode) {
    require_same_shape(a, b, "mixture_complexity_experiment");
    Image out(a.channels(), a.height(), a.width());
    if (mode == MixMode::kSuperimpose) {
        for (long i = 0; i < a.size(); ++i) out[i] = 0.5 * (a[i] + b[i]);
        return out;
    }
    const int split = a.width() / 2;
    for (int c = 0; c < a.channels(); ++c)
        for (int y = 0; y < a.height(); ++y)
            for (int x = 0; x < a.width(); ++x)
                out.at(c, y, x) = x < split ? a.at(c, y, x) : b.at(c, y, x);
    return out;
}

} // namespace

DiagnosticReport mixture_complexity_experiment(
    const std::vector<std::pair<Image, Image>>& pairs, MixMode mode,
    const OptimConfig& config) {
    if (pairs.size() < 2)
        throw ConfigError("mixture_complexity_experiment needs at least 2 pairs");

    DiagnosticReport report;
    report.mode = mode == MixMode::kSuperimpose ? "superimpose" : "split_lr";
    report.sample_count = static_cast<int>(pairs.size());

    struct Job {
        Image image;
        std::string name;
        std::uint64_t seed;
        ComplexityArm* arm;
    };
    report.cases.resize(pairs.size());
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        ComplexityCase& c = report.cases[i];
        c.component_a.name = "pair" + std::to_string(i) + "_a";
        c.component_b.name = "pair" + std::to_string(i) + "_b";
        c.mixture.name = "pair" + std::to_string(i) + "_mix";
        jobs.push_back({pairs[i].first, c.component_a.name,
                        derive_seed(config.seed, i * 16 + 0), &c.component_a});
        jobs.push_back({pairs[i].second, c.component_b.name,
                        derive_seed(config.seed, i * 16 + 1), &c.component_b});
        jobs.push_back({make_mixture(pairs[i].first, pairs[i].second, mode), c.mixture.name,
                        derive_seed(config.seed, i * 16 + 2), &c.mixture});
    }

    // Arms are independent fits; run two at a time.
    auto run_job = [&](const Job& j) {
        OptimConfig cfg = config;
        cfg.seed = j.seed;
        cfg.parallel = false; // one core per arm
        RunState state = single_dip_fit(j.image, cfg);
        j.arm->loss_curve.reserve(state.history.size());
        for (const LossRow& row : state.history) j.arm->loss_curve.push_back(row.total);
        j.arm->final_loss = arm_final_loss(state.history);
    };
    std::size_t next = 0;
    while (next < jobs.size()) {
        if (next + 1 < jobs.size()) {
            auto fut = std::async(std::launch::async, run_job, std::cref(jobs[next + 1]));
            run_job(jobs[next]);
            fut.get();
            next += 2;
        } else {
            run_job(jobs[next]);
            next += 1;
        }
    }

    int harder = 0;
    for (ComplexityCase& c : report.cases) {
        c.mixture_harder = c.mixture.final_loss >
                           std::max(c.component_a.final_loss, c.component_b.final_loss);
        harder += c.mixture_harder;
    }
    report.harder_fraction = static_cast<real>(harder) / static_cast<real>(report.cases.size());
    return report;
}

} // namespace dip
