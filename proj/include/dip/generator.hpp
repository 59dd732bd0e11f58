#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dip/rng.hpp"
#include "dip/tensor.hpp"

namespace dip {

// Amplitude of the uniform noise inputs; perturbations default to 1/30 of it.
inline constexpr real kNoiseAmplitude = 0.1;
inline constexpr int kDefaultRampIters = 2000;

struct GeneratorSpec {
    int depth = 5;
    std::vector<int> down_channels{128, 128, 128, 128, 128};
    std::vector<int> up_channels{128, 128, 128, 128, 128};
    std::vector<int> skip_channels{4, 4, 4, 4, 4};
    int kernel_size = 3;
    enum class Upsample { kNearest, kBilinear } upsample_mode = Upsample::kBilinear;
    int output_channels = 3;
    enum class OutputActivation { kSigmoid, kNone } output_activation = OutputActivation::kSigmoid;
    int input_channels = 32;

    void validate() const;

    // Uniform-width spec, the common case in fixtures and CLI overrides.
    static GeneratorSpec make(int depth, int width, int skip, int out_channels,
                              int in_channels = 32);
};

// Fixed random input of one generator plus its perturbation scale. The base
// is a pure function of (shape, seed); per-iteration perturbations are a pure
// function of (seed, iteration).
struct NoiseField {
    Tensor base;
    real perturb_sigma = kNoiseAmplitude / 30.0;
    std::uint64_t seed = 0;
};

NoiseField make_noise(int channels, int h, int w, std::uint64_t seed,
                      real amplitude = kNoiseAmplitude);

// Linear perturbation ramp: 0 -> 1 over ramp_iters, then flat.
real noise_ramp(int iteration, int ramp_iters);

// base + N(0, perturb_sigma * noise_ramp(iteration)) with the perturbation
// stream derived from (seed, iteration); deterministic and replayable.
Tensor perturbed_input(const NoiseField& z, int iteration, int ramp_iters);

struct ParamRef {
    real* value;
    real* grad;
    long n;
};

// One DIP: an encoder/decoder with per-scale skip connections, LeakyReLU
// activations, per-channel normalization and reflection padding. forward()
// caches activations; backward() accumulates parameter gradients.
class Generator {
public:
    Generator(const GeneratorSpec& spec, std::uint64_t seed);
    ~Generator();
    Generator(Generator&&) noexcept;
    Generator& operator=(Generator&&) noexcept;

    const GeneratorSpec& spec() const;

    const Image& forward(const Tensor& input);
    const Image& forward(const NoiseField& z, int iteration, int ramp_iters = kDefaultRampIters);
    const Image& output() const;

    void backward(const Tensor& grad_output);
    void zero_grad();

    std::vector<ParamRef> params();
    long param_count();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

Generator build_generator(const GeneratorSpec& spec, std::uint64_t seed);

} // namespace dip
