#pragma once

#include <cstdint>

#include "dip/tensor.hpp"

namespace dip {

// Procedural test imagery: textures with strong internal self-similarity,
// smooth fields and a synthetic logo. Used by the diagnostics CLI and by the
// test fixtures; everything is deterministic in its arguments.

Image synth_stripes(int h, int w, real freq, real angle, const Rgb& lo, const Rgb& hi,
                    real phase = 0.0);
Image synth_checker(int h, int w, int cell, const Rgb& a, const Rgb& b);
Image synth_dots(int h, int w, int cell, real radius_frac, const Rgb& bg, const Rgb& fg);

// Sum of random low-frequency sinusoids, mapped to [0,1]; pseudo-natural.
Image synth_plasma(int h, int w, std::uint64_t seed, int waves = 6, int channels = 3);

// Single-channel smooth field in [lo, hi].
Image synth_smooth_field(int h, int w, std::uint64_t seed, real lo, real hi);

// Picks a texture family and parameters from the seed.
Image synth_texture(int h, int w, std::uint64_t seed);

// Block-letter logo indicator in [0,1], centered.
Image synth_logo_mask(int h, int w);

} // namespace dip
