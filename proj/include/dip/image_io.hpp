#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dip/tensor.hpp"

namespace dip {

// Decodes PNG (8/16-bit), JPEG or PPM/PGM into [0,1] reals; 8-bit value v
// maps to v/255 exactly. Grayscale stays single-channel; alpha is dropped.
Image load_image(const std::string& path);

// Loads a directory of frames in lexicographic name order (or a single image
// file as a one-frame list). stride picks every stride-th frame, max_frames
// caps the count (0 = no cap). When resize_long_side > 0 every frame is
// downscaled so its longest side fits; otherwise mixed sizes are an error.
std::vector<Image> load_frames(const std::string& path, int max_frames = 0, int stride = 1,
                               int resize_long_side = 0);

void save_png(const std::string& path, const Image& img);   // 8-bit
void save_png16(const std::string& path, const Image& img); // 16-bit, for masks/t-maps

// Area-averaging downscale so the longest side is at most long_side.
Image downscale_to_long_side(const Image& img, int long_side);

std::uint64_t fnv1a_file(const std::string& path);
std::string fnv1a_file_hex(const std::string& path);

} // namespace dip
