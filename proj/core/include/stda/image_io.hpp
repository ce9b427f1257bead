#pragma once

#include <filesystem>
#include <vector>

#include "stda/tensor.hpp"

namespace stda {

/// Reads an 8-bit PNG as an RGB [3,H,W] image in [0,1]. Grey and alpha
/// inputs are converted to RGB.
Tensor<float> load_image(const std::filesystem::path& path);

/// Writes [3,H,W] as RGB or [1,H,W] / [H,W] as greyscale, 8 bits per channel.
/// Values are clamped to [0,1] and rounded to the nearest level.
void save_image(const std::filesystem::path& path, const Tensor<float>& image);

/// The value an image element takes after an 8-bit save/load round trip.
float quantize8(float v);

/// PNG files of a directory in lexicographic order.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir);

}  // namespace stda
