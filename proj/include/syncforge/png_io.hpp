#pragma once

#include <filesystem>
#include <vector>

#include "syncforge/image.hpp"

namespace syncforge {

/// Load an 8-bit PNG as a 3-channel image in [0, 1]. Grayscale inputs are
/// expanded to RGB, alpha is dropped, 16-bit samples are reduced to 8 bits.
Image read_png(const std::filesystem::path& path);

/// Write an image as 8-bit RGB, round(v * 255) after clamping to [0, 1].
/// A 1-channel image is replicated into all three channels.
void write_png(const std::filesystem::path& path, const Image& img);

/// Round-trip an image through 8-bit quantization without touching disk.
Image quantize8(const Image& img);

/// Sorted list of *.png files directly inside `dir`.
std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir);

}  // namespace syncforge
