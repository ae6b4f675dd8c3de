#pragma once

#include <array>

#include "syncforge/image.hpp"

namespace syncforge {

/// Annex-K quantization table scaled with the IJG quality formula, entries
/// clamped to [1, 255]. Natural (row-major) order.
std::array<int, 64> jpeg_quant_table(int quality, bool chroma);

/// Lossy part of baseline JPEG: RGB -> YCbCr (4:4:4), 8x8 DCT per block,
/// quantize/dequantize, inverse DCT, back to RGB, clamp. Edges are padded by
/// replication up to a multiple of 8. Entropy coding is lossless and is not
/// modeled. Accepts 1- or 3-channel images.
Image jpeg_roundtrip(const Image& img, int quality);

}  // namespace syncforge
