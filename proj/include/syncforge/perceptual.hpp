#pragma once

#include "syncforge/image.hpp"

namespace syncforge {

/// Upper bound of the JND map (fraction of full scale).
inline constexpr double kJndMax = 0.25;

struct EmbedConfig {
  double alpha_w = 0.2;  ///< watermark strength
  int proc_h = 256;      ///< processing resolution of the networks
  int proc_w = 256;

  /// Throws InvalidInput unless alpha_w > 0 and the sizes are multiples of 8.
  void validate() const;
};

/// Luminance adaptation threshold on the 0..255 scale for background
/// luminance `b`.
double luminance_threshold(double b);

/// Spatial just-noticeable-difference map on the luma channel, in [0, 0.25].
/// Background luminance is a 5x5 weighted local mean; texture masking uses
/// the strongest of four 5x5 directional gradient operators. Borders are
/// handled by edge replication.
Image jnd(const Image& img);

/// Watermark modulation JND(I) * tanh(residual) with the residual bilinearly
/// resized to the image size first. Returned as a 1-channel image in
/// [-c_max, c_max].
Image modulated_watermark(const Image& img, const Image& residual);

/// Y_w = Y + alpha_w * JND(I) * tanh(residual) on luma, chroma untouched,
/// converted back to RGB without clamping.
Image embed_unclamped(const Image& img, const Image& residual, const EmbedConfig& cfg);

/// embed_unclamped followed by a clamp to [0, 1].
Image embed(const Image& img, const Image& residual, const EmbedConfig& cfg);

/// Resize to the processing resolution and take the luma channel.
Image prepare_for_extraction(const Image& img, const EmbedConfig& cfg);

}  // namespace syncforge
