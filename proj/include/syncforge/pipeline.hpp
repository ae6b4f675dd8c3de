#pragma once

#include "syncforge/geometry.hpp"
#include "syncforge/image.hpp"
#include "syncforge/nn/models.hpp"

// Inference entry points. Networks run at the bundle's processing
// resolution; images of any size are resized in and out.
namespace syncforge {

/// Pre-tanh embedder residual at processing resolution, 1 channel.
Image embedder_residual(nn::ModelBundle& model, const Image& img);

/// Embed the synchronization watermark into an RGB image of any size.
Image watermark(nn::ModelBundle& model, const Image& img);

/// Predicted corner quad of an RGB image of any size.
CornerQuad extract_quad(nn::ModelBundle& model, const Image& img);

/// Batched variant over images already at processing resolution (RGB).
std::vector<CornerQuad> extract_quads(nn::ModelBundle& model, const std::vector<Image>& imgs);

struct SyncResult {
  CornerQuad quad;
  Image restored;
  bool ok = false;       ///< false when the predicted quad is degenerate
  std::string message;  ///< reason when !ok
};

/// Extract the quad and warp the image back into the original frame.
SyncResult synchronize(nn::ModelBundle& model, const Image& img);

}  // namespace syncforge
