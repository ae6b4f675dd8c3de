#include "syncforge/perceptual.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "syncforge/errors.hpp"

namespace syncforge {

void EmbedConfig::validate() const {
  if (!(alpha_w > 0.0)) throw InvalidInput("alpha_w must be positive");
  if (proc_h < 8 || proc_w < 8 || proc_h % 8 != 0 || proc_w % 8 != 0) {
    throw InvalidInput("processing size must be a positive multiple of 8, got " +
                       std::to_string(proc_h) + "x" + std::to_string(proc_w));
  }
}

double luminance_threshold(double b) {
  if (b <= 127.0) return 17.0 * (1.0 - std::sqrt(b / 127.0)) + 3.0;
  return 3.0 / 128.0 * (b - 127.0) + 3.0;
}

namespace {

// Background luminance weights (sum 32).
constexpr int kBackground[5][5] = {{1, 1, 1, 1, 1},
                                   {1, 2, 2, 2, 1},
                                   {1, 2, 0, 2, 1},
                                   {1, 2, 2, 2, 1},
                                   {1, 1, 1, 1, 1}};

// Directional gradient operators (each normalized by 16).
constexpr int kGradients[4][5][5] = {
    {{0, 0, 0, 0, 0}, {1, 3, 8, 3, 1}, {0, 0, 0, 0, 0}, {-1, -3, -8, -3, -1}, {0, 0, 0, 0, 0}},
    {{0, 0, 1, 0, 0}, {0, 8, 3, 0, 0}, {1, 3, 0, -3, -1}, {0, 0, -3, -8, 0}, {0, 0, -1, 0, 0}},
    {{0, 0, 1, 0, 0}, {0, 0, 3, 8, 0}, {-1, -3, 0, 3, 1}, {0, -8, -3, 0, 0}, {0, 0, -1, 0, 0}},
    {{0, 1, 0, -1, 0}, {0, 3, 0, -3, 0}, {0, 8, 0, -8, 0}, {0, 3, 0, -3, 0}, {0, 1, 0, -1, 0}}};

constexpr double kTextureSlope = 0.117;

}  // namespace

Image jnd(const Image& img) {
  const Image y = to_luma(img);
  const int h = y.height(), w = y.width();
  auto p = y.plane(0);
  auto px = [&](int yy, int xx) {
    yy = std::clamp(yy, 0, h - 1);
    xx = std::clamp(xx, 0, w - 1);
    return p[yy * w + xx] * 255.0;
  };
  Image out(1, h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double bg = 0.0;
      double grad[4] = {0, 0, 0, 0};
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
          const double v = px(r + i - 2, c + j - 2);
          bg += kBackground[i][j] * v;
          for (int k = 0; k < 4; ++k) grad[k] += kGradients[k][i][j] * v;
        }
      bg /= 32.0;
      double g = 0.0;
      for (double v : grad) g = std::max(g, std::abs(v) / 16.0);
      const double t = std::max(luminance_threshold(bg), kTextureSlope * g);
      out.at(0, r, c) = std::clamp(t / 255.0, 0.0, kJndMax);
    }
  return out;
}

Image modulated_watermark(const Image& img, const Image& residual) {
  if (residual.channels() != 1) throw InvalidInput("embedder residual must have 1 channel");
  Image t = residual;
  for (double& v : t.data()) v = std::tanh(v);
  t = resize_bilinear(t, img.height(), img.width());
  const Image mask = jnd(img);
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] *= mask.data()[i];
  return t;
}

Image embed_unclamped(const Image& img, const Image& residual, const EmbedConfig& cfg) {
  cfg.validate();
  if (img.channels() != 3) throw InvalidInput("embed: expected an RGB image");
  const Image w = modulated_watermark(img, residual);
  // With chroma held fixed, a luma change of d is the same change d on each
  // of R, G and B (the inverse color matrix has a unit luma column).
  Image out = img;
  auto wp = w.plane(0);
  for (int c = 0; c < 3; ++c) {
    auto p = out.plane(c);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += cfg.alpha_w * wp[i];
  }
  return out;
}

Image embed(const Image& img, const Image& residual, const EmbedConfig& cfg) {
  return embed_unclamped(img, residual, cfg).clamp01();
}

Image prepare_for_extraction(const Image& img, const EmbedConfig& cfg) {
  return to_luma(resize_bilinear(img, cfg.proc_h, cfg.proc_w));
}

}  // namespace syncforge
