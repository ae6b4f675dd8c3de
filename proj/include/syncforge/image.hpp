#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace syncforge {

/// Planar floating-point image. Samples are stored channel-major, then
/// row-major, nominally in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int channels, int height, int width, double fill = 0.0);

  int channels() const noexcept { return channels_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(height_) * width_;
  }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }
  double at(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }

  std::span<double> plane(int c) {
    return {data_.data() + c * plane_size(), plane_size()};
  }
  std::span<const double> plane(int c) const {
    return {data_.data() + c * plane_size(), plane_size()};
  }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool same_shape(const Image& o) const noexcept {
    return channels_ == o.channels_ && height_ == o.height_ &&
           width_ == o.width_;
  }

  /// Clamp every sample to [0, 1] in place.
  Image& clamp01();

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

/// BT.601 full-range luma weights.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

/// Luma of one RGB sample. Written relative to green so achromatic input
/// returns its value exactly.
inline double luma(double r, double g, double b) noexcept {
  return g + kLumaR * (r - g) + kLumaB * (b - g);
}

/// Split an RGB image into BT.601 luma and centered (Cb, Cr) chroma.
std::pair<Image, Image> rgb_to_luma_chroma(const Image& rgb);

/// Exact inverse of rgb_to_luma_chroma. No clamping unless requested.
Image luma_chroma_to_rgb(const Image& luma, const Image& chroma,
                         bool clamp = false);

/// Luma plane of an RGB image (a 1-channel image is returned as is).
Image to_luma(const Image& img);

/// Separable bilinear resize, half-pixel centers (align_corners = false).
Image resize_bilinear(const Image& img, int out_h, int out_w);

/// Peak signal-to-noise ratio for peak 1.0, capped at `cap` dB.
double psnr(const Image& a, const Image& b, double cap = 99.0);

/// Mean SSIM on the luma channel: 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, averaged over valid window positions. Images smaller
/// than the window use the largest odd window that fits.
double ssim(const Image& a, const Image& b);

struct QualityReport {
  double psnr = 0.0;
  double ssim = 0.0;
};

QualityReport quality(const Image& reference, const Image& test,
                      double psnr_cap = 99.0);

}  // namespace syncforge
