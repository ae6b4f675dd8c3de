#include "syncforge/jpeg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "syncforge/errors.hpp"

namespace syncforge {

namespace {

constexpr std::array<int, 64> kLumaTable = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

constexpr std::array<int, 64> kChromaTable = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

// Orthonormal 8-point DCT-II basis: basis[u][x].
struct DctBasis {
  double m[8][8];
  DctBasis() {
    for (int u = 0; u < 8; ++u) {
      const double cu = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x)
        m[u][x] = cu * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
    }
  }
};

const DctBasis& basis() {
  static const DctBasis b;
  return b;
}

void fdct8x8(const double in[64], double out[64]) {
  const auto& b = basis().m;
  double tmp[64];
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int x = 0; x < 8; ++x) s += b[u][x] * in[y * 8 + x];
      tmp[y * 8 + u] = s;
    }
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int y = 0; y < 8; ++y) s += b[v][y] * tmp[y * 8 + u];
      out[v * 8 + u] = s;
    }
}

void idct8x8(const double in[64], double out[64]) {
  const auto& b = basis().m;
  double tmp[64];
  for (int v = 0; v < 8; ++v)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int u = 0; u < 8; ++u) s += b[u][x] * in[v * 8 + u];
      tmp[v * 8 + x] = s;
    }
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int v = 0; v < 8; ++v) s += b[v][y] * tmp[v * 8 + x];
      out[y * 8 + x] = s;
    }
}

// Quantize one plane given in the 0..255 range, in place.
void quantize_plane(std::vector<double>& p, int h, int w,
                    const std::array<int, 64>& table, double level_shift) {
  const int ph = (h + 7) / 8 * 8, pw = (w + 7) / 8 * 8;
  double block[64], coef[64];
  for (int by = 0; by < ph; by += 8)
    for (int bx = 0; bx < pw; bx += 8) {
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
          const int sy = std::min(by + y, h - 1), sx = std::min(bx + x, w - 1);
          block[y * 8 + x] = p[sy * w + sx] - level_shift;
        }
      fdct8x8(block, coef);
      for (int k = 0; k < 64; ++k) coef[k] = std::round(coef[k] / table[k]) * table[k];
      idct8x8(coef, block);
      for (int y = 0; y < 8 && by + y < h; ++y)
        for (int x = 0; x < 8 && bx + x < w; ++x)
          p[(by + y) * w + bx + x] = block[y * 8 + x] + level_shift;
    }
}

}  // namespace

std::array<int, 64> jpeg_quant_table(int quality, bool chroma) {
  if (quality < 1 || quality > 100) {
    throw InvalidInput("jpeg quality must be in 1..100, got " + std::to_string(quality));
  }
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  const auto& base = chroma ? kChromaTable : kLumaTable;
  std::array<int, 64> t{};
  for (int i = 0; i < 64; ++i) t[i] = std::clamp((base[i] * scale + 50) / 100, 1, 255);
  return t;
}

Image jpeg_roundtrip(const Image& img, int quality) {
  const auto qy = jpeg_quant_table(quality, false);
  const auto qc = jpeg_quant_table(quality, true);
  const int h = img.height(), w = img.width();
  const std::size_t n = img.plane_size();

  if (img.channels() == 1) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = img.plane(0)[i] * 255.0;
    quantize_plane(y, h, w, qy, 128.0);
    Image out(1, h, w);
    for (std::size_t i = 0; i < n; ++i) out.plane(0)[i] = std::clamp(y[i] / 255.0, 0.0, 1.0);
    return out;
  }
  if (img.channels() != 3) throw InvalidInput("jpeg_roundtrip: expected 1 or 3 channels");

  // JFIF color transform on the 0..255 scale.
  std::vector<double> y(n), cb(n), cr(n);
  auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
  for (std::size_t i = 0; i < n; ++i) {
    const double R = r[i] * 255.0, G = g[i] * 255.0, B = b[i] * 255.0;
    y[i] = 0.299 * R + 0.587 * G + 0.114 * B;
    cb[i] = -0.168735892 * R - 0.331264108 * G + 0.5 * B + 128.0;
    cr[i] = 0.5 * R - 0.418687589 * G - 0.081312411 * B + 128.0;
  }
  quantize_plane(y, h, w, qy, 128.0);
  quantize_plane(cb, h, w, qc, 128.0);
  quantize_plane(cr, h, w, qc, 128.0);
  Image out(3, h, w);
  auto ro = out.plane(0), go = out.plane(1), bo = out.plane(2);
  for (std::size_t i = 0; i < n; ++i) {
    const double Cb = cb[i] - 128.0, Cr = cr[i] - 128.0;
    ro[i] = std::clamp((y[i] + 1.402 * Cr) / 255.0, 0.0, 1.0);
    go[i] = std::clamp((y[i] - 0.344136286 * Cb - 0.714136286 * Cr) / 255.0, 0.0, 1.0);
    bo[i] = std::clamp((y[i] + 1.772 * Cb) / 255.0, 0.0, 1.0);
  }
  return out;
}

}  // namespace syncforge
