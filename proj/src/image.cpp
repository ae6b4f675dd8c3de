#include "syncforge/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "syncforge/errors.hpp"

namespace syncforge {

Image::Image(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels < 1 || height < 1 || width < 1) {
    throw InvalidInput("image dimensions must be positive, got " +
                       std::to_string(channels) + "x" +
                       std::to_string(height) + "x" + std::to_string(width));
  }
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

Image& Image::clamp01() {
  for (double& v : data_) v = std::clamp(v, 0.0, 1.0);
  return *this;
}

namespace {

// Cb = (B - Y) / 1.772, Cr = (R - Y) / 1.402 is the full-range BT.601 chroma
// definition. The inverse is written in terms of the same constants so that
// the round trip is exact up to rounding.
constexpr double kCbScale = 1.772;
constexpr double kCrScale = 1.402;

void require_channels(const Image& img, int c, const char* what) {
  if (img.channels() != c) {
    throw InvalidInput(std::string(what) + ": expected " + std::to_string(c) +
                       " channels, got " + std::to_string(img.channels()));
  }
}

}  // namespace

std::pair<Image, Image> rgb_to_luma_chroma(const Image& rgb) {
  require_channels(rgb, 3, "rgb_to_luma_chroma");
  Image y(1, rgb.height(), rgb.width());
  Image cc(2, rgb.height(), rgb.width());
  auto r = rgb.plane(0), g = rgb.plane(1), b = rgb.plane(2);
  auto yp = y.plane(0), cb = cc.plane(0), cr = cc.plane(1);
  for (std::size_t i = 0; i < yp.size(); ++i) {
    const double lum = luma(r[i], g[i], b[i]);
    yp[i] = lum;
    cb[i] = (b[i] - lum) / kCbScale;
    cr[i] = (r[i] - lum) / kCrScale;
  }
  return {std::move(y), std::move(cc)};
}

Image luma_chroma_to_rgb(const Image& luma_img, const Image& chroma,
                         bool clamp) {
  require_channels(luma_img, 1, "luma_chroma_to_rgb (luma)");
  require_channels(chroma, 2, "luma_chroma_to_rgb (chroma)");
  if (luma_img.height() != chroma.height() ||
      luma_img.width() != chroma.width()) {
    throw InvalidInput("luma_chroma_to_rgb: luma and chroma sizes differ");
  }
  Image out(3, luma_img.height(), luma_img.width());
  auto yp = luma_img.plane(0), cb = chroma.plane(0), cr = chroma.plane(1);
  auto r = out.plane(0), g = out.plane(1), b = out.plane(2);
  for (std::size_t i = 0; i < yp.size(); ++i) {
    const double dr = kCrScale * cr[i];
    const double db = kCbScale * cb[i];
    r[i] = yp[i] + dr;
    b[i] = yp[i] + db;
    g[i] = yp[i] - (kLumaR * dr + kLumaB * db) / kLumaG;
  }
  if (clamp) out.clamp01();
  return out;
}

Image to_luma(const Image& img) {
  if (img.channels() == 1) return img;
  require_channels(img, 3, "to_luma");
  Image y(1, img.height(), img.width());
  auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
  auto yp = y.plane(0);
  for (std::size_t i = 0; i < yp.size(); ++i) yp[i] = luma(r[i], g[i], b[i]);
  return y;
}

namespace {

struct Tap {
  int i0, i1;
  double w1;  // weight of i1; i0 gets 1 - w1
};

std::vector<Tap> bilinear_taps(int in, int out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int d = 0; d < out; ++d) {
    double src = (d + 0.5) * scale - 0.5;
    if (src < 0) src = 0;
    int i0 = static_cast<int>(src);
    if (i0 > in - 1) i0 = in - 1;
    const int i1 = std::min(i0 + 1, in - 1);
    taps[d] = {i0, i1, src - i0};
  }
  return taps;
}

}  // namespace

Image resize_bilinear(const Image& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) {
    throw InvalidInput("resize_bilinear: output size must be positive");
  }
  if (out_h == img.height() && out_w == img.width()) return img;
  const auto tx = bilinear_taps(img.width(), out_w);
  const auto ty = bilinear_taps(img.height(), out_h);
  Image out(img.channels(), out_h, out_w);
  std::vector<double> row(out_w * 2);
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < out_h; ++y) {
      const Tap& t = ty[y];
      for (int x = 0; x < out_w; ++x) {
        const Tap& s = tx[x];
        const double a0 = img.at(c, t.i0, s.i0), a1 = img.at(c, t.i0, s.i1);
        const double b0 = img.at(c, t.i1, s.i0), b1 = img.at(c, t.i1, s.i1);
        const double top = a0 + s.w1 * (a1 - a0);
        const double bot = b0 + s.w1 * (b1 - b0);
        out.at(c, y, x) = top + t.w1 * (bot - top);
      }
    }
  }
  return out;
}

double psnr(const Image& a, const Image& b, double cap) {
  if (!a.same_shape(b)) throw InvalidInput("psnr: image shapes differ");
  double acc = 0.0;
  const auto& da = a.data();
  const auto& db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = da[i] - db[i];
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(da.size());
  if (mse <= 0.0) return cap;
  return std::min(cap, 10.0 * std::log10(1.0 / mse));
}

namespace {

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(size);
  const int r = size / 2;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - r;
    w[i] = std::exp(-d * d / (2 * sigma * sigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable "valid" filtering of a single plane.
std::vector<double> filter_valid(std::span<const double> p, int h, int w,
                                 const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int ow = w - n + 1, oh = h - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * p[y * w + x + i];
      tmp[y * ow + x] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * tmp[(y + i) * ow + x];
      out[y * ow + x] = s;
    }
  return out;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw InvalidInput("ssim: image shapes differ");
  const Image ya = to_luma(a);
  const Image yb = to_luma(b);
  const int h = a.height(), w = a.width();
  int win = std::min({11, h, w});
  if (win % 2 == 0) --win;
  const auto k = gaussian_window(win, 1.5);

  const std::size_t n = ya.plane_size();
  std::vector<double> aa(n), bb(n), ab(n);
  auto pa = ya.plane(0), pb = yb.plane(0);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = pa[i] * pa[i];
    bb[i] = pb[i] * pb[i];
    ab[i] = pa[i] * pb[i];
  }
  const auto mu_a = filter_valid(pa, h, w, k);
  const auto mu_b = filter_valid(pb, h, w, k);
  const auto s_aa = filter_valid(aa, h, w, k);
  const auto s_bb = filter_valid(bb, h, w, k);
  const auto s_ab = filter_valid(ab, h, w, k);

  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  double acc = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = s_aa[i] - ma * ma;
    const double vb = s_bb[i] - mb * mb;
    const double cov = s_ab[i] - ma * mb;
    acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
           ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return acc / static_cast<double>(mu_a.size());
}

QualityReport quality(const Image& reference, const Image& test,
                      double psnr_cap) {
  return {psnr(reference, test, psnr_cap), ssim(reference, test)};
}

}  // namespace syncforge
