#include "syncforge/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "syncforge/errors.hpp"
#include "syncforge/png_io.hpp"

namespace syncforge {

namespace {

using Color = std::array<double, 3>;

Color random_color(Rng& rng) { return {rng.uniform(), rng.uniform(), rng.uniform()}; }

// Bilinearly interpolated lattice noise in [-1, 1].
Image value_noise(Rng& rng, int h, int w, int cells) {
  Image lattice(1, cells + 1, cells + 1);
  for (double& v : lattice.data()) v = rng.uniform(-1.0, 1.0);
  Image out(1, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double fy = (y + 0.5) / h * cells, fx = (x + 0.5) / w * cells;
      const int iy = std::min(static_cast<int>(fy), cells - 1);
      const int ix = std::min(static_cast<int>(fx), cells - 1);
      const double ty = fy - iy, tx = fx - ix;
      const double top = lattice.at(0, iy, ix) + tx * (lattice.at(0, iy, ix + 1) - lattice.at(0, iy, ix));
      const double bot =
          lattice.at(0, iy + 1, ix) + tx * (lattice.at(0, iy + 1, ix + 1) - lattice.at(0, iy + 1, ix));
      out.at(0, y, x) = top + ty * (bot - top);
    }
  return out;
}

}  // namespace

Image synth_image(Rng& rng, int h, int w) {
  if (h < 1 || w < 1) throw InvalidInput("synthetic image size must be positive");
  Image img(3, h, w);
  const double pi = std::numbers::pi;

  // Background: two-color linear gradient at a random angle.
  const Color c0 = random_color(rng), c1 = random_color(rng);
  const double ang = rng.uniform(0.0, 2 * pi);
  const double ca = std::cos(ang), sa = std::sin(ang);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double u = 2.0 * (x + 0.5) / w - 1.0, v = 2.0 * (y + 0.5) / h - 1.0;
      const double t = std::clamp(0.5 + 0.35 * (u * ca + v * sa), 0.0, 1.0);
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = c0[c] + t * (c1[c] - c0[c]);
    }

  // Shapes: ellipses and rotated rectangles, some striped.
  const int shapes = rng.uniform_int(3, 8);
  for (int s = 0; s < shapes; ++s) {
    const bool ellipse = rng.uniform() < 0.5;
    const double cx = rng.uniform(-1.0, 1.0), cy = rng.uniform(-1.0, 1.0);
    const double rx = rng.uniform(0.1, 0.6), ry = rng.uniform(0.1, 0.6);
    const double rot = rng.uniform(0.0, pi);
    const double cr = std::cos(rot), sr = std::sin(rot);
    const Color fill = random_color(rng), alt = random_color(rng);
    const bool striped = rng.uniform() < 0.4;
    const double freq = rng.uniform(4.0, 16.0), phase = rng.uniform(0.0, 2 * pi);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double u = 2.0 * (x + 0.5) / w - 1.0 - cx, v = 2.0 * (y + 0.5) / h - 1.0 - cy;
        const double a = (u * cr + v * sr) / rx, b = (-u * sr + v * cr) / ry;
        const bool inside = ellipse ? a * a + b * b <= 1.0 : std::abs(a) <= 1.0 && std::abs(b) <= 1.0;
        if (!inside) continue;
        const bool use_alt = striped && std::sin(freq * a + phase) > 0.0;
        for (int c = 0; c < 3; ++c) img.at(c, y, x) = use_alt ? alt[c] : fill[c];
      }
  }

  // Smooth luminance noise plus a little fine grain.
  const Image coarse = value_noise(rng, h, w, rng.uniform_int(3, 8));
  const Image fine = value_noise(rng, h, w, std::max(4, std::min(h, w) / 2));
  const double ac = rng.uniform(0.03, 0.12), af = rng.uniform(0.01, 0.06);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double d = ac * coarse.at(0, y, x) + af * fine.at(0, y, x);
      for (int c = 0; c < 3; ++c) img.at(c, y, x) += d;
    }
  return quantize8(img.clamp01());
}

void write_synth_dataset(const std::filesystem::path& dir, int count, int h, int w,
                         std::uint64_t seed) {
  if (count < 1) throw InvalidInput("image count must be positive");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  for (int i = 0; i < count; ++i) {
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(i), 0x5359);
    char name[32];
    std::snprintf(name, sizeof name, "img_%05d.png", i);
    write_png(dir / name, synth_image(rng, h, w));
  }
}

}  // namespace syncforge
