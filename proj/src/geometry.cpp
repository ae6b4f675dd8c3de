#include "syncforge/geometry.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "syncforge/errors.hpp"

namespace syncforge {

namespace {

constexpr double kInfinityTol = 1e-9;
constexpr double kCollinearTol = 1e-9;
constexpr double kDetTol = 1e-12;
constexpr double kPivotTol = 1e-12;
constexpr double kSnapTol = 1e-6;

double cross(const Point2& a, const Point2& b, const Point2& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

}  // namespace

CornerQuad CornerQuad::canonical() {
  return CornerQuad{{Point2{-1, -1}, Point2{1, -1}, Point2{1, 1}, Point2{-1, 1}}};
}

void CornerQuad::validate() const {
  for (const auto& q : p) {
    if (!std::isfinite(q.x) || !std::isfinite(q.y)) {
      throw SingularMatrix("corner quad has non-finite coordinates");
    }
  }
  static constexpr int kTriples[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  for (const auto& t : kTriples) {
    if (std::abs(cross(p[t[0]], p[t[1]], p[t[2]])) <= kCollinearTol) {
      throw SingularMatrix("corner quad is degenerate: points " +
                           std::to_string(t[0] + 1) + ", " +
                           std::to_string(t[1] + 1) + ", " +
                           std::to_string(t[2] + 1) + " are collinear");
    }
  }
}

std::array<double, 8> CornerQuad::flat() const {
  std::array<double, 8> v{};
  for (int i = 0; i < 4; ++i) {
    v[2 * i] = p[i].x;
    v[2 * i + 1] = p[i].y;
  }
  return v;
}

CornerQuad CornerQuad::from_flat(const std::array<double, 8>& v) {
  CornerQuad q;
  for (int i = 0; i < 4; ++i) q.p[i] = {v[2 * i], v[2 * i + 1]};
  return q;
}

Homography::Homography(const std::array<double, 9>& m) : m_(m) {
  const double s = m_[8];
  if (!(std::abs(s) > kDetTol)) {
    throw SingularMatrix("homography has a zero bottom-right entry");
  }
  if (s != 1.0) {
    for (double& v : m_) v /= s;
    m_[8] = 1.0;
  }
  const double det = determinant();
  if (!(std::abs(det) > kDetTol)) {
    throw SingularMatrix("homography is singular (det = " +
                         std::to_string(det) + ")");
  }
}

double Homography::determinant() const {
  const auto& a = m_;
  return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
         a[2] * (a[3] * a[7] - a[4] * a[6]);
}

Point2 Homography::apply(const Point2& p) const {
  const auto& a = m_;
  const double u = a[0] * p.x + a[1] * p.y + a[2];
  const double v = a[3] * p.x + a[4] * p.y + a[5];
  const double w = a[6] * p.x + a[7] * p.y + a[8];
  if (!(std::abs(w) > kInfinityTol)) {
    throw DegeneratePoint("point (" + std::to_string(p.x) + ", " +
                          std::to_string(p.y) + ") maps to infinity");
  }
  if (w == 1.0) return {u, v};
  return {u / w, v / w};
}

Homography compose(const Homography& a, const Homography& b) {
  std::array<double, 9> m{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a(r, k) * b(k, c);
      m[r * 3 + c] = s;
    }
  return Homography(m);
}

Homography invert(const Homography& h) {
  const auto& a = h.matrix();
  const double det = h.determinant();
  if (!(std::abs(det) > kDetTol)) throw SingularMatrix("cannot invert a singular homography");
  // Adjugate; the division by det cancels in the normalization unless the
  // adjugate's corner vanishes, so divide anyway for a well-scaled result.
  std::array<double, 9> inv = {
      a[4] * a[8] - a[5] * a[7], a[2] * a[7] - a[1] * a[8], a[1] * a[5] - a[2] * a[4],
      a[5] * a[6] - a[3] * a[8], a[0] * a[8] - a[2] * a[6], a[2] * a[3] - a[0] * a[5],
      a[3] * a[7] - a[4] * a[6], a[1] * a[6] - a[0] * a[7], a[0] * a[4] - a[1] * a[3]};
  for (double& v : inv) v /= det;
  return Homography(inv);
}

Homography homography_from_points(const std::array<Point2, 4>& src,
                                  const std::array<Point2, 4>& dst) {
  CornerQuad{src}.validate();
  CornerQuad{dst}.validate();
  // Rows: [x y 1 0 0 0 -ux -uy | u] and [0 0 0 x y 1 -vx -vy | v].
  double a[8][9];
  for (int i = 0; i < 4; ++i) {
    const double x = src[i].x, y = src[i].y, u = dst[i].x, v = dst[i].y;
    double* r0 = a[2 * i];
    double* r1 = a[2 * i + 1];
    const double row0[9] = {x, y, 1, 0, 0, 0, -u * x, -u * y, u};
    const double row1[9] = {0, 0, 0, x, y, 1, -v * x, -v * y, v};
    std::copy(row0, row0 + 9, r0);
    std::copy(row1, row1 + 9, r1);
  }
  for (int col = 0; col < 8; ++col) {
    int piv = col;
    for (int r = col + 1; r < 8; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (!(std::abs(a[piv][col]) > kPivotTol)) {
      throw SingularMatrix("direct linear system is singular");
    }
    if (piv != col)
      for (int k = 0; k < 9; ++k) std::swap(a[piv][k], a[col][k]);
    for (int r = col + 1; r < 8; ++r) {
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (int k = col; k < 9; ++k) a[r][k] -= f * a[col][k];
    }
  }
  std::array<double, 9> h{};
  for (int r = 7; r >= 0; --r) {
    double s = a[r][8];
    for (int k = r + 1; k < 8; ++k) s -= a[r][k] * h[k];
    h[r] = s / a[r][r];
  }
  h[8] = 1.0;
  return Homography(h);
}

Homography from_quad(const CornerQuad& quad) {
  return homography_from_points(quad.p, CornerQuad::canonical().p);
}

CornerQuad to_quad(const Homography& h) {
  const Homography inv = invert(h);
  CornerQuad out;
  const auto q = CornerQuad::canonical();
  for (int i = 0; i < 4; ++i) out.p[i] = inv.apply(q.p[i]);
  return out;
}

namespace {

double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < kSnapTol ? r : v;
}

void axis_taps(double s, int n, int& i0, int& i1, double& w) {
  if (s <= 0.0) {
    i0 = i1 = 0;
    w = 0.0;
  } else if (s >= n - 1) {
    i0 = i1 = n - 1;
    w = 0.0;
  } else {
    i0 = static_cast<int>(std::floor(s));
    i1 = std::min(i0 + 1, n - 1);
    w = s - i0;
  }
}

}  // namespace

SamplingGrid make_sampling_grid(const Homography& h, int in_h, int in_w,
                                int out_h, int out_w) {
  if (in_h < 1 || in_w < 1 || out_h < 1 || out_w < 1) {
    throw InvalidInput("make_sampling_grid: sizes must be positive");
  }
  const Homography inv = invert(h);
  const auto& m = inv.matrix();
  SamplingGrid g;
  g.in_h = in_h;
  g.in_w = in_w;
  g.out_h = out_h;
  g.out_w = out_w;
  g.entries.resize(static_cast<std::size_t>(out_h) * out_w);
  constexpr double kEdge = 1.0 + 1e-12;
  for (int y = 0; y < out_h; ++y) {
    const double qy = pixel_to_norm(y, out_h);
    for (int x = 0; x < out_w; ++x) {
      const double qx = pixel_to_norm(x, out_w);
      auto& e = g.entries[static_cast<std::size_t>(y) * out_w + x];
      const double w = m[6] * qx + m[7] * qy + m[8];
      if (!(std::abs(w) > kInfinityTol)) continue;
      const double px = (m[0] * qx + m[1] * qy + m[2]) / w;
      const double py = (m[3] * qx + m[4] * qy + m[5]) / w;
      if (!(px >= -kEdge && px <= kEdge && py >= -kEdge && py <= kEdge)) continue;
      const double sx = snap(norm_to_pixel(px, in_w));
      const double sy = snap(norm_to_pixel(py, in_h));
      e.valid = true;
      axis_taps(sx, in_w, e.x0, e.x1, e.wx);
      axis_taps(sy, in_h, e.y0, e.y1, e.wy);
    }
  }
  return g;
}

Image grid_sample(const Image& img, const SamplingGrid& grid, double fill) {
  if (img.height() != grid.in_h || img.width() != grid.in_w) {
    throw InvalidInput("grid_sample: image does not match the grid's source size");
  }
  Image out(img.channels(), grid.out_h, grid.out_w);
  const std::size_t n = grid.entries.size();
  for (int c = 0; c < img.channels(); ++c) {
    auto src = img.plane(c);
    auto dst = out.plane(c);
    const int w = img.width();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& e = grid.entries[i];
      if (!e.valid) {
        dst[i] = fill;
        continue;
      }
      const double a0 = src[e.y0 * w + e.x0], a1 = src[e.y0 * w + e.x1];
      const double b0 = src[e.y1 * w + e.x0], b1 = src[e.y1 * w + e.x1];
      const double top = a0 + e.wx * (a1 - a0);
      const double bot = b0 + e.wx * (b1 - b0);
      dst[i] = top + e.wy * (bot - top);
    }
  }
  return out;
}

Image warp(const Image& img, const Homography& h, int out_h, int out_w,
           double fill) {
  return grid_sample(img, make_sampling_grid(h, img.height(), img.width(), out_h, out_w),
                     fill);
}

Image resync(const Image& img, const CornerQuad& predicted, int out_h,
             int out_w, double fill) {
  predicted.validate();
  return warp(img, invert(from_quad(predicted)), out_h, out_w, fill);
}

void to_json(nlohmann::json& j, const Point2& p) { j = nlohmann::json::array({p.x, p.y}); }

void from_json(const nlohmann::json& j, Point2& p) {
  if (!j.is_array() || j.size() != 2) throw InvalidInput("point must be [x, y]");
  p.x = j.at(0).get<double>();
  p.y = j.at(1).get<double>();
}

void to_json(nlohmann::json& j, const CornerQuad& q) {
  j = nlohmann::json::array();
  for (const auto& p : q.p) j.push_back(p);
}

void from_json(const nlohmann::json& j, CornerQuad& q) {
  if (!j.is_array() || j.size() != 4) throw InvalidInput("quad must hold four [x, y] points");
  for (int i = 0; i < 4; ++i) q.p[i] = j.at(i).get<Point2>();
}

nlohmann::json homography_json(const Homography& h) {
  return {{"quad", to_quad(h)}, {"matrix", h.matrix()}};
}

Homography homography_from_json(const nlohmann::json& j) {
  if (j.contains("matrix")) {
    const auto& m = j.at("matrix");
    if (!m.is_array() || m.size() != 9) throw InvalidInput("matrix must hold 9 numbers");
    std::array<double, 9> a{};
    for (int i = 0; i < 9; ++i) a[i] = m.at(i).get<double>();
    return Homography(a);
  }
  if (j.contains("quad")) return from_quad(j.at("quad").get<CornerQuad>());
  throw InvalidInput("homography JSON needs a \"matrix\" or \"quad\" field");
}

}  // namespace syncforge
