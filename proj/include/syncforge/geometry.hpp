#pragma once

#include <array>
#include <vector>

#include "json.hpp"

#include "syncforge/image.hpp"

namespace syncforge {

/// Normalized image coordinates: x rightward, y downward, the visible frame
/// spans [-1, 1] on both axes with pixel centers at (2i + 1) / n - 1.
struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Four points in the original image frame that map to the corners of the
/// transformed frame, ordered top-left, top-right, bottom-right, bottom-left.
struct CornerQuad {
  std::array<Point2, 4> p{};

  /// The corners of the frame itself: (-1,-1), (1,-1), (1,1), (-1,1).
  static CornerQuad canonical();

  /// Throws SingularMatrix when any three points are collinear.
  void validate() const;

  std::array<double, 8> flat() const;
  static CornerQuad from_flat(const std::array<double, 8>& v);

  friend bool operator==(const CornerQuad&, const CornerQuad&) = default;
};

/// 3x3 projective map with m(2,2) normalized to 1.
class Homography {
 public:
  Homography() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}
  /// Row-major entries; the matrix is normalized by its bottom-right entry.
  explicit Homography(const std::array<double, 9>& m);

  static Homography identity() { return {}; }

  double operator()(int r, int c) const { return m_[r * 3 + c]; }
  const std::array<double, 9>& matrix() const { return m_; }

  double determinant() const;

  /// Maps a point; throws DegeneratePoint when it lands at infinity.
  Point2 apply(const Point2& p) const;

  friend bool operator==(const Homography&, const Homography&) = default;

 private:
  std::array<double, 9> m_;
};

Homography compose(const Homography& a, const Homography& b);  // a after b
Homography invert(const Homography& h);

/// Homography mapping src[i] to dst[i], by Gaussian elimination with partial
/// pivoting on the 8x8 direct linear system.
Homography homography_from_points(const std::array<Point2, 4>& src,
                                  const std::array<Point2, 4>& dst);

/// Homography taking the quad points onto the canonical frame corners.
Homography from_quad(const CornerQuad& quad);

/// Where the transformed frame's corners land in the original frame.
CornerQuad to_quad(const Homography& h);

/// Pixel index <-> normalized coordinate helpers (align_corners = false).
inline double pixel_to_norm(double i, int n) { return (2.0 * i + 1.0) / n - 1.0; }
inline double norm_to_pixel(double v, int n) { return ((v + 1.0) * n - 1.0) / 2.0; }

/// Precomputed bilinear taps for backward warping. For every output pixel,
/// either invalid (takes the fill value) or four source taps with weights.
struct SamplingGrid {
  int in_h = 0, in_w = 0, out_h = 0, out_w = 0;
  struct Entry {
    bool valid = false;
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    double wx = 0.0, wy = 0.0;  // weight of x1 / y1
  };
  std::vector<Entry> entries;  // out_h * out_w, row-major
};

/// Grid for warp(img, h): output pixel centers go through h^-1 into the
/// source frame. Source locations outside [-1, 1]^2 (or at infinity) are
/// invalid. Locations within 1e-6 px of a pixel center snap to it, so
/// identity, flips and quarter turns resample exactly.
SamplingGrid make_sampling_grid(const Homography& h, int in_h, int in_w,
                                int out_h, int out_w);

/// Resample every channel through a grid.
Image grid_sample(const Image& img, const SamplingGrid& grid, double fill = 0.0);

/// Backward warp by h into an out_h x out_w frame.
Image warp(const Image& img, const Homography& h, int out_h, int out_w,
           double fill = 0.0);

/// Re-express a transformed image in the original frame, given the predicted
/// corner quad. Regions not visible in the input take the fill value.
Image resync(const Image& img, const CornerQuad& predicted, int out_h,
             int out_w, double fill = 0.0);

void to_json(nlohmann::json& j, const Point2& p);
void from_json(const nlohmann::json& j, Point2& p);
void to_json(nlohmann::json& j, const CornerQuad& q);
void from_json(const nlohmann::json& j, CornerQuad& q);

/// {"quad": [[x, y] x 4], "matrix": [9 floats row-major]}
nlohmann::json homography_json(const Homography& h);
Homography homography_from_json(const nlohmann::json& j);

}  // namespace syncforge
