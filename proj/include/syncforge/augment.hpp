#pragma once

#include <array>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "syncforge/geometry.hpp"
#include "syncforge/image.hpp"
#include "syncforge/rng.hpp"

namespace syncforge {

// ---------------------------------------------------------------------------
// Geometric transforms. Rotation angles are in degrees, positive clockwise on
// screen (y points down). Every variant knows its exact homography.

namespace geo {
struct Identity {
  friend bool operator==(const Identity&, const Identity&) = default;
};
struct HFlip {
  friend bool operator==(const HFlip&, const HFlip&) = default;
};
struct Rotation {
  double degrees = 0.0;
  friend bool operator==(const Rotation&, const Rotation&) = default;
};
/// Normalized rectangle [x0, x1] x [y0, y1], rescaled to the full frame.
struct Crop {
  double x0 = -1, y0 = -1, x1 = 1, y1 = 1;
  friend bool operator==(const Crop&, const Crop&) = default;
};
/// The output frame corners come from source corners moved inward by
/// offsets[i] = (dx, dy), in half-frame units, each within [0, scale].
struct Perspective {
  double scale = 0.0;
  std::array<std::array<double, 2>, 4> offsets{};
  friend bool operator==(const Perspective&, const Perspective&) = default;
};
}  // namespace geo

using GeometricTransform =
    std::variant<geo::Identity, geo::HFlip, geo::Rotation, geo::Crop, geo::Perspective>;

/// Throws InvalidTransform when the parameters are out of range.
void validate(const GeometricTransform& t);
Homography homography(const GeometricTransform& t);
std::string describe(const GeometricTransform& t);

/// Warp by the transform's homography, keeping the pixel dimensions; the
/// vacated area is filled with 0.
std::pair<Image, Homography> apply_geometric(const Image& img, const GeometricTransform& t);

struct GeometricRanges {
  double crop_area_min = 0.3;
  double crop_area_max = 1.0;
  double rotation_max_deg = 135.0;
  double perspective_max = 0.3;
  /// Variants to draw from uniformly, by name ("identity", "crop", "hflip",
  /// "rotation", "perspective"). A repeated name weights that variant.
  /// Empty means all five.
  std::vector<std::string> variants;
  /// Rotation angles in degrees to pick from uniformly. Empty means
  /// U(-rotation_max_deg, rotation_max_deg).
  std::vector<double> rotation_angles;

  /// Throws InvalidInput for an unknown variant name or an empty range.
  void validate() const;
};

/// Draw one transform: variant uniform over {identity, crop, hflip,
/// rotation, perspective}, parameters uniform within the ranges.
GeometricTransform sample_geometric(Rng& rng, const GeometricRanges& ranges = {});
std::vector<GeometricTransform> sample_geometric(Rng& rng, int count,
                                                 const GeometricRanges& ranges = {});

/// Centered crop keeping `area` of the frame (same aspect ratio).
geo::Crop centered_crop(double area);
/// Perspective with per-corner offsets drawn from U(0, scale).
geo::Perspective random_perspective(Rng& rng, double scale);

// ---------------------------------------------------------------------------
// Valuemetric transforms.

namespace val {
struct Identity {
  friend bool operator==(const Identity&, const Identity&) = default;
};
struct Brightness {
  double factor = 1.0;
  friend bool operator==(const Brightness&, const Brightness&) = default;
};
struct Contrast {
  double factor = 1.0;
  friend bool operator==(const Contrast&, const Contrast&) = default;
};
struct Saturation {
  double factor = 1.0;
  friend bool operator==(const Saturation&, const Saturation&) = default;
};
/// Chroma-plane rotation by shift * 360 degrees.
struct Hue {
  double shift = 0.0;
  friend bool operator==(const Hue&, const Hue&) = default;
};
struct Grayscale {
  friend bool operator==(const Grayscale&, const Grayscale&) = default;
};
struct GaussianBlur {
  int kernel = 1;
  friend bool operator==(const GaussianBlur&, const GaussianBlur&) = default;
};
struct Jpeg {
  int quality = 100;
  friend bool operator==(const Jpeg&, const Jpeg&) = default;
};
}  // namespace val

using ValuemetricTransform =
    std::variant<val::Identity, val::Brightness, val::Contrast, val::Saturation, val::Hue,
                 val::Grayscale, val::GaussianBlur, val::Jpeg>;

void validate(const ValuemetricTransform& t);
std::string describe(const ValuemetricTransform& t);

/// Normalized Gaussian taps for an odd kernel size, sigma = 0.3((k-1)/2 - 1) + 0.8.
std::vector<double> gaussian_kernel(int size);
double gaussian_sigma(int size);

/// Separable Gaussian blur with reflect padding.
Image gaussian_blur(const Image& img, int kernel);

/// Adjoint (transpose) of gaussian_blur as a linear map.
Image gaussian_blur_adjoint(const Image& grad, int kernel);

/// apply_valuemetric without the final clamp.
Image apply_valuemetric_unclamped(const Image& img, const ValuemetricTransform& t);

/// Applies one valuemetric transform to a 3-channel image (brightness,
/// blur and JPEG also accept 1 channel). Output is clamped to [0, 1].
Image apply_valuemetric(const Image& img, const ValuemetricTransform& t);

struct ValuemetricRanges {
  int jpeg_min = 40;
  int jpeg_max = 80;
  int blur_max = 9;
  double factor_min = 0.5;
  double factor_max = 2.0;
};

/// Draw from {JPEG, blur, brightness, contrast, saturation}, uniformly.
ValuemetricTransform sample_valuemetric(Rng& rng, const ValuemetricRanges& ranges = {});

// ---------------------------------------------------------------------------

struct TransformRecord {
  std::vector<GeometricTransform> geometric;
  std::vector<ValuemetricTransform> valuemetric;
  Homography total;  // product of the per-step homographies, last step leftmost
  CornerQuad gt_quad = CornerQuad::canonical();
};

/// Apply geometric steps in order (composing homographies), then the
/// valuemetric steps. gt_quad = to_quad(total).
std::pair<Image, TransformRecord> apply_sequence(
    const Image& img, const std::vector<GeometricTransform>& geometric,
    const std::vector<ValuemetricTransform>& valuemetric);

/// Sample n_geo geometric and n_val valuemetric transforms and apply them.
std::pair<Image, TransformRecord> augment_pipeline(const Image& img, Rng& rng, int n_geo = 3,
                                                   int n_val = 2,
                                                   const GeometricRanges& geo_ranges = {},
                                                   const ValuemetricRanges& val_ranges = {});

// ---------------------------------------------------------------------------
// JSON transform-spec mini-language. Each item is an object with one key
// (crop, rotate, hflip, perspective, brightness, contrast, saturation, hue,
// grayscale, blur, jpeg, identity) or one of the bare words "hflip",
// "grayscale", "identity".

using AnyTransform = std::variant<GeometricTransform, ValuemetricTransform>;

nlohmann::json to_json(const GeometricTransform& t);
nlohmann::json to_json(const ValuemetricTransform& t);

/// Parse a single spec item. A perspective given only as a scale draws its
/// offsets from `rng`.
AnyTransform parse_transform(const nlohmann::json& item, Rng& rng);

/// Parse a spec: a JSON array of items, a single JSON item, or a bare word.
std::vector<AnyTransform> parse_transform_spec(const std::string& text, Rng& rng);

/// Splits a parsed spec into its geometric and valuemetric parts, keeping
/// order. Geometric steps must all precede valuemetric ones.
std::pair<std::vector<GeometricTransform>, std::vector<ValuemetricTransform>> split_spec(
    const std::vector<AnyTransform>& spec);

nlohmann::json to_json(const TransformRecord& r);
TransformRecord record_from_json(const nlohmann::json& j);

}  // namespace syncforge
