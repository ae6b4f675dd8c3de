#include "syncforge/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string_view>

#include "syncforge/errors.hpp"
#include "syncforge/jpeg.hpp"

namespace syncforge {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

constexpr double kRangeTol = 1e-12;

}  // namespace

// ---------------------------------------------------------------------------
// Geometric

void validate(const GeometricTransform& t) {
  std::visit(
      overloaded{
          [](const geo::Identity&) {}, [](const geo::HFlip&) {},
          [](const geo::Rotation& r) {
            if (!std::isfinite(r.degrees) || std::abs(r.degrees) > 180.0)
              throw InvalidTransform("rotation angle must be within [-180, 180] degrees");
          },
          [](const geo::Crop& c) {
            const bool inside = c.x0 >= -1 - kRangeTol && c.y0 >= -1 - kRangeTol &&
                                c.x1 <= 1 + kRangeTol && c.y1 <= 1 + kRangeTol;
            if (!(c.x1 > c.x0) || !(c.y1 > c.y0) || !inside)
              throw InvalidTransform("crop must be a positive-area rectangle inside [-1, 1]^2");
          },
          [](const geo::Perspective& p) {
            if (!(p.scale >= 0.0 && p.scale < 0.5))
              throw InvalidTransform("perspective scale must be in [0, 0.5)");
            for (const auto& o : p.offsets)
              for (double d : o)
                if (!(d >= 0.0 && d <= p.scale + kRangeTol))
                  throw InvalidTransform("perspective offsets must lie in [0, scale]");
          }},
      t);
}

Homography homography(const GeometricTransform& t) {
  validate(t);
  return std::visit(
      overloaded{
          [](const geo::Identity&) { return Homography::identity(); },
          [](const geo::HFlip&) { return Homography({-1, 0, 0, 0, 1, 0, 0, 0, 1}); },
          [](const geo::Rotation& r) {
            // Exact values at quarter turns keep flips/rotations bit-exact.
            double c, s;
            const double d = r.degrees;
            if (d == 0.0) {
              c = 1, s = 0;
            } else if (d == 90.0) {
              c = 0, s = 1;
            } else if (d == -90.0) {
              c = 0, s = -1;
            } else if (d == 180.0 || d == -180.0) {
              c = -1, s = 0;
            } else {
              const double a = d * std::numbers::pi / 180.0;
              c = std::cos(a);
              s = std::sin(a);
            }
            return Homography({c, -s, 0, s, c, 0, 0, 0, 1});
          },
          [](const geo::Crop& c) {
            const double sx = 2.0 / (c.x1 - c.x0), sy = 2.0 / (c.y1 - c.y0);
            return Homography({sx, 0, -(c.x0 + c.x1) / (c.x1 - c.x0), 0, sy,
                               -(c.y0 + c.y1) / (c.y1 - c.y0), 0, 0, 1});
          },
          [](const geo::Perspective& p) {
            const auto q = CornerQuad::canonical().p;
            std::array<Point2, 4> src;
            for (int i = 0; i < 4; ++i) {
              // Inward: toward the frame center along each axis.
              const double sx = q[i].x < 0 ? 1.0 : -1.0;
              const double sy = q[i].y < 0 ? 1.0 : -1.0;
              src[i] = {q[i].x + sx * p.offsets[i][0], q[i].y + sy * p.offsets[i][1]};
            }
            return homography_from_points(src, q);
          }},
      t);
}

std::string describe(const GeometricTransform& t) {
  return std::visit(
      overloaded{[](const geo::Identity&) -> std::string { return "identity"; },
                 [](const geo::HFlip&) -> std::string { return "hflip"; },
                 [](const geo::Rotation& r) { return fmt("rotate %g", r.degrees); },
                 [](const geo::Crop& c) {
                   return fmt("crop %.3g", (c.x1 - c.x0) * (c.y1 - c.y0) / 4.0);
                 },
                 [](const geo::Perspective& p) { return fmt("perspective %g", p.scale); }},
      t);
}

std::pair<Image, Homography> apply_geometric(const Image& img, const GeometricTransform& t) {
  if (img.height() < 8 || img.width() < 8) {
    throw InvalidInput("apply_geometric: image must be at least 8x8");
  }
  Homography h = homography(t);
  if (std::holds_alternative<geo::Identity>(t)) return {img, h};
  return {warp(img, h, img.height(), img.width(), 0.0), h};
}

geo::Crop centered_crop(double area) {
  if (!(area > 0.0 && area <= 1.0)) throw InvalidTransform("crop area must be in (0, 1]");
  const double s = std::sqrt(area);
  return {-s, -s, s, s};
}

geo::Perspective random_perspective(Rng& rng, double scale) {
  geo::Perspective p;
  p.scale = scale;
  for (auto& o : p.offsets)
    for (double& d : o) d = rng.uniform(0.0, scale);
  return p;
}

namespace {

constexpr std::array<std::string_view, 5> kGeometricVariants = {"identity", "crop", "hflip",
                                                                "rotation", "perspective"};

int variant_index(const std::string& name) {
  for (std::size_t i = 0; i < kGeometricVariants.size(); ++i)
    if (kGeometricVariants[i] == name) return static_cast<int>(i);
  throw InvalidInput("unknown geometric variant '" + name + "'");
}

}  // namespace

void GeometricRanges::validate() const {
  if (!(crop_area_min > 0 && crop_area_min <= crop_area_max && crop_area_max <= 1))
    throw InvalidInput("crop area range must satisfy 0 < min <= max <= 1");
  if (!(rotation_max_deg >= 0 && rotation_max_deg <= 180))
    throw InvalidInput("rotation range must lie in [0, 180]");
  if (!(perspective_max >= 0 && perspective_max < 0.5))
    throw InvalidInput("perspective scale must lie in [0, 0.5)");
  for (const auto& v : variants) variant_index(v);
  for (double a : rotation_angles)
    if (!(std::abs(a) <= 180)) throw InvalidInput("rotation angles must lie in [-180, 180]");
}

GeometricTransform sample_geometric(Rng& rng, const GeometricRanges& r) {
  const int pick = r.variants.empty()
                       ? static_cast<int>(rng.below(5))
                       : variant_index(r.variants[rng.below(r.variants.size())]);
  switch (pick) {
    case 0:
      return geo::Identity{};
    case 1: {
      const double area = rng.uniform(r.crop_area_min, r.crop_area_max);
      const double side = 2.0 * std::sqrt(area);
      const double x0 = rng.uniform(-1.0, 1.0 - side);
      const double y0 = rng.uniform(-1.0, 1.0 - side);
      return geo::Crop{x0, y0, std::min(1.0, x0 + side), std::min(1.0, y0 + side)};
    }
    case 2:
      return geo::HFlip{};
    case 3:
      if (!r.rotation_angles.empty())
        return geo::Rotation{r.rotation_angles[rng.below(r.rotation_angles.size())]};
      return geo::Rotation{rng.uniform(-r.rotation_max_deg, r.rotation_max_deg)};
    default:
      return random_perspective(rng, r.perspective_max);
  }
}

std::vector<GeometricTransform> sample_geometric(Rng& rng, int count,
                                                 const GeometricRanges& ranges) {
  std::vector<GeometricTransform> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(sample_geometric(rng, ranges));
  return out;
}

// ---------------------------------------------------------------------------
// Valuemetric

void validate(const ValuemetricTransform& t) {
  auto factor = [](double f, const char* name) {
    if (!(f >= 0.1 && f <= 4.0))
      throw InvalidTransform(std::string(name) + " factor must be in [0.1, 4]");
  };
  std::visit(overloaded{[](const val::Identity&) {}, [](const val::Grayscale&) {},
                        [&](const val::Brightness& b) { factor(b.factor, "brightness"); },
                        [&](const val::Contrast& c) { factor(c.factor, "contrast"); },
                        [&](const val::Saturation& s) { factor(s.factor, "saturation"); },
                        [](const val::Hue& h) {
                          if (!(h.shift >= -0.5 && h.shift <= 0.5))
                            throw InvalidTransform("hue shift must be in [-0.5, 0.5]");
                        },
                        [](const val::GaussianBlur& b) {
                          if (b.kernel < 1 || b.kernel > 15 || b.kernel % 2 == 0)
                            throw InvalidTransform("blur kernel must be odd, 1..15");
                        },
                        [](const val::Jpeg& j) {
                          if (j.quality < 1 || j.quality > 100)
                            throw InvalidTransform("jpeg quality must be in 1..100");
                        }},
             t);
}

std::string describe(const ValuemetricTransform& t) {
  return std::visit(
      overloaded{[](const val::Identity&) -> std::string { return "identity"; },
                 [](const val::Grayscale&) -> std::string { return "grayscale"; },
                 [](const val::Brightness& b) { return fmt("brightness %g", b.factor); },
                 [](const val::Contrast& c) { return fmt("contrast %g", c.factor); },
                 [](const val::Saturation& s) { return fmt("saturation %g", s.factor); },
                 [](const val::Hue& h) { return fmt("hue %g", h.shift); },
                 [](const val::GaussianBlur& b) { return fmt("blur %g", b.kernel); },
                 [](const val::Jpeg& j) { return fmt("jpeg %g", j.quality); }},
      t);
}

double gaussian_sigma(int size) { return 0.3 * ((size - 1) * 0.5 - 1.0) + 0.8; }

std::vector<double> gaussian_kernel(int size) {
  if (size < 1 || size % 2 == 0) throw InvalidTransform("gaussian kernel size must be odd");
  const double sigma = gaussian_sigma(size);
  const int r = size / 2;
  std::vector<double> k(size);
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - r;
    k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

namespace {

int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

// One separable pass, written relative to the center tap so that constant
// signals come out bit-identical.
void blur_pass(std::span<const double> src, std::span<double> dst, int h, int w,
               const std::vector<double>& k, bool horizontal) {
  const int r = static_cast<int>(k.size()) / 2;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double c = src[y * w + x];
      double acc = 0.0;
      for (int t = -r; t <= r; ++t) {
        if (t == 0) continue;
        const double v = horizontal ? src[y * w + reflect(x + t, w)]
                                    : src[reflect(y + t, h) * w + x];
        acc += k[t + r] * (v - c);
      }
      dst[y * w + x] = c + acc;
    }
}

double mean_luma(const Image& img) {
  double s = 0.0;
  if (img.channels() == 1) {
    for (double v : img.plane(0)) s += v;
  } else {
    auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
    for (std::size_t i = 0; i < r.size(); ++i) s += luma(r[i], g[i], b[i]);
  }
  return s / static_cast<double>(img.plane_size());
}

}  // namespace

Image gaussian_blur(const Image& img, int kernel) {
  const auto k = gaussian_kernel(kernel);
  if (kernel == 1) return img;
  Image tmp(img.channels(), img.height(), img.width());
  Image out(img.channels(), img.height(), img.width());
  for (int c = 0; c < img.channels(); ++c) {
    blur_pass(img.plane(c), tmp.plane(c), img.height(), img.width(), k, true);
    blur_pass(tmp.plane(c), out.plane(c), img.height(), img.width(), k, false);
  }
  return out;
}

Image gaussian_blur_adjoint(const Image& grad, int kernel) {
  const auto k = gaussian_kernel(kernel);
  if (kernel == 1) return grad;
  const int h = grad.height(), w = grad.width();
  const int r = kernel / 2;
  Image tmp(grad.channels(), h, w);
  Image out(grad.channels(), h, w);
  for (int c = 0; c < grad.channels(); ++c) {
    auto g = grad.plane(c);
    auto t = tmp.plane(c);
    auto o = out.plane(c);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int d = -r; d <= r; ++d) t[reflect(y + d, h) * w + x] += k[d + r] * g[y * w + x];
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int d = -r; d <= r; ++d) o[y * w + reflect(x + d, w)] += k[d + r] * t[y * w + x];
  }
  return out;
}

Image apply_valuemetric_unclamped(const Image& img, const ValuemetricTransform& t) {
  validate(t);
  const bool color = img.channels() == 3;
  if (!color && img.channels() != 1) {
    throw InvalidInput("apply_valuemetric: expected 1 or 3 channels");
  }
  return std::visit(
      overloaded{
          [&](const val::Identity&) { return img; },
          [&](const val::Brightness& b) {
            Image out = img;
            for (double& v : out.data()) v = b.factor * v;
            return out;
          },
          [&](const val::Contrast& c) {
            const double m = (1.0 - c.factor) * mean_luma(img);
            Image out = img;
            for (double& v : out.data()) v = c.factor * v + m;
            return out;
          },
          [&](const val::Saturation& s) {
            if (!color) return img;
            Image out = img;
            auto r = out.plane(0), g = out.plane(1), b = out.plane(2);
            for (std::size_t i = 0; i < r.size(); ++i) {
              const double y = (1.0 - s.factor) * luma(r[i], g[i], b[i]);
              r[i] = s.factor * r[i] + y;
              g[i] = s.factor * g[i] + y;
              b[i] = s.factor * b[i] + y;
            }
            return out;
          },
          [&](const val::Hue& h) {
            if (!color) return img;
            const double a = 2.0 * std::numbers::pi * h.shift;
            const double cm1 = std::cos(a) - 1.0, sn = std::sin(a);
            Image out = img;
            auto r = out.plane(0), g = out.plane(1), b = out.plane(2);
            for (std::size_t i = 0; i < r.size(); ++i) {
              const double y = luma(r[i], g[i], b[i]);
              const double cb = (b[i] - y) / 1.772, cr = (r[i] - y) / 1.402;
              const double dcb = cb * cm1 - cr * sn;
              const double dcr = cb * sn + cr * cm1;
              const double dr = 1.402 * dcr, db = 1.772 * dcb;
              r[i] += dr;
              b[i] += db;
              g[i] -= (kLumaR * dr + kLumaB * db) / kLumaG;
            }
            return out;
          },
          [&](const val::Grayscale&) {
            if (!color) return img;
            Image out = img;
            auto r = out.plane(0), g = out.plane(1), b = out.plane(2);
            for (std::size_t i = 0; i < r.size(); ++i) r[i] = g[i] = b[i] = luma(r[i], g[i], b[i]);
            return out;
          },
          [&](const val::GaussianBlur& b) { return gaussian_blur(img, b.kernel); },
          [&](const val::Jpeg& j) { return jpeg_roundtrip(img, j.quality); }},
      t);
}

Image apply_valuemetric(const Image& img, const ValuemetricTransform& t) {
  Image out = apply_valuemetric_unclamped(img, t);
  if (std::holds_alternative<val::Identity>(t)) return out;
  return out.clamp01();
}

ValuemetricTransform sample_valuemetric(Rng& rng, const ValuemetricRanges& r) {
  switch (rng.below(5)) {
    case 0:
      return val::Jpeg{rng.uniform_int(r.jpeg_min, r.jpeg_max)};
    case 1:
      return val::GaussianBlur{2 * rng.uniform_int(0, (r.blur_max - 1) / 2) + 1};
    case 2:
      return val::Brightness{rng.uniform(r.factor_min, r.factor_max)};
    case 3:
      return val::Contrast{rng.uniform(r.factor_min, r.factor_max)};
    default:
      return val::Saturation{rng.uniform(r.factor_min, r.factor_max)};
  }
}

// ---------------------------------------------------------------------------

std::pair<Image, TransformRecord> apply_sequence(
    const Image& img, const std::vector<GeometricTransform>& geometric,
    const std::vector<ValuemetricTransform>& valuemetric) {
  TransformRecord rec;
  rec.geometric = geometric;
  rec.valuemetric = valuemetric;
  Image cur = img;
  for (const auto& t : geometric) {
    auto [next, h] = apply_geometric(cur, t);
    cur = std::move(next);
    rec.total = compose(h, rec.total);
  }
  for (const auto& t : valuemetric) cur = apply_valuemetric(cur, t);
  rec.gt_quad = to_quad(rec.total);
  return {std::move(cur), std::move(rec)};
}

std::pair<Image, TransformRecord> augment_pipeline(const Image& img, Rng& rng, int n_geo,
                                                   int n_val,
                                                   const GeometricRanges& geo_ranges,
                                                   const ValuemetricRanges& val_ranges) {
  auto geometric = sample_geometric(rng, n_geo, geo_ranges);
  std::vector<ValuemetricTransform> valuemetric;
  for (int i = 0; i < n_val; ++i) valuemetric.push_back(sample_valuemetric(rng, val_ranges));
  return apply_sequence(img, geometric, valuemetric);
}

// ---------------------------------------------------------------------------
// JSON

using nlohmann::json;

json to_json(const GeometricTransform& t) {
  return std::visit(
      overloaded{[](const geo::Identity&) -> json { return {{"identity", true}}; },
                 [](const geo::HFlip&) -> json { return {{"hflip", true}}; },
                 [](const geo::Rotation& r) -> json { return {{"rotate", r.degrees}}; },
                 [](const geo::Crop& c) -> json {
                   return {{"crop", {c.x0, c.y0, c.x1, c.y1}}};
                 },
                 [](const geo::Perspective& p) -> json {
                   return {{"perspective", {{"scale", p.scale}, {"offsets", p.offsets}}}};
                 }},
      t);
}

json to_json(const ValuemetricTransform& t) {
  return std::visit(
      overloaded{[](const val::Identity&) -> json { return {{"identity", true}}; },
                 [](const val::Grayscale&) -> json { return {{"grayscale", true}}; },
                 [](const val::Brightness& b) -> json { return {{"brightness", b.factor}}; },
                 [](const val::Contrast& c) -> json { return {{"contrast", c.factor}}; },
                 [](const val::Saturation& s) -> json { return {{"saturation", s.factor}}; },
                 [](const val::Hue& h) -> json { return {{"hue", h.shift}}; },
                 [](const val::GaussianBlur& b) -> json { return {{"blur", b.kernel}}; },
                 [](const val::Jpeg& j) -> json { return {{"jpeg", j.quality}}; }},
      t);
}

namespace {

double number(const json& v, const std::string& key) {
  if (!v.is_number()) throw InvalidTransform("\"" + key + "\" expects a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw InvalidTransform("\"" + key + "\" expects an integer");
  return v.get<int>();
}

bool flag(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw InvalidTransform("\"" + key + "\" expects true");
  return v.get<bool>();
}

AnyTransform parse_item(const json& item, Rng& rng, bool valuemetric_identity) {
  std::string key;
  json value = true;
  if (item.is_string()) {
    key = item.get<std::string>();
  } else if (item.is_object() && item.size() == 1) {
    key = item.begin().key();
    value = item.begin().value();
  } else {
    throw InvalidTransform("transform item must be a string or a one-key object: " +
                           item.dump());
  }

  AnyTransform out;
  if (key == "identity") {
    if (!flag(value, key)) throw InvalidTransform("\"identity\" expects true");
    if (valuemetric_identity) {
      out = ValuemetricTransform{val::Identity{}};
    } else {
      out = GeometricTransform{geo::Identity{}};
    }
  } else if (key == "hflip") {
    out = flag(value, key) ? GeometricTransform{geo::HFlip{}}
                           : GeometricTransform{geo::Identity{}};
  } else if (key == "rotate") {
    out = GeometricTransform{geo::Rotation{number(value, key)}};
  } else if (key == "crop") {
    if (value.is_number()) {
      out = GeometricTransform{centered_crop(value.get<double>())};
    } else if (value.is_array() && value.size() == 4) {
      out = GeometricTransform{geo::Crop{number(value[0], key), number(value[1], key),
                                         number(value[2], key), number(value[3], key)}};
    } else {
      throw InvalidTransform("\"crop\" expects [x0, y0, x1, y1] or an area fraction");
    }
  } else if (key == "perspective") {
    if (value.is_number()) {
      out = GeometricTransform{random_perspective(rng, value.get<double>())};
    } else if (value.is_object()) {
      geo::Perspective p;
      p.scale = number(value.at("scale"), "scale");
      const auto& o = value.at("offsets");
      if (!o.is_array() || o.size() != 4)
        throw InvalidTransform("perspective offsets must hold four [dx, dy] pairs");
      for (int i = 0; i < 4; ++i) {
        if (!o[i].is_array() || o[i].size() != 2)
          throw InvalidTransform("perspective offsets must hold four [dx, dy] pairs");
        p.offsets[i] = {number(o[i][0], "offsets"), number(o[i][1], "offsets")};
      }
      out = GeometricTransform{p};
    } else {
      throw InvalidTransform("\"perspective\" expects a scale or {scale, offsets}");
    }
  } else if (key == "brightness") {
    out = ValuemetricTransform{val::Brightness{number(value, key)}};
  } else if (key == "contrast") {
    out = ValuemetricTransform{val::Contrast{number(value, key)}};
  } else if (key == "saturation") {
    out = ValuemetricTransform{val::Saturation{number(value, key)}};
  } else if (key == "hue") {
    out = ValuemetricTransform{val::Hue{number(value, key)}};
  } else if (key == "grayscale") {
    out = flag(value, key) ? ValuemetricTransform{val::Grayscale{}}
                           : ValuemetricTransform{val::Identity{}};
  } else if (key == "blur") {
    out = ValuemetricTransform{val::GaussianBlur{integer(value, key)}};
  } else if (key == "jpeg") {
    out = ValuemetricTransform{val::Jpeg{integer(value, key)}};
  } else {
    throw InvalidTransform("unknown transform \"" + key + "\"");
  }
  std::visit([](const auto& t) { validate(t); }, out);
  return out;
}

}  // namespace

AnyTransform parse_transform(const json& item, Rng& rng) { return parse_item(item, rng, false); }

std::vector<AnyTransform> parse_transform_spec(const std::string& text, Rng& rng) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) j = json(text);  // bare word such as `hflip`
  std::vector<AnyTransform> out;
  if (j.is_array()) {
    for (const auto& item : j) out.push_back(parse_transform(item, rng));
  } else {
    out.push_back(parse_transform(j, rng));
  }
  return out;
}

std::pair<std::vector<GeometricTransform>, std::vector<ValuemetricTransform>> split_spec(
    const std::vector<AnyTransform>& spec) {
  std::vector<GeometricTransform> g;
  std::vector<ValuemetricTransform> v;
  for (const auto& t : spec) {
    if (const auto* gt = std::get_if<GeometricTransform>(&t)) {
      if (!v.empty())
        throw InvalidTransform("geometric transforms must come before valuemetric ones");
      g.push_back(*gt);
    } else {
      v.push_back(std::get<ValuemetricTransform>(t));
    }
  }
  return {std::move(g), std::move(v)};
}

json to_json(const TransformRecord& r) {
  json geo_list = json::array(), val_list = json::array();
  for (const auto& t : r.geometric) geo_list.push_back(to_json(t));
  for (const auto& t : r.valuemetric) val_list.push_back(to_json(t));
  return {{"geometric", geo_list},
          {"valuemetric", val_list},
          {"gt_quad", r.gt_quad},
          {"matrix", r.total.matrix()}};
}

TransformRecord record_from_json(const json& j) {
  TransformRecord r;
  Rng unused(0);
  for (const auto& item : j.at("geometric")) {
    auto t = parse_item(item, unused, false);
    if (!std::holds_alternative<GeometricTransform>(t))
      throw InvalidTransform("valuemetric item in the geometric list: " + item.dump());
    r.geometric.push_back(std::get<GeometricTransform>(t));
  }
  for (const auto& item : j.at("valuemetric")) {
    auto t = parse_item(item, unused, true);
    if (!std::holds_alternative<ValuemetricTransform>(t))
      throw InvalidTransform("geometric item in the valuemetric list: " + item.dump());
    r.valuemetric.push_back(std::get<ValuemetricTransform>(t));
  }
  r.total = homography_from_json(j);
  r.gt_quad = j.at("gt_quad").get<CornerQuad>();
  return r;
}

}  // namespace syncforge
