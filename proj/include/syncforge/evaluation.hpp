#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "syncforge/augment.hpp"
#include "syncforge/geometry.hpp"
#include "syncforge/nn/models.hpp"

namespace syncforge {

/// Mean over the four corners of the Euclidean distance, with normalized
/// offsets scaled by (eval_w / 2, eval_h / 2) into pixels.
double corner_error_px(const CornerQuad& pred, const CornerQuad& gt, int eval_w, int eval_h);

/// A grid column. `make` draws the transform for one image (only random
/// perspectives use the generator).
struct GeometricCondition {
  std::string name;
  std::function<GeometricTransform(Rng&)> make;
};

/// A grid row.
struct ValuemetricCondition {
  std::string name;
  ValuemetricTransform transform;
};

/// Parse a column label: "Identity", "HFlip", "Rot <deg>", "Crop <area>",
/// "Persp <scale>".
GeometricCondition geometric_condition(const std::string& label);
/// Parse a row label: "Identity", "Gray", "Hue <shift>", "Bright <f>",
/// "Contr <f>", "Sat <f>", "JPEG <q>", "Blur <k>".
ValuemetricCondition valuemetric_condition(const std::string& label);

std::vector<GeometricCondition> default_geometric_conditions();
std::vector<ValuemetricCondition> default_valuemetric_conditions();

struct GridConfig {
  int eval_h = 64;
  int eval_w = 64;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct RobustnessGrid {
  std::vector<std::string> rows;  ///< valuemetric condition names
  std::vector<std::string> cols;  ///< geometric condition names
  std::vector<double> mean;       ///< rows x cols, row-major
  std::vector<double> stddev;     ///< over images (population)
  std::vector<double> row_avg;    ///< mean over columns of each row
  std::vector<double> col_avg;    ///< mean over rows of each column
  double overall = 0.0;
  int eval_h = 0, eval_w = 0;
  std::size_t images = 0;

  double cell(std::size_t r, std::size_t c) const { return mean[r * cols.size() + c]; }
  friend bool operator==(const RobustnessGrid&, const RobustnessGrid&) = default;
};

/// Per image: resize to the evaluation size, embed, apply each geometric
/// condition (exact GT quad), then each valuemetric condition, extract, and
/// score with corner_error_px. Deterministic for a given seed regardless of
/// the thread count.
RobustnessGrid robustness_grid(nn::ModelBundle& model, const std::vector<Image>& images,
                               const std::vector<ValuemetricCondition>& rows,
                               const std::vector<GeometricCondition>& cols,
                               const GridConfig& cfg);

/// Ground-truth quad of one grid column for image `index`.
CornerQuad condition_gt_quad(const GeometricCondition& col, std::uint64_t seed,
                             std::size_t index);

void write_grid_csv(const RobustnessGrid& grid, const std::filesystem::path& path);
RobustnessGrid read_grid_csv(const std::filesystem::path& path);
nlohmann::json to_json(const RobustnessGrid& grid);

/// "grid_<checkpoint stem>_<seed>.csv"
std::string grid_file_name(const std::filesystem::path& checkpoint, std::uint64_t seed);

struct QualityAggregate {
  double psnr = 0.0;
  double ssim = 0.0;
  double embed_ms = 0.0;
  double extract_ms = 0.0;
  std::size_t images = 0;
};

/// Mean PSNR/SSIM of watermarked vs original and mean wall-clock latency.
QualityAggregate quality_table(nn::ModelBundle& model, const std::vector<Image>& images);
nlohmann::json to_json(const QualityAggregate& q);

struct WrapResult {
  Image watermarked;  ///< input plus the sync watermark
  Image transformed;
  Image restored;
  CornerQuad predicted;
  CornerQuad gt;
  double corner_error = 0.0;  ///< pixels at the image resolution
  bool ok = false;            ///< false when the predicted quad is degenerate
  std::string message;
};

/// Embed the sync watermark on top of `primary`, apply `transform`, predict
/// the quad, and warp back into the original frame.
WrapResult wrap_and_restore(nn::ModelBundle& model, const Image& primary,
                            const GeometricTransform& transform);

/// Mean by pairwise summation over a fixed split tree.
double pairwise_mean(const std::vector<double>& v);

}  // namespace syncforge
