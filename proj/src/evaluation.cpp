#include "syncforge/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "syncforge/errors.hpp"
#include "syncforge/pipeline.hpp"

namespace syncforge {

using nlohmann::json;

double corner_error_px(const CornerQuad& pred, const CornerQuad& gt, int eval_w, int eval_h) {
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double dx = (pred.p[i].x - gt.p[i].x) * eval_w / 2.0;
    const double dy = (pred.p[i].y - gt.p[i].y) * eval_h / 2.0;
    acc += std::hypot(dx, dy);
  }
  return acc / 4.0;
}

double pairwise_mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const std::function<double(std::size_t, std::size_t)> sum = [&](std::size_t lo, std::size_t hi) {
    if (hi - lo <= 8) {
      double s = 0.0;
      for (std::size_t i = lo; i < hi; ++i) s += v[i];
      return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return sum(lo, mid) + sum(mid, hi);
  };
  return sum(0, v.size()) / static_cast<double>(v.size());
}

// ---------------------------------------------------------------------------
// Condition labels

namespace {

std::pair<std::string, std::optional<double>> split_label(const std::string& label) {
  std::istringstream in(label);
  std::string head, num, extra;
  in >> head >> num >> extra;
  if (!extra.empty()) throw InvalidInput("bad condition label '" + label + "'");
  if (num.empty()) return {head, std::nullopt};
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(num, &used);
  } catch (const std::exception&) {
    throw InvalidInput("bad number in condition label '" + label + "'");
  }
  if (used != num.size()) throw InvalidInput("bad number in condition label '" + label + "'");
  return {head, v};
}

std::uint64_t label_hash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

double need(const std::optional<double>& v, const std::string& label) {
  if (!v) throw InvalidInput("condition '" + label + "' needs a parameter");
  return *v;
}

}  // namespace

GeometricCondition geometric_condition(const std::string& label) {
  const auto [head, v] = split_label(label);
  GeometricCondition c{label, {}};
  if (head == "Identity" && !v) {
    c.make = [](Rng&) -> GeometricTransform { return geo::Identity{}; };
  } else if (head == "HFlip" && !v) {
    c.make = [](Rng&) -> GeometricTransform { return geo::HFlip{}; };
  } else if (head == "Rot") {
    const double deg = need(v, label);
    c.make = [deg](Rng&) -> GeometricTransform { return geo::Rotation{deg}; };
  } else if (head == "Crop") {
    const geo::Crop crop = centered_crop(need(v, label));
    c.make = [crop](Rng&) -> GeometricTransform { return crop; };
  } else if (head == "Persp") {
    const double s = need(v, label);
    if (!(s >= 0 && s < 1)) throw InvalidTransform("perspective scale must lie in [0, 1)");
    c.make = [s](Rng& rng) -> GeometricTransform { return random_perspective(rng, s); };
  } else {
    throw InvalidInput("unknown geometric condition '" + label + "'");
  }
  Rng probe(0);
  validate(c.make(probe));
  return c;
}

ValuemetricCondition valuemetric_condition(const std::string& label) {
  const auto [head, v] = split_label(label);
  ValuemetricCondition c{label, val::Identity{}};
  if (head == "Identity" && !v) c.transform = val::Identity{};
  else if (head == "Gray" && !v) c.transform = val::Grayscale{};
  else if (head == "Hue") c.transform = val::Hue{need(v, label)};
  else if (head == "Bright") c.transform = val::Brightness{need(v, label)};
  else if (head == "Contr") c.transform = val::Contrast{need(v, label)};
  else if (head == "Sat") c.transform = val::Saturation{need(v, label)};
  else if (head == "JPEG") c.transform = val::Jpeg{static_cast<int>(need(v, label))};
  else if (head == "Blur") c.transform = val::GaussianBlur{static_cast<int>(need(v, label))};
  else throw InvalidInput("unknown valuemetric condition '" + label + "'");
  validate(c.transform);
  return c;
}

std::vector<GeometricCondition> default_geometric_conditions() {
  std::vector<GeometricCondition> out;
  for (const char* l : {"Identity", "HFlip", "Rot 5", "Rot 90", "Crop 0.5", "Crop 0.9", "Persp 0.3"})
    out.push_back(geometric_condition(l));
  return out;
}

std::vector<ValuemetricCondition> default_valuemetric_conditions() {
  std::vector<ValuemetricCondition> out;
  for (const char* l : {"Identity", "Gray", "Hue 0.1", "Bright 0.5", "Bright 2.0", "Contr 0.5",
                        "Contr 2.0", "JPEG 40", "Blur 9"})
    out.push_back(valuemetric_condition(l));
  return out;
}

// ---------------------------------------------------------------------------
// Grid

namespace {

Rng condition_rng(const GeometricCondition& col, std::uint64_t seed, std::size_t index) {
  return Rng::derive(seed, index, label_hash(col.name));
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double population_std(const std::vector<double>& v, double mean) {
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
  return std::sqrt(pairwise_mean(sq));
}

}  // namespace

CornerQuad condition_gt_quad(const GeometricCondition& col, std::uint64_t seed,
                             std::size_t index) {
  Rng rng = condition_rng(col, seed, index);
  return to_quad(homography(col.make(rng)));
}

RobustnessGrid robustness_grid(nn::ModelBundle& model, const std::vector<Image>& images,
                               const std::vector<ValuemetricCondition>& rows,
                               const std::vector<GeometricCondition>& cols,
                               const GridConfig& cfg) {
  if (images.empty()) throw InvalidInput("robustness grid needs at least one test image");
  if (rows.empty() || cols.empty()) throw InvalidInput("robustness grid needs conditions");
  if (cfg.eval_h < 8 || cfg.eval_w < 8) throw InvalidInput("evaluation size must be at least 8");
  const std::size_t nr = rows.size(), nc = cols.size(), n = images.size();
  // errors[cell][image]
  std::vector<std::vector<double>> errors(nr * nc, std::vector<double>(n, 0.0));

  parallel_for(n, cfg.threads, [&](std::size_t i) {
    if (images[i].channels() != 3) throw InvalidInput("test images must be RGB");
    const Image img = resize_bilinear(images[i], cfg.eval_h, cfg.eval_w);
    const Image wm = watermark(model, img);
    std::vector<Image> variants;
    std::vector<CornerQuad> gts;
    for (std::size_t c = 0; c < nc; ++c) {
      Rng rng = condition_rng(cols[c], cfg.seed, i);
      const auto [geo_img, h] = apply_geometric(wm, cols[c].make(rng));
      gts.push_back(to_quad(h));
      for (std::size_t r = 0; r < nr; ++r)
        variants.push_back(apply_valuemetric(geo_img, rows[r].transform));
    }
    const auto preds = extract_quads(model, variants);
    for (std::size_t c = 0; c < nc; ++c)
      for (std::size_t r = 0; r < nr; ++r)
        errors[r * nc + c][i] =
            corner_error_px(preds[c * nr + r], gts[c], cfg.eval_w, cfg.eval_h);
  });

  RobustnessGrid g;
  for (const auto& r : rows) g.rows.push_back(r.name);
  for (const auto& c : cols) g.cols.push_back(c.name);
  g.eval_h = cfg.eval_h;
  g.eval_w = cfg.eval_w;
  g.images = n;
  for (std::size_t k = 0; k < nr * nc; ++k) {
    const double m = pairwise_mean(errors[k]);
    g.mean.push_back(m);
    g.stddev.push_back(population_std(errors[k], m));
  }
  for (std::size_t r = 0; r < nr; ++r)
    g.row_avg.push_back(pairwise_mean({g.mean.begin() + r * nc, g.mean.begin() + (r + 1) * nc}));
  for (std::size_t c = 0; c < nc; ++c) {
    std::vector<double> col;
    for (std::size_t r = 0; r < nr; ++r) col.push_back(g.mean[r * nc + c]);
    g.col_avg.push_back(pairwise_mean(col));
  }
  g.overall = pairwise_mean(g.mean);
  return g;
}

// ---------------------------------------------------------------------------
// Grid I/O

namespace {

constexpr const char* kAverage = "Average";

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_num(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw InvalidInput("bad number '" + s + "' in " + where);
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void write_grid_csv(const RobustnessGrid& g, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << "eval_h," << g.eval_h << "\neval_w," << g.eval_w << "\nimages," << g.images << '\n';
  f << "valuemetric,geometric,mean,std\n";
  const std::size_t nc = g.cols.size();
  for (std::size_t r = 0; r < g.rows.size(); ++r)
    for (std::size_t c = 0; c < nc; ++c)
      f << g.rows[r] << ',' << g.cols[c] << ',' << num(g.mean[r * nc + c]) << ','
        << num(g.stddev[r * nc + c]) << '\n';
  for (std::size_t r = 0; r < g.rows.size(); ++r)
    f << g.rows[r] << ',' << kAverage << ',' << num(g.row_avg[r]) << ",\n";
  for (std::size_t c = 0; c < nc; ++c)
    f << kAverage << ',' << g.cols[c] << ',' << num(g.col_avg[c]) << ",\n";
  f << kAverage << ',' << kAverage << ',' << num(g.overall) << ",\n";
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

RobustnessGrid read_grid_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  const std::string where = "grid file '" + path.string() + "'";
  RobustnessGrid g;
  std::string line;
  bool in_cells = false;
  struct Cell {
    std::string row, col;
    double mean, std;
  };
  std::vector<Cell> cells;
  std::vector<std::pair<std::string, double>> row_avg, col_avg;
  bool have_overall = false;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto parts = split_csv(line);
    if (!in_cells) {
      if (parts.size() == 4 && parts[0] == "valuemetric") {
        in_cells = true;
        continue;
      }
      if (parts.size() != 2) throw InvalidInput("malformed header line in " + where);
      const double v = parse_num(parts[1], where);
      if (parts[0] == "eval_h") g.eval_h = static_cast<int>(v);
      else if (parts[0] == "eval_w") g.eval_w = static_cast<int>(v);
      else if (parts[0] == "images") g.images = static_cast<std::size_t>(v);
      else throw InvalidInput("unknown header key '" + parts[0] + "' in " + where);
      continue;
    }
    if (parts.size() != 4) throw InvalidInput("malformed row in " + where);
    const bool ra = parts[0] == kAverage, ca = parts[1] == kAverage;
    const double m = parse_num(parts[2], where);
    if (ra && ca) {
      g.overall = m;
      have_overall = true;
    } else if (ca) {
      row_avg.emplace_back(parts[0], m);
    } else if (ra) {
      col_avg.emplace_back(parts[1], m);
    } else {
      cells.push_back({parts[0], parts[1], m, parse_num(parts[3], where)});
    }
  }
  if (!in_cells || !have_overall) throw InvalidInput("incomplete " + where);
  for (const auto& c : cells) {
    if (std::find(g.rows.begin(), g.rows.end(), c.row) == g.rows.end()) g.rows.push_back(c.row);
    if (std::find(g.cols.begin(), g.cols.end(), c.col) == g.cols.end()) g.cols.push_back(c.col);
  }
  const std::size_t nr = g.rows.size(), nc = g.cols.size();
  if (cells.size() != nr * nc || row_avg.size() != nr || col_avg.size() != nc) {
    throw InvalidInput("grid cells are incomplete in " + where);
  }
  g.mean.assign(nr * nc, 0.0);
  g.stddev.assign(nr * nc, 0.0);
  for (const auto& c : cells) {
    const auto r = std::find(g.rows.begin(), g.rows.end(), c.row) - g.rows.begin();
    const auto k = std::find(g.cols.begin(), g.cols.end(), c.col) - g.cols.begin();
    g.mean[r * nc + k] = c.mean;
    g.stddev[r * nc + k] = c.std;
  }
  for (std::size_t r = 0; r < nr; ++r) {
    if (row_avg[r].first != g.rows[r]) throw InvalidInput("row averages out of order in " + where);
    g.row_avg.push_back(row_avg[r].second);
  }
  for (std::size_t c = 0; c < nc; ++c) {
    if (col_avg[c].first != g.cols[c]) throw InvalidInput("column averages out of order in " + where);
    g.col_avg.push_back(col_avg[c].second);
  }
  return g;
}

json to_json(const RobustnessGrid& g) {
  json cells = json::array();
  const std::size_t nc = g.cols.size();
  for (std::size_t r = 0; r < g.rows.size(); ++r)
    for (std::size_t c = 0; c < nc; ++c)
      cells.push_back({{"valuemetric", g.rows[r]},
                       {"geometric", g.cols[c]},
                       {"mean", g.mean[r * nc + c]},
                       {"std", g.stddev[r * nc + c]}});
  return {{"eval_h", g.eval_h}, {"eval_w", g.eval_w}, {"images", g.images},
          {"rows", g.rows},     {"cols", g.cols},     {"cells", cells},
          {"row_avg", g.row_avg}, {"col_avg", g.col_avg}, {"overall", g.overall}};
}

std::string grid_file_name(const std::filesystem::path& checkpoint, std::uint64_t seed) {
  return "grid_" + checkpoint.stem().string() + "_" + std::to_string(seed) + ".csv";
}

// ---------------------------------------------------------------------------

QualityAggregate quality_table(nn::ModelBundle& model, const std::vector<Image>& images) {
  using clock = std::chrono::steady_clock;
  if (images.empty()) throw InvalidInput("quality table needs at least one image");
  std::vector<double> p, s, te, tx;
  for (const Image& img : images) {
    const auto t0 = clock::now();
    const Image wm = watermark(model, img);
    const auto t1 = clock::now();
    (void)extract_quad(model, wm);
    const auto t2 = clock::now();
    const QualityReport q = quality(img, wm);
    p.push_back(q.psnr);
    s.push_back(q.ssim);
    te.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    tx.push_back(std::chrono::duration<double, std::milli>(t2 - t1).count());
  }
  return {pairwise_mean(p), pairwise_mean(s), pairwise_mean(te), pairwise_mean(tx), images.size()};
}

json to_json(const QualityAggregate& q) {
  return {{"psnr", q.psnr},
          {"ssim", q.ssim},
          {"embed_ms", q.embed_ms},
          {"extract_ms", q.extract_ms},
          {"images", q.images}};
}

WrapResult wrap_and_restore(nn::ModelBundle& model, const Image& primary,
                            const GeometricTransform& transform) {
  WrapResult r;
  r.watermarked = watermark(model, primary);
  auto [transformed, h] = apply_geometric(r.watermarked, transform);
  r.transformed = std::move(transformed);
  r.gt = to_quad(h);
  SyncResult s = synchronize(model, r.transformed);
  r.predicted = s.quad;
  r.corner_error = corner_error_px(s.quad, r.gt, primary.width(), primary.height());
  r.ok = s.ok;
  r.message = s.message;
  r.restored = std::move(s.restored);
  return r;
}

}  // namespace syncforge
