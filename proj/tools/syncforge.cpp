// Command-line front end: embed, extract, sync, augment, train, eval-grid,
// eval-quality, wrap-demo. Exit codes: 0 success, 1 usage error, 2 runtime
// failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "syncforge/augment.hpp"
#include "syncforge/config.hpp"
#include "syncforge/errors.hpp"
#include "syncforge/evaluation.hpp"
#include "syncforge/nn/checkpoint.hpp"
#include "syncforge/pipeline.hpp"
#include "syncforge/png_io.hpp"
#include "syncforge/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace syncforge;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flag values; unset flags leave the config file (or default) in charge.
struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> input, output, model, dataset, emit_gt, resume, log, spec;
  std::optional<double> alpha;
  std::optional<int> proc_size;
  std::optional<int> iterations, batch, adv_start, n_geo, n_val, checkpoint_every;
  std::optional<double> lr, lambda_adv, weight_decay, grad_clip;
  std::optional<std::string> augment_mode;
  std::optional<int> eval_size;
  std::vector<std::string> rows, cols, transforms, geo_variants;
  std::vector<double> rotation_angles;
};

void add_common(CLI::App* c, Flags& f) {
  c->add_option("-c,--config", f.config, "JSON config file (flags override it)");
  c->add_option("--seed", f.seed, "Random seed [config: seed]");
}

void add_model(CLI::App* c, Flags& f) {
  c->add_option("-m,--model", f.model, "Model checkpoint [config: paths.model]");
}

void add_embed_flags(CLI::App* c, Flags& f) {
  c->add_option("--alpha", f.alpha, "Watermark strength alpha_w [config: embed.alpha_w]");
  c->add_option("--proc-size", f.proc_size,
                "Processing resolution, square [config: embed.proc_h, embed.proc_w]");
}

void add_train_flags(CLI::App* c, Flags& f) {
  c->add_option("--iterations", f.iterations, "Training iterations [config: train.iterations]");
  c->add_option("--batch", f.batch, "Batch size [config: train.batch]");
  c->add_option("--lr", f.lr, "AdamW learning rate [config: train.lr]");
  c->add_option("--weight-decay", f.weight_decay, "AdamW weight decay [config: train.weight_decay]");
  c->add_option("--grad-clip", f.grad_clip, "Global gradient-norm clip [config: train.grad_clip]");
  c->add_option("--lambda-adv", f.lambda_adv, "Adversarial loss weight [config: train.lambda_adv]");
  c->add_option("--adv-start", f.adv_start,
                "Iteration where the adversarial term starts [config: train.adv_start_iter]");
  c->add_option("--n-geo", f.n_geo, "Geometric augmentations per sample [config: train.n_geo]");
  c->add_option("--geo-variants", f.geo_variants,
                "Geometric variants to sample: identity crop hflip rotation perspective "
                "[config: train.geo_variants]");
  c->add_option("--rotation-angles", f.rotation_angles,
                "Sample rotations from these angles instead of the continuous range "
                "[config: train.rotation_angles]");
  c->add_option("--n-val", f.n_val, "Valuemetric augmentations per sample [config: train.n_val]");
  c->add_option("--checkpoint-every", f.checkpoint_every,
                "Iterations between checkpoints, 0 = final only [config: train.checkpoint_every]");
  c->add_option("--augment-mode", f.augment_mode, "full or identity [config: train.augment]")
      ->check(CLI::IsMember({"full", "identity"}));
  c->add_option("--resume", f.resume, "Resume from this checkpoint [config: paths.resume]");
  c->add_option("--log", f.log, "Loss log CSV path [config: paths.log]");
}

void add_eval_flags(CLI::App* c, Flags& f) {
  c->add_option("--threads", f.threads, "Worker threads [config: threads]");
  c->add_option("--eval-size", f.eval_size,
                "Evaluation resolution, square [config: eval.eval_h, eval.eval_w]");
}

GlobalConfig resolve(const Flags& f) {
  GlobalConfig c;
  if (!f.config.empty()) {
    if (!fs::exists(f.config)) throw IoError("config file '" + f.config + "' does not exist");
    c = load_config(f.config);
  }
  if (f.seed) c.seed = c.train.seed = *f.seed;
  if (f.threads) c.threads = *f.threads;
  if (f.input) c.paths.input = *f.input;
  if (f.output) c.paths.output = *f.output;
  if (f.model) c.paths.model = *f.model;
  if (f.dataset) c.paths.dataset = *f.dataset;
  if (f.emit_gt) c.paths.emit_gt = *f.emit_gt;
  if (f.resume) c.paths.resume = *f.resume;
  if (f.log) c.paths.log = *f.log;
  if (f.spec) c.spec = *f.spec;
  if (f.alpha) c.embed.alpha_w = *f.alpha;
  if (f.proc_size) c.embed.proc_h = c.embed.proc_w = *f.proc_size;
  if (f.iterations) c.train.iterations = *f.iterations;
  if (f.batch) c.train.batch = *f.batch;
  if (f.lr) c.train.lr = *f.lr;
  if (f.weight_decay) c.train.weight_decay = *f.weight_decay;
  if (f.grad_clip) c.train.grad_clip = *f.grad_clip;
  if (f.lambda_adv) c.train.lambda_adv = *f.lambda_adv;
  if (f.adv_start) c.train.adv_start_iter = *f.adv_start;
  if (f.n_geo) c.train.n_geo = *f.n_geo;
  if (!f.geo_variants.empty()) c.train.geo_ranges.variants = f.geo_variants;
  if (!f.rotation_angles.empty()) c.train.geo_ranges.rotation_angles = f.rotation_angles;
  if (f.n_val) c.train.n_val = *f.n_val;
  if (f.checkpoint_every) c.train.checkpoint_every = *f.checkpoint_every;
  if (f.augment_mode) {
    c.train.augment = *f.augment_mode == "identity" ? AugmentMode::Identity : AugmentMode::Full;
  }
  if (f.eval_size) c.eval.eval_h = c.eval.eval_w = *f.eval_size;
  if (!f.rows.empty()) c.eval.rows = f.rows;
  if (!f.cols.empty()) c.eval.cols = f.cols;
  if (!f.transforms.empty()) c.eval.transforms = f.transforms;
  c.validate();
  return c;
}

const std::string& need(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string("missing required option ") + flag);
  return value;
}

const std::string& need_file(const std::string& value, const char* flag) {
  need(value, flag);
  if (!fs::is_regular_file(value)) throw IoError("file '" + value + "' does not exist");
  return value;
}

const std::string& need_dir(const std::string& value, const char* flag) {
  need(value, flag);
  if (!fs::is_directory(value)) throw IoError("directory '" + value + "' does not exist");
  return value;
}

nn::ModelBundle load_model(const GlobalConfig& c) {
  return nn::load_checkpoint(need_file(c.paths.model, "-m/--model"));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << text;
}

std::vector<Image> read_dir(const std::string& dir) {
  std::vector<Image> out;
  for (const auto& p : list_pngs(dir)) out.push_back(read_png(p));
  if (out.empty()) throw IoError("no PNG images in '" + dir + "'");
  return out;
}

json quad_json(const CornerQuad& q) {
  json out = {{"quad", q}};
  try {
    out["matrix"] = homography_json(from_quad(q))["matrix"];
  } catch (const Error&) {
    out["matrix"] = nullptr;
    out["degenerate"] = true;
  }
  return out;
}

// ---------------------------------------------------------------------------

int cmd_embed(const GlobalConfig& c) {
  auto model = load_model(c);
  const Image img = read_png(need_file(c.paths.input, "-i/--input"));
  const Image out = quantize8(watermark(model, img));
  write_png(need(c.paths.output, "-o/--output"), out);
  const QualityReport q = quality(img, out);
  std::cout << json{{"output", c.paths.output}, {"psnr", q.psnr}, {"ssim", q.ssim}}.dump() << '\n';
  return 0;
}

int cmd_extract(const GlobalConfig& c) {
  auto model = load_model(c);
  const Image img = read_png(need_file(c.paths.input, "-i/--input"));
  std::cout << quad_json(extract_quad(model, img)).dump() << '\n';
  return 0;
}

int cmd_sync(const GlobalConfig& c) {
  auto model = load_model(c);
  const Image img = read_png(need_file(c.paths.input, "-i/--input"));
  const std::string& out = need(c.paths.output, "-o/--output");
  const SyncResult r = synchronize(model, img);
  if (!r.ok) throw Error("predicted quad is degenerate, cannot resynchronize: " + r.message);
  write_png(out, r.restored);
  std::cout << quad_json(r.quad).dump() << '\n';
  return 0;
}

int cmd_augment(const GlobalConfig& c) {
  const Image img = read_png(need_file(c.paths.input, "-i/--input"));
  const std::string& out = need(c.paths.output, "-o/--output");
  Rng rng(c.seed);
  const auto parsed = parse_transform_spec(need(c.spec, "--spec"), rng);
  const auto [geometric, valuemetric] = split_spec(parsed);
  const auto [result, record] = apply_sequence(img, geometric, valuemetric);
  write_png(out, result);
  const json gt = to_json(record);
  if (!c.paths.emit_gt.empty()) write_text(c.paths.emit_gt, gt.dump(2) + "\n");
  std::cout << json{{"gt_quad", gt["gt_quad"]}}.dump() << '\n';
  return 0;
}

int cmd_train(const GlobalConfig& c) {
  const std::string& dir = need_dir(c.paths.dataset, "-d/--dataset");
  const std::string& out = need(c.paths.output, "-o/--output");
  const auto data = load_dataset(dir, c.embed);
  TrainOptions opt;
  if (!c.paths.resume.empty()) opt.resume = need_file(c.paths.resume, "--resume");
  if (!c.paths.log.empty()) opt.log_path = c.paths.log;
  const int every = std::max(1, c.train.iterations / 20);
  opt.on_step = [every](int it, const LossReport& r) {
    if (it % every == 0 || r.skipped) {
      std::fprintf(stderr, "iter %d sync %.4f adv %.4f disc %.4f%s\n", it, r.sync, r.adv, r.disc,
                   r.skipped ? (" skipped: " + r.skip_reason).c_str() : "");
    }
  };
  const TrainResult res = train(data, c.train, c.embed, out, opt);
  std::cout << json{{"checkpoint", out},
                    {"log", res.log_path.string()},
                    {"iterations", res.iterations_run},
                    {"sync", res.last.sync},
                    {"adv", res.last.adv},
                    {"disc", res.last.disc},
                    {"total", res.last.total}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_eval_grid(const GlobalConfig& c) {
  auto model = load_model(c);
  const auto images = read_dir(need_dir(c.paths.dataset, "-d/--dataset"));
  std::vector<ValuemetricCondition> rows;
  std::vector<GeometricCondition> cols;
  if (c.eval.rows.empty()) rows = default_valuemetric_conditions();
  for (const auto& l : c.eval.rows) rows.push_back(valuemetric_condition(l));
  if (c.eval.cols.empty()) cols = default_geometric_conditions();
  for (const auto& l : c.eval.cols) cols.push_back(geometric_condition(l));
  const RobustnessGrid g =
      robustness_grid(model, images, rows, cols, {c.eval.eval_h, c.eval.eval_w, c.seed, c.threads});
  const fs::path dir = c.paths.output.empty() ? fs::path(".") : fs::path(c.paths.output);
  fs::create_directories(dir);
  const fs::path csv = dir / grid_file_name(c.paths.model, c.seed);
  write_grid_csv(g, csv);
  fs::path js = csv;
  js.replace_extension(".json");
  write_text(js, to_json(g).dump(2) + "\n");
  std::cout << json{{"csv", csv.string()}, {"json", js.string()}, {"overall", g.overall}}.dump()
            << '\n';
  return 0;
}

int cmd_eval_quality(const GlobalConfig& c) {
  auto model = load_model(c);
  const auto images = read_dir(need_dir(c.paths.dataset, "-d/--dataset"));
  const QualityAggregate q = quality_table(model, images);
  const fs::path dir = c.paths.output.empty() ? fs::path(".") : fs::path(c.paths.output);
  fs::create_directories(dir);
  const std::string stem = "quality_" + fs::path(c.paths.model).stem().string();
  write_text(dir / (stem + ".json"), to_json(q).dump(2) + "\n");
  char row[256];
  std::snprintf(row, sizeof row, "%.17g,%.17g,%.17g,%.17g,%zu\n", q.psnr, q.ssim, q.embed_ms,
                q.extract_ms, q.images);
  write_text(dir / (stem + ".csv"), std::string("psnr,ssim,embed_ms,extract_ms,images\n") + row);
  std::cout << to_json(q).dump() << '\n';
  return 0;
}

int cmd_wrap_demo(const GlobalConfig& c) {
  auto model = load_model(c);
  const std::string& in_dir = need_dir(c.paths.dataset, "-d/--dataset");
  const fs::path out_dir = need(c.paths.output, "-o/--output");
  fs::create_directories(out_dir);
  std::vector<std::string> specs = c.eval.transforms;
  if (specs.empty()) specs = {"identity", "hflip", R"({"rotate": 90})", R"({"crop": 0.7})"};

  json report = json::array();
  for (const auto& path : list_pngs(in_dir)) {
    const Image img = read_png(path);
    for (std::size_t k = 0; k < specs.size(); ++k) {
      Rng rng = Rng::derive(c.seed, k);
      const auto [geometric, valuemetric] = split_spec(parse_transform_spec(specs[k], rng));
      if (geometric.size() != 1 || !valuemetric.empty()) {
        throw UsageError("wrap-demo transforms must be single geometric steps: " + specs[k]);
      }
      const WrapResult r = wrap_and_restore(model, img, geometric.front());
      const std::string stem = path.stem().string() + "_t" + std::to_string(k);
      write_png(out_dir / (stem + "_transformed.png"), r.transformed);
      write_png(out_dir / (stem + "_restored.png"), r.restored);
      report.push_back({{"image", path.filename().string()},
                        {"transform", to_json(geometric.front())},
                        {"predicted", r.predicted},
                        {"gt", r.gt},
                        {"corner_error_px", r.corner_error},
                        {"restored", r.ok},
                        {"message", r.message},
                        {"psnr_restored_vs_watermarked",
                         r.ok ? psnr(r.watermarked, r.restored) : 0.0}});
    }
  }
  if (report.empty()) throw IoError("no PNG images in '" + in_dir + "'");
  write_text(out_dir / "report.json", report.dump(2) + "\n");
  std::cout << json{{"report", (out_dir / "report.json").string()}, {"cases", report.size()}}.dump()
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Watermark-based geometric synchronization: embed, extract, resync, train, evaluate."};
  app.require_subcommand(1);
  Flags f;

  auto* embed = app.add_subcommand("embed", "Embed the synchronization watermark");
  add_common(embed, f);
  add_model(embed, f);
  embed->add_option("-i,--input", f.input, "Input PNG [config: paths.input]");
  embed->add_option("-o,--output", f.output, "Output PNG [config: paths.output]");

  auto* extract = app.add_subcommand("extract", "Print the predicted corner quad as JSON");
  add_common(extract, f);
  add_model(extract, f);
  extract->add_option("-i,--input", f.input, "Input PNG [config: paths.input]");

  auto* sync = app.add_subcommand("sync", "Extract the quad and warp back to the original frame");
  add_common(sync, f);
  add_model(sync, f);
  sync->add_option("-i,--input", f.input, "Input PNG [config: paths.input]");
  sync->add_option("-o,--output", f.output, "Restored PNG [config: paths.output]");

  auto* augment = app.add_subcommand("augment", "Apply a JSON transform spec");
  add_common(augment, f);
  augment->add_option("-i,--input", f.input, "Input PNG [config: paths.input]");
  augment->add_option("-o,--output", f.output, "Output PNG [config: paths.output]");
  augment->add_option("--spec", f.spec, "Transform list, e.g. '[{\"rotate\": 90}]' [config: spec]");
  augment->add_option("--emit-gt", f.emit_gt, "Write the ground truth JSON here [config: paths.emit_gt]");

  auto* train_cmd = app.add_subcommand("train", "Train the embedder, extractor and discriminator");
  add_common(train_cmd, f);
  train_cmd->add_option("-d,--dataset", f.dataset, "Directory of PNG images [config: paths.dataset]");
  train_cmd->add_option("-o,--output", f.output, "Output checkpoint [config: paths.output]");
  add_embed_flags(train_cmd, f);
  add_train_flags(train_cmd, f);

  auto* grid = app.add_subcommand("eval-grid", "Robustness grid of corner errors");
  add_common(grid, f);
  add_model(grid, f);
  add_eval_flags(grid, f);
  grid->add_option("-d,--dataset", f.dataset, "Directory of test PNGs [config: paths.dataset]");
  grid->add_option("-o,--output", f.output, "Report directory [config: paths.output]");
  grid->add_option("--rows", f.rows, "Valuemetric labels, e.g. 'JPEG 40' [config: eval.rows]");
  grid->add_option("--cols", f.cols, "Geometric labels, e.g. 'Rot 90' [config: eval.cols]");

  auto* qual = app.add_subcommand("eval-quality", "PSNR, SSIM and latency of the embedding");
  add_common(qual, f);
  add_model(qual, f);
  add_eval_flags(qual, f);
  qual->add_option("-d,--dataset", f.dataset, "Directory of test PNGs [config: paths.dataset]");
  qual->add_option("-o,--output", f.output, "Report directory [config: paths.output]");

  auto* wrap = app.add_subcommand("wrap-demo", "Watermark, transform and restore a directory");
  add_common(wrap, f);
  add_model(wrap, f);
  wrap->add_option("-d,--dataset", f.dataset, "Directory of PNGs [config: paths.dataset]");
  wrap->add_option("-o,--output", f.output, "Output directory [config: paths.output]");
  wrap->add_option("--transform", f.transforms,
                   "Geometric transform spec, repeatable [config: eval.transforms]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "syncforge: " << e.what() << " (see --help)\n";
    return 1;
  }

  try {
    const GlobalConfig cfg = resolve(f);
    if (*embed) return cmd_embed(cfg);
    if (*extract) return cmd_extract(cfg);
    if (*sync) return cmd_sync(cfg);
    if (*augment) return cmd_augment(cfg);
    if (*train_cmd) return cmd_train(cfg);
    if (*grid) return cmd_eval_grid(cfg);
    if (*qual) return cmd_eval_quality(cfg);
    if (*wrap) return cmd_wrap_demo(cfg);
  } catch (const UsageError& e) {
    std::cerr << "syncforge: " << e.what() << " (see --help)\n";
    return 1;
  } catch (const InvalidInput& e) {
    std::cerr << "syncforge: " << e.what() << '\n';
    return 1;
  } catch (const InvalidTransform& e) {
    std::cerr << "syncforge: " << e.what() << '\n';
    return 1;
  } catch (const nn::CheckpointError& e) {
    std::cerr << "syncforge: checkpoint error (" << nn::to_string(e.kind()) << "): " << e.what()
              << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "syncforge: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
