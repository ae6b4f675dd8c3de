#include "syncforge/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "syncforge/errors.hpp"
#include "syncforge/nn/ops.hpp"
#include "syncforge/perceptual.hpp"
#include "syncforge/png_io.hpp"

namespace syncforge {

using nlohmann::json;
using nn::Graph;
using nn::Parameter;
using nn::Tensor;
using nn::Var;

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw InvalidInput("train config: " + m); };
  if (!(lr > 0)) fail("lr must be positive");
  if (!(beta1 > 0 && beta1 < 1) || !(beta2 > 0 && beta2 < 1)) fail("betas must lie in (0, 1)");
  if (!(eps > 0)) fail("eps must be positive");
  if (!(weight_decay >= 0)) fail("weight_decay must be non-negative");
  if (batch < 1) fail("batch must be positive");
  if (iterations < 1) fail("iterations must be positive");
  if (!(lambda_adv >= 0)) fail("lambda_adv must be non-negative");
  if (!(grad_clip > 0)) fail("grad_clip must be positive");
  if (n_geo < 0 || n_val < 0) fail("n_geo and n_val must be non-negative");
  if (adv_start_iter < 0 || adv_start_iter > iterations) {
    fail("adv_start_iter must lie in [0, iterations]");
  }
  if (checkpoint_every < 0) fail("checkpoint_every must be non-negative");
  geo_ranges.validate();
}

json to_json(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"betas", {c.beta1, c.beta2}},
          {"eps", c.eps},
          {"weight_decay", c.weight_decay},
          {"batch", c.batch},
          {"iterations", c.iterations},
          {"lambda_adv", c.lambda_adv},
          {"grad_clip", c.grad_clip},
          {"seed", c.seed},
          {"n_geo", c.n_geo},
          {"n_val", c.n_val},
          {"adv_start_iter", c.adv_start_iter},
          {"checkpoint_every", c.checkpoint_every},
          {"augment", c.augment == AugmentMode::Full ? "full" : "identity"},
          {"geo_variants", c.geo_ranges.variants},
          {"rotation_angles", c.geo_ranges.rotation_angles}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  if (!j.is_object()) throw InvalidInput("train config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "lr") c.lr = v.get<double>();
      else if (key == "betas") {
        const auto b = v.get<std::vector<double>>();
        if (b.size() != 2) throw InvalidInput("train config: betas needs two values");
        c.beta1 = b[0];
        c.beta2 = b[1];
      } else if (key == "eps") c.eps = v.get<double>();
      else if (key == "weight_decay") c.weight_decay = v.get<double>();
      else if (key == "batch") c.batch = v.get<int>();
      else if (key == "iterations") c.iterations = v.get<int>();
      else if (key == "lambda_adv") c.lambda_adv = v.get<double>();
      else if (key == "grad_clip") c.grad_clip = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "n_geo") c.n_geo = v.get<int>();
      else if (key == "n_val") c.n_val = v.get<int>();
      else if (key == "adv_start_iter") c.adv_start_iter = v.get<int>();
      else if (key == "checkpoint_every") c.checkpoint_every = v.get<int>();
      else if (key == "augment") {
        const auto s = v.get<std::string>();
        if (s == "full") c.augment = AugmentMode::Full;
        else if (s == "identity") c.augment = AugmentMode::Identity;
        else throw InvalidInput("train config: augment must be \"full\" or \"identity\"");
      } else if (key == "geo_variants") {
        c.geo_ranges.variants = v.get<std::vector<std::string>>();
      } else if (key == "rotation_angles") {
        c.geo_ranges.rotation_angles = v.get<std::vector<double>>();
      } else {
        throw InvalidInput("train config: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("train config: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------

AdamW::AdamW(std::vector<Parameter*> params, const TrainConfig& cfg)
    : params_(std::move(params)),
      lr_(cfg.lr),
      b1_(cfg.beta1),
      b2_(cfg.beta2),
      eps_(cfg.eps),
      wd_(cfg.weight_decay) {
  for (const Parameter* p : params_) {
    m_.emplace_back(p->value.shape(), 0.0);
    v_.emplace_back(p->value.shape(), 0.0);
  }
}

void AdamW::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& p = params_[k]->value;
    const Tensor& g = params_[k]->grad;
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < p.numel(); ++i) {
      double x = p[i] * (1.0 - lr_ * wd_);
      m[i] = b1_ * m[i] + (1.0 - b1_) * g[i];
      v[i] = b2_ * v[i] + (1.0 - b2_) * g[i] * g[i];
      m[i] = static_cast<float>(m[i]);
      v[i] = static_cast<float>(v[i]);
      x -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
      p[i] = static_cast<float>(x);
    }
  }
}

std::vector<nn::NamedTensor> AdamW::state(const std::string& prefix) const {
  std::vector<nn::NamedTensor> out;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    out.push_back({prefix + ".m." + params_[k]->name, m_[k]});
    out.push_back({prefix + ".v." + params_[k]->name, v_[k]});
  }
  return out;
}

void AdamW::load_state(const std::vector<nn::NamedTensor>& tensors, const std::string& prefix,
                       long steps) {
  auto find = [&](const std::string& name, const Tensor& like) -> const Tensor& {
    for (const auto& t : tensors)
      if (t.name == name) {
        if (t.value.shape() != like.shape()) {
          throw nn::CheckpointError(nn::CheckpointError::Kind::ShapeMismatch,
                                    "optimizer tensor '" + name + "' has the wrong shape", name);
        }
        return t.value;
      }
    throw nn::CheckpointError(nn::CheckpointError::Kind::ShapeMismatch,
                              "checkpoint lacks optimizer tensor '" + name + "'", name);
  };
  for (std::size_t k = 0; k < params_.size(); ++k) {
    m_[k] = find(prefix + ".m." + params_[k]->name, m_[k]);
    v_[k] = find(prefix + ".v." + params_[k]->name, v_[k]);
  }
  t_ = steps;
}

double clip_grad_norm(const std::vector<Parameter*>& params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params)
    for (double g : p->grad.data()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (Parameter* p : params)
      for (double& g : p->grad.data()) g *= s;
  }
  return norm;
}

Var sync_loss(Var pred, Var gt) { return nn::l1_loss(pred, gt); }

namespace {

// Temporarily freezes or unfreezes a network.
class TrainableScope {
 public:
  TrainableScope(nn::Network& n, bool on) : n_(n), was_(n.trainable) { n.trainable = on; }
  ~TrainableScope() { n_.trainable = was_; }
  TrainableScope(const TrainableScope&) = delete;
  TrainableScope& operator=(const TrainableScope&) = delete;

 private:
  nn::Network& n_;
  bool was_;
};

Var discriminator_loss(nn::Discriminator& d, Graph& dg, const Tensor& real, const Tensor& fake) {
  TrainableScope scope(d, true);
  const Var real_logits = d.forward(dg, dg.constant(real));
  const Var fake_logits = d.forward(dg, dg.constant(fake));
  return nn::add(nn::hinge_real(real_logits), nn::hinge_fake(fake_logits));
}

}  // namespace

AdversarialLosses adversarial_losses(nn::Discriminator& d, Graph& gen_graph, Var fake,
                                     Graph& disc_graph, const Tensor& real) {
  Var gen;
  {
    TrainableScope scope(d, false);
    gen = nn::scalar_mul(nn::mean(d.forward(gen_graph, fake)), -1.0);
  }
  return {gen, discriminator_loss(d, disc_graph, real, fake.value())};
}

// ---------------------------------------------------------------------------

TrainSample make_train_sample(const Image& rgb, const EmbedConfig& embed) {
  if (rgb.channels() != 3) throw InvalidInput("training images must be RGB");
  TrainSample s;
  s.rgb = resize_bilinear(rgb, embed.proc_h, embed.proc_w);
  s.luma = to_luma(s.rgb);
  s.jnd = jnd(s.rgb);
  return s;
}

StepPlan plan_step(Rng& rng, int batch, int h, int w, const TrainConfig& cfg) {
  StepPlan plan;
  plan.gt = Tensor({batch, 8});
  plan.valuemetric.assign(cfg.n_val, {});
  for (int b = 0; b < batch; ++b) {
    TransformRecord rec;
    if (cfg.augment == AugmentMode::Full) {
      rec.geometric = sample_geometric(rng, cfg.n_geo, cfg.geo_ranges);
      for (int k = 0; k < cfg.n_val; ++k)
        rec.valuemetric.push_back(sample_valuemetric(rng, cfg.val_ranges));
    } else {
      rec.valuemetric.assign(cfg.n_val, val::Identity{});
    }
    for (const auto& t : rec.geometric) rec.total = compose(homography(t), rec.total);
    rec.gt_quad = to_quad(rec.total);
    const auto flat = rec.gt_quad.flat();
    for (int j = 0; j < 8; ++j) plan.gt[b * 8 + j] = flat[j];
    plan.grids.push_back(make_sampling_grid(rec.total, h, w, h, w));
    for (int k = 0; k < cfg.n_val; ++k) plan.valuemetric[k].push_back(rec.valuemetric[k]);
    plan.records.push_back(std::move(rec));
  }
  return plan;
}

Optimizers Optimizers::make(nn::ModelBundle& model, const TrainConfig& cfg) {
  std::vector<Parameter*> gen, disc;
  for (auto& p : model.embedder.params()) gen.push_back(&p);
  for (auto& p : model.extractor.params()) gen.push_back(&p);
  for (auto& p : model.discriminator.params()) disc.push_back(&p);
  return {AdamW(gen, cfg), AdamW(disc, cfg)};
}

namespace {

std::vector<Parameter*> generator_params(nn::ModelBundle& m) {
  std::vector<Parameter*> out;
  for (auto& p : m.embedder.params()) out.push_back(&p);
  for (auto& p : m.extractor.params()) out.push_back(&p);
  return out;
}

std::vector<Parameter*> discriminator_params(nn::ModelBundle& m) {
  std::vector<Parameter*> out;
  for (auto& p : m.discriminator.params()) out.push_back(&p);
  return out;
}

bool grads_finite(const std::vector<Parameter*>& ps) {
  for (const Parameter* p : ps)
    if (!p->grad.all_finite()) return false;
  return true;
}

}  // namespace

GeneratorPass generator_pass(Graph& g, Graph& dg, nn::ModelBundle& model,
                             const std::vector<const TrainSample*>& batch, const StepPlan& plan,
                             bool adversarial, const TrainConfig& cfg) {
  std::vector<Image> rgb, lum, masks;
  for (const TrainSample* s : batch) {
    rgb.push_back(s->rgb);
    lum.push_back(s->luma);
    masks.push_back(s->jnd);
  }
  const Tensor real = nn::stack(rgb);

  GeneratorPass p;
  const Var x = g.constant(real);
  const Var residual = model.embedder.forward(g, g.constant(nn::stack(lum)));
  const Var w = nn::scalar_mul(nn::mul(g.constant(nn::stack(masks)), nn::tanh(residual)),
                               model.embed.alpha_w);
  p.watermarked = nn::clamp01(nn::add(x, nn::broadcast_channels(w, 3)));
  Var aug = nn::grid_sample(p.watermarked, plan.grids, 0.0);
  for (const auto& step : plan.valuemetric) aug = nn::valuemetric(aug, step);
  p.pred = model.extractor.forward(g, nn::luma(aug));
  p.sync = sync_loss(p.pred, g.constant(plan.gt));
  p.total = p.sync;
  if (adversarial) {
    const auto adv = adversarial_losses(model.discriminator, g, p.watermarked, dg, real);
    p.adv = adv.gen;
    p.total = nn::add(p.sync, nn::scalar_mul(adv.gen, cfg.lambda_adv));
    p.disc = adv.disc;
  } else {
    p.disc = discriminator_loss(model.discriminator, dg, real, p.watermarked.value());
  }
  return p;
}

LossReport train_step(nn::ModelBundle& model, Optimizers& opt,
                      const std::vector<const TrainSample*>& batch, const StepPlan& plan,
                      bool adversarial, const TrainConfig& cfg) {
  LossReport rep;
  const auto gen = generator_params(model);
  const auto disc = discriminator_params(model);
  model.embedder.zero_grad();
  model.extractor.zero_grad();
  model.discriminator.zero_grad();

  try {
    Graph g, dg;
    const GeneratorPass pass = generator_pass(g, dg, model, batch, plan, adversarial, cfg);
    rep.sync = pass.sync.value()[0];
    rep.adv = adversarial ? pass.adv.value()[0] : 0.0;
    rep.disc = pass.disc.value()[0];
    rep.total = pass.total.value()[0];
    g.backward(pass.total);
    dg.backward(pass.disc);
    if (!grads_finite(gen) || !grads_finite(disc)) {
      throw NonFinite("backward", "non-finite parameter gradient");
    }
  } catch (const NonFinite& e) {
    rep.skipped = true;
    rep.skip_reason = e.what();
    model.embedder.zero_grad();
    model.extractor.zero_grad();
    model.discriminator.zero_grad();
    return rep;
  }

  clip_grad_norm(gen, cfg.grad_clip);
  opt.generator.step();
  clip_grad_norm(disc, cfg.grad_clip);
  opt.discriminator.step();
  return rep;
}

// ---------------------------------------------------------------------------

std::vector<TrainSample> load_dataset(const std::filesystem::path& dir, const EmbedConfig& embed,
                                      std::size_t min_images) {
  const auto files = list_pngs(dir);
  if (files.size() < min_images) {
    throw InvalidInput("dataset '" + dir.string() + "' has " + std::to_string(files.size()) +
                       " PNG images, need at least " + std::to_string(min_images));
  }
  std::vector<TrainSample> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(make_train_sample(read_png(f), embed));
  return out;
}

namespace {

std::string format_row(int iter, const LossReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g", iter, r.sync, r.adv, r.disc,
                r.total);
  return buf;
}

void write_state(const nn::ModelBundle& model, const Optimizers& opt, const TrainConfig& cfg,
                 int next_iter, const std::filesystem::path& out) {
  nn::TrainingState st;
  st.meta = {{"next_iteration", next_iter},
             {"generator_steps", opt.generator.steps()},
             {"discriminator_steps", opt.discriminator.steps()},
             {"config", to_json(cfg)}};
  for (auto& t : opt.generator.state("adam.generator")) st.tensors.push_back(std::move(t));
  for (auto& t : opt.discriminator.state("adam.discriminator")) st.tensors.push_back(std::move(t));
  nn::save_checkpoint(model, out, &st);
}

}  // namespace

TrainResult train(const std::vector<TrainSample>& data, const TrainConfig& cfg,
                  const EmbedConfig& embed, const std::filesystem::path& out,
                  const TrainOptions& options) {
  cfg.validate();
  embed.validate();
  if (data.empty()) throw InvalidInput("training dataset is empty");
  for (const auto& s : data) {
    if (s.rgb.height() != embed.proc_h || s.rgb.width() != embed.proc_w) {
      throw InvalidInput("training samples must be at the processing resolution");
    }
  }

  nn::ModelBundle model = nn::ModelBundle::initialized(cfg.seed, embed);
  int start = 0;
  std::optional<nn::TrainingState> resumed;
  if (options.resume) {
    resumed.emplace();
    model = nn::load_checkpoint(*options.resume, &*resumed);
    start = resumed->meta.value("next_iteration", 0);
  }
  model.meta["train_config"] = to_json(cfg);
  Optimizers opt = Optimizers::make(model, cfg);
  if (resumed) {
    opt.generator.load_state(resumed->tensors, "adam.generator",
                             resumed->meta.value("generator_steps", 0L));
    opt.discriminator.load_state(resumed->tensors, "adam.discriminator",
                                 resumed->meta.value("discriminator_steps", 0L));
  }

  TrainResult result;
  result.log_path = options.log_path ? *options.log_path
                                     : std::filesystem::path(out).replace_extension(".loss.csv");
  // Keep the rows written before the resume point.
  std::vector<std::string> rows;
  if (start > 0) {
    std::ifstream in(result.log_path);
    std::string line;
    std::getline(in, line);
    while (static_cast<int>(rows.size()) < start && std::getline(in, line)) rows.push_back(line);
    if (static_cast<int>(rows.size()) != start) {
      throw InvalidInput("loss log '" + result.log_path.string() +
                         "' has fewer rows than the resumed iteration");
    }
  }
  std::ofstream log(result.log_path, std::ios::trunc);
  if (!log) throw IoError("cannot write loss log '" + result.log_path.string() + "'");
  log << "iteration,sync,adv,disc,total\n";
  for (const auto& r : rows) log << r << '\n';

  const int end = options.stop_after ? std::min(cfg.iterations, *options.stop_after)
                                     : cfg.iterations;
  std::vector<const TrainSample*> batch(cfg.batch);
  for (int it = start; it < end; ++it) {
    Rng rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(it), 0x7472);
    for (auto& b : batch) b = &data[rng.below(data.size())];
    const StepPlan plan = plan_step(rng, cfg.batch, embed.proc_h, embed.proc_w, cfg);
    const bool adversarial = it >= cfg.adv_start_iter;
    result.last = train_step(model, opt, batch, plan, adversarial, cfg);
    if (result.last.skipped) {
      LossReport nan_row;
      nan_row.sync = nan_row.adv = nan_row.disc = nan_row.total = std::nan("");
      log << format_row(it, nan_row) << '\n';
    } else {
      log << format_row(it, result.last) << '\n';
    }
    log.flush();
    if (options.on_step) options.on_step(it, result.last);
    result.iterations_run = it + 1;
    if (cfg.checkpoint_every > 0 && (it + 1) % cfg.checkpoint_every == 0 && it + 1 < end) {
      write_state(model, opt, cfg, it + 1, out);
    }
  }
  write_state(model, opt, cfg, end, out);
  return result;
}

}  // namespace syncforge
