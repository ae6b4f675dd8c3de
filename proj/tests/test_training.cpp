#include "doctest.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "syncforge/errors.hpp"
#include "syncforge/nn/ops.hpp"
#include "syncforge/synth.hpp"
#include "syncforge/training.hpp"
#include "test_util.hpp"

using namespace syncforge;
using namespace syncforge::nn;

namespace {

std::vector<TrainSample> small_dataset(int n, int size, std::uint64_t seed) {
  const EmbedConfig e{0.2, size, size};
  std::vector<TrainSample> out;
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(i));
    out.push_back(make_train_sample(synth_image(rng, size, size), e));
  }
  return out;
}

TrainConfig small_config() {
  TrainConfig c;
  c.batch = 4;
  c.iterations = 10;
  c.adv_start_iter = 4;
  c.checkpoint_every = 0;
  c.seed = 21;
  return c;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool same_params(const ModelBundle& a, const ModelBundle& b) {
  const auto pa = a.all_params();
  const auto pb = b.all_params();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (!(pa[i]->value == pb[i]->value)) return false;
  return true;
}

}  // namespace

TEST_CASE("sync loss examples") {
  Graph g;
  const auto q = CornerQuad::canonical().flat();
  Tensor gt({1, 8}, std::vector<double>(q.begin(), q.end()));
  CHECK(sync_loss(g.constant(gt), g.constant(gt)).value()[0] == 0.0);
  Tensor off = gt;
  for (double& v : off.data()) v += 0.1;
  CHECK(sync_loss(g.constant(off), g.constant(gt)).value()[0] == doctest::Approx(0.8));
  // Batch average.
  Tensor two({2, 8});
  Tensor tgt({2, 8});
  for (int j = 0; j < 8; ++j) two[j] = 0.5;
  CHECK(sync_loss(g.constant(two), g.constant(tgt)).value()[0] == doctest::Approx(2.0));
}

TEST_CASE("AdamW follows the reference update") {
  TrainConfig cfg;
  cfg.lr = 0.01;
  cfg.weight_decay = 0.1;
  Parameter p("w", {3});
  p.value.data() = {0.5, -0.25, 1.0};
  AdamW opt({&p}, cfg);
  // Reference: textbook AdamW in double precision.
  double w[3] = {0.5, -0.25, 1.0}, m[3] = {0, 0, 0}, v[3] = {0, 0, 0};
  const double grads[3][3] = {{0.1, -0.2, 0.3}, {0.05, 0.4, -0.1}, {-0.3, 0.0, 0.2}};
  for (int t = 1; t <= 3; ++t) {
    p.grad.data() = {grads[t - 1][0], grads[t - 1][1], grads[t - 1][2]};
    opt.step();
    for (int i = 0; i < 3; ++i) {
      const double g = grads[t - 1][i];
      w[i] *= 1 - cfg.lr * cfg.weight_decay;
      m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * g * g;
      const double mh = m[i] / (1 - std::pow(cfg.beta1, t));
      const double vh = v[i] / (1 - std::pow(cfg.beta2, t));
      w[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
    }
    for (int i = 0; i < 3; ++i) CHECK(p.value[i] == doctest::Approx(w[i]).epsilon(1e-6));
  }
  CHECK(opt.steps() == 3);
}

TEST_CASE("gradient clipping") {
  Parameter a("a", {1}), b("b", {1});
  a.grad[0] = 3.0;
  b.grad[0] = 4.0;
  CHECK(clip_grad_norm({&a, &b}, 1.0) == doctest::Approx(5.0));
  CHECK(a.grad[0] == doctest::Approx(0.6));
  CHECK(b.grad[0] == doctest::Approx(0.8));
  CHECK(clip_grad_norm({&a, &b}, 2.0) == doctest::Approx(1.0));
  CHECK(a.grad[0] == doctest::Approx(0.6));
}

TEST_CASE("generator adversarial loss gradient matches finite differences") {
  ModelBundle m = ModelBundle::initialized(2);
  Rng rng(3);
  Tensor fake({1, 3, 16, 16});
  for (double& v : fake.data()) v = rng.uniform(0.2, 0.8);
  const Tensor real = fake;
  Graph g, dg;
  const Var f = g.variable(fake);
  const auto losses = adversarial_losses(m.discriminator, g, f, dg, real);
  g.backward(losses.gen);
  for (const auto& p : m.discriminator.params())
    for (double v : p.grad.data()) CHECK(v == 0.0);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < fake.numel(); i += 3) idx.push_back(i);
  const auto st = testutil::fd_compare(g.grad(f).data(), idx, [&](std::size_t i, double d) {
    Tensor t = fake;
    t[i] += d;
    Graph a(false), b(false);
    return adversarial_losses(m.discriminator, a, a.constant(t), b, real).gen.value()[0];
  });
  CHECK(st.rel < 1e-3);
  CHECK(st.used > 3 * idx.size() / 4);
}

TEST_CASE("composed training loss gradient matches finite differences") {
  // Smooth probes keep every pixel away from the clamp boundaries. A weight
  // step moves every activation of a layer at once, so eps = 1e-3 crosses
  // many ReLU kinks; the step here is 1e-5.
  const EmbedConfig e{0.2, 32, 32};
  const std::vector<TrainSample> data = {make_train_sample(testutil::probe(3, 32, 32, 0.31, 0.47), e),
                                         make_train_sample(testutil::probe(3, 32, 32, 0.53, 0.19), e)};
  ModelBundle m = ModelBundle::initialized(6, EmbedConfig{0.2, 32, 32});
  Rng rng(7);
  // Give the embedder a non-trivial output layer so gradients reach every layer.
  for (double& v : m.embedder.param("embedder.c7.weight").value.data()) v = rng.normal() * 0.1;
  for (double& v : m.extractor.param("extractor.fc.weight").value.data()) v = rng.normal() * 0.1;
  TrainConfig cfg;
  cfg.lambda_adv = 0.5;
  StepPlan plan;
  plan.gt = Tensor({2, 8});
  const std::vector<GeometricTransform> geos = {geo::Rotation{17}, centered_crop(0.7)};
  for (int b = 0; b < 2; ++b) {
    const Homography h = homography(geos[b]);
    plan.grids.push_back(make_sampling_grid(h, 32, 32, 32, 32));
    const auto q = to_quad(h).flat();
    for (int j = 0; j < 8; ++j) plan.gt[b * 8 + j] = q[j];
  }
  plan.valuemetric = {{val::GaussianBlur{3}, val::Saturation{1.3}},
                      {val::Contrast{0.8}, val::Hue{0.1}}};
  const std::vector<const TrainSample*> batch = {&data[0], &data[1]};

  Graph g, dg;
  const GeneratorPass pass = generator_pass(g, dg, m, batch, plan, true, cfg);
  g.backward(pass.total);

  auto loss_at = [&]() {
    Graph a(false), b(false);
    return generator_pass(a, b, m, batch, plan, true, cfg).total.value()[0];
  };
  for (const char* name : {"embedder.c1.weight", "embedder.c4.weight", "embedder.c7.weight",
                           "extractor.c2.weight", "extractor.fc.bias"}) {
    Parameter& p = name[0] == 'e' && name[1] == 'm' ? m.embedder.param(name) : m.extractor.param(name);
    std::vector<std::size_t> idx;
    const std::size_t step = std::max<std::size_t>(1, p.value.numel() / 24);
    for (std::size_t i = 0; i < p.value.numel(); i += step) idx.push_back(i);
    const auto st = testutil::fd_compare(p.grad.data(), idx, [&](std::size_t i, double d) {
      const double keep = p.value[i];
      p.value[i] = keep + d;
      const double v = loss_at();
      p.value[i] = keep;
      return v;
    }, 1e-5);
    INFO(name);
    CHECK(st.rel < 1e-3);
    CHECK(st.used > idx.size() / 2);
  }
}

TEST_CASE("generator and discriminator losses reach only their own parameters") {
  const auto data = small_dataset(2, 32, 8);
  ModelBundle m = ModelBundle::initialized(9, EmbedConfig{0.2, 32, 32});
  Rng rng(10);
  for (double& v : m.embedder.param("embedder.c7.weight").value.data()) v = rng.normal() * 0.1;
  TrainConfig cfg = small_config();
  Rng prng(11);
  const StepPlan plan = plan_step(prng, 2, 32, 32, cfg);
  const std::vector<const TrainSample*> batch = {&data[0], &data[1]};
  auto grad_mass = [](const Network& n) {
    double s = 0.0;
    for (const auto& p : n.params())
      for (double v : p.grad.data()) s += std::abs(v);
    return s;
  };
  {
    Graph g, dg;
    const GeneratorPass pass = generator_pass(g, dg, m, batch, plan, true, cfg);
    g.backward(pass.total);
    CHECK(grad_mass(m.discriminator) == 0.0);
    CHECK(grad_mass(m.embedder) > 0.0);
    CHECK(grad_mass(m.extractor) > 0.0);
  }
  m.embedder.zero_grad();
  m.extractor.zero_grad();
  {
    Graph g, dg;
    const GeneratorPass pass = generator_pass(g, dg, m, batch, plan, true, cfg);
    dg.backward(pass.disc);
    CHECK(grad_mass(m.embedder) == 0.0);
    CHECK(grad_mass(m.extractor) == 0.0);
    CHECK(grad_mass(m.discriminator) > 0.0);
  }
}

TEST_CASE("step-0 loss of the untrained model is the distance to the identity quad") {
  const auto data = small_dataset(4, 32, 12);
  ModelBundle m = ModelBundle::initialized(13, EmbedConfig{0.2, 32, 32});
  TrainConfig cfg = small_config();
  Optimizers opt = Optimizers::make(m, cfg);
  Rng rng(14);
  const StepPlan plan = plan_step(rng, 4, 32, 32, cfg);
  const auto id = CornerQuad::canonical().flat();
  double expected = 0.0;
  for (int b = 0; b < 4; ++b)
    for (int j = 0; j < 8; ++j) expected += std::abs(plan.gt[b * 8 + j] - id[j]);
  expected /= 4;
  const LossReport r = train_step(m, opt, {&data[0], &data[1], &data[2], &data[3]}, plan, false, cfg);
  CHECK(!r.skipped);
  CHECK(r.sync == doctest::Approx(expected).epsilon(1e-12));
  CHECK(r.adv == 0.0);
  CHECK(r.total == r.sync);
}

TEST_CASE("training without the adversarial term reduces the sync loss") {
  const auto data = small_dataset(16, 32, 15);
  TrainConfig cfg = small_config();
  cfg.lambda_adv = 0.0;
  cfg.adv_start_iter = 0;
  cfg.iterations = 40;
  cfg.n_geo = 1;
  cfg.n_val = 0;
  cfg.geo_ranges.variants = {"hflip"};
  cfg.lr = 0.05;
  const auto dir = testutil::temp_dir("smoke");
  std::vector<double> losses;
  TrainOptions o;
  o.on_step = [&](int, const LossReport& r) { losses.push_back(r.sync); };
  train(data, cfg, EmbedConfig{0.2, 32, 32}, dir / "m.ckpt", o);
  REQUIRE(losses.size() == 40u);
  CHECK(losses.front() == doctest::Approx(8.0));
  double tail = 0.0;
  for (int i = 35; i < 40; ++i) tail += losses[i] / 5;
  CHECK(tail < 0.5 * losses.front());
}

TEST_CASE("a step with a non-finite value is skipped") {
  const auto data = small_dataset(1, 32, 16);
  ModelBundle m = ModelBundle::initialized(17, EmbedConfig{0.2, 32, 32});
  m.extractor.param("extractor.fc.bias").value[0] = std::numeric_limits<double>::infinity();
  const ModelBundle before = m;
  TrainConfig cfg = small_config();
  Optimizers opt = Optimizers::make(m, cfg);
  Rng rng(18);
  const StepPlan plan = plan_step(rng, 1, 32, 32, cfg);
  const LossReport r = train_step(m, opt, {&data[0]}, plan, true, cfg);
  CHECK(r.skipped);
  CHECK(!r.skip_reason.empty());
  CHECK(opt.generator.steps() == 0);
  const auto pa = m.all_params();
  const auto pb = before.all_params();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i]->value.data().size() == pb[i]->value.data().size());
    for (double v : pa[i]->grad.data()) CHECK(v == 0.0);
  }
}

TEST_CASE("seeded training runs are reproducible and logged") {
  const auto data = small_dataset(8, 32, 19);
  const TrainConfig cfg = small_config();
  const EmbedConfig e{0.2, 32, 32};
  const auto dir = testutil::temp_dir("repro");
  train(data, cfg, e, dir / "a.ckpt");
  train(data, cfg, e, dir / "b.ckpt");
  CHECK(same_params(load_checkpoint(dir / "a.ckpt"), load_checkpoint(dir / "b.ckpt")));
  const std::string log = read_file(dir / "a.loss.csv");
  CHECK(log == read_file(dir / "b.loss.csv"));
  std::istringstream in(log);
  std::string line;
  std::getline(in, line);
  CHECK(line == "iteration,sync,adv,disc,total");
  int rows = 0;
  while (std::getline(in, line)) {
    CHECK(line.rfind(std::to_string(rows) + ",", 0) == 0);
    ++rows;
  }
  CHECK(rows == cfg.iterations);
}

TEST_CASE("resuming from a checkpoint is bit-identical") {
  const auto data = small_dataset(8, 32, 20);
  TrainConfig cfg = small_config();
  const EmbedConfig e{0.2, 32, 32};
  const auto dir = testutil::temp_dir("resume");
  train(data, cfg, e, dir / "full.ckpt");
  TrainOptions stop;
  stop.stop_after = 6;
  train(data, cfg, e, dir / "part.ckpt", stop);
  TrainOptions resume;
  resume.resume = dir / "part.ckpt";
  train(data, cfg, e, dir / "part.ckpt", resume);
  TrainingState a, b;
  const ModelBundle ma = load_checkpoint(dir / "full.ckpt", &a);
  const ModelBundle mb = load_checkpoint(dir / "part.ckpt", &b);
  CHECK(same_params(ma, mb));
  REQUIRE(a.tensors.size() == b.tensors.size());
  for (std::size_t i = 0; i < a.tensors.size(); ++i) CHECK(a.tensors[i].value == b.tensors[i].value);
  CHECK(read_file(dir / "full.loss.csv") == read_file(dir / "part.loss.csv"));
}

TEST_CASE("train config validation and JSON") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.batch = 0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.geo_ranges.variants = {"shear"};
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.lr = 0.002;
  c.geo_ranges.variants = {"identity", "hflip"};
  c.geo_ranges.rotation_angles = {90, 180};
  const TrainConfig back = train_config_from_json(to_json(c));
  CHECK(back.lr == 0.002);
  CHECK(back.geo_ranges.variants == c.geo_ranges.variants);
  CHECK(back.geo_ranges.rotation_angles == c.geo_ranges.rotation_angles);
  CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"learning_rate", 1}}), InvalidInput);
  CHECK_THROWS_AS(load_dataset(testutil::temp_dir("empty_ds"), EmbedConfig{}), InvalidInput);
}
