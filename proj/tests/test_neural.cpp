#include "doctest.h"

#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>

#include "syncforge/errors.hpp"
#include "syncforge/nn/checkpoint.hpp"
#include "syncforge/nn/models.hpp"
#include "syncforge/nn/ops.hpp"
#include "test_util.hpp"

using namespace syncforge;
using namespace syncforge::nn;

namespace {

using Fn = std::function<Var(Graph&, const std::vector<Var>&)>;

Tensor random_tensor(Rng& rng, std::vector<int> shape, double lo, double hi) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Scalar objective <f(inputs), r> for a fixed random projection r.
double objective(const std::vector<Tensor>& inputs, const Fn& f, std::vector<Var>* vars,
                 Graph& g) {
  std::vector<Var> in;
  for (const auto& t : inputs) in.push_back(g.variable(t));
  const Var out = f(g, in);
  Rng rng(99);
  Tensor r(out.shape());
  for (double& v : r.data()) v = rng.uniform(-1.0, 1.0);
  const Var loss = mean(mul(out, g.constant(r)));
  if (vars) {
    *vars = in;
    g.backward(loss);
  }
  return g.value(loss)[0];
}

// Central differences with eps = 1e-3 against the analytic gradient.
// Returns ||analytic - numeric|| / max(||analytic||, ||numeric||) over every
// input element (at most `limit` elements per input are probed).
double fd_relative_error(std::vector<Tensor> inputs, const Fn& f, std::size_t limit = 400) {
  Graph g;
  std::vector<Var> vars;
  objective(inputs, f, &vars, g);
  double diff = 0.0, na = 0.0, nn = 0.0;
  const double eps = 1e-3;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor& analytic = g.grad(vars[k]);
    const std::size_t n = inputs[k].numel();
    const std::size_t step = std::max<std::size_t>(1, n / limit);
    for (std::size_t i = 0; i < n; i += step) {
      const double keep = inputs[k][i];
      inputs[k][i] = keep + eps;
      Graph gp(false);
      const double up = objective(inputs, f, nullptr, gp);
      inputs[k][i] = keep - eps;
      Graph gm(false);
      const double dn = objective(inputs, f, nullptr, gm);
      inputs[k][i] = keep;
      const double num = (up - dn) / (2 * eps);
      const double a = analytic.empty() ? 0.0 : analytic[i];
      diff += (a - num) * (a - num);
      na += a * a;
      nn += num * num;
    }
  }
  const double denom = std::max(std::sqrt(na), std::sqrt(nn));
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

Tensor images(Rng& rng, int n, int c, int h, int w) {
  return random_tensor(rng, {n, c, h, w}, 0.2, 0.8);
}

}  // namespace

TEST_CASE("finite differences: convolution") {
  Rng rng(1);
  for (int stride : {1, 2}) {
    const double e = fd_relative_error(
        {random_tensor(rng, {2, 3, 7, 6}, -1, 1), random_tensor(rng, {4, 3, 3, 3}, -1, 1),
         random_tensor(rng, {4}, -1, 1)},
        [stride](Graph&, const std::vector<Var>& v) { return conv2d(v[0], v[1], v[2], stride, 1); });
    CHECK(e < 1e-3);
  }
  const double e1 = fd_relative_error(
      {random_tensor(rng, {1, 2, 5, 5}, -1, 1), random_tensor(rng, {3, 2, 1, 1}, -1, 1),
       random_tensor(rng, {3}, -1, 1)},
      [](Graph&, const std::vector<Var>& v) { return conv2d(v[0], v[1], v[2], 1, 0); });
  CHECK(e1 < 1e-3);
}

TEST_CASE("finite differences: shape and arithmetic ops") {
  Rng rng(2);
  const Tensor a = random_tensor(rng, {2, 2, 4, 4}, -1, 1);
  const Tensor b = random_tensor(rng, {2, 2, 4, 4}, -1, 1);
  const Tensor c = random_tensor(rng, {2, 1, 4, 4}, -1, 1);
  CHECK(fd_relative_error({a}, [](Graph&, const std::vector<Var>& v) { return upsample_nearest2(v[0]); }) < 1e-3);
  CHECK(fd_relative_error({a, c}, [](Graph&, const std::vector<Var>& v) { return concat_channels(v[0], v[1]); }) < 1e-3);
  CHECK(fd_relative_error({a, b}, [](Graph&, const std::vector<Var>& v) { return add(v[0], v[1]); }) < 1e-3);
  CHECK(fd_relative_error({a, b}, [](Graph&, const std::vector<Var>& v) { return mul(v[0], v[1]); }) < 1e-3);
  CHECK(fd_relative_error({a}, [](Graph&, const std::vector<Var>& v) { return scalar_mul(v[0], -0.7); }) < 1e-3);
  CHECK(fd_relative_error({c}, [](Graph&, const std::vector<Var>& v) { return broadcast_channels(v[0], 3); }) < 1e-3);
  CHECK(fd_relative_error({a}, [](Graph&, const std::vector<Var>& v) { return global_avg_pool(v[0]); }) < 1e-3);
  CHECK(fd_relative_error({a}, [](Graph&, const std::vector<Var>& v) { return mean(v[0]); }) < 1e-3);
  CHECK(fd_relative_error(
            {random_tensor(rng, {3, 5}, -1, 1), random_tensor(rng, {4, 5}, -1, 1), random_tensor(rng, {4}, -1, 1)},
            [](Graph&, const std::vector<Var>& v) { return linear(v[0], v[1], v[2]); }) < 1e-3);
}

TEST_CASE("finite differences: pointwise nonlinearities") {
  Rng rng(3);
  // Inputs kept away from the kinks.
  Tensor x = random_tensor(rng, {1, 2, 5, 5}, -2, 2);
  for (double& v : x.data())
    if (std::abs(v) < 0.05) v += 0.1;
  CHECK(fd_relative_error({x}, [](Graph&, const std::vector<Var>& v) { return tanh(v[0]); }) < 1e-3);
  CHECK(fd_relative_error({x}, [](Graph&, const std::vector<Var>& v) { return relu(v[0]); }) < 1e-3);
  CHECK(fd_relative_error({x}, [](Graph&, const std::vector<Var>& v) { return leaky_relu(v[0], 0.2); }) < 1e-3);
  Tensor y = random_tensor(rng, {1, 2, 5, 5}, -0.5, 1.5);
  for (double& v : y.data())
    if (std::abs(v) < 0.05 || std::abs(v - 1) < 0.05) v += 0.1;
  CHECK(fd_relative_error({y}, [](Graph&, const std::vector<Var>& v) { return clamp01(v[0]); }) < 1e-3);
  Tensor logits = random_tensor(rng, {2, 1, 3, 3}, -3, 3);
  for (double& v : logits.data())
    if (std::abs(std::abs(v) - 1) < 0.05) v += 0.1;
  CHECK(fd_relative_error({logits}, [](Graph&, const std::vector<Var>& v) { return hinge_real(v[0]); }) < 1e-3);
  CHECK(fd_relative_error({logits}, [](Graph&, const std::vector<Var>& v) { return hinge_fake(v[0]); }) < 1e-3);
}

TEST_CASE("finite differences: l1 loss") {
  Rng rng(4);
  const Tensor p = random_tensor(rng, {3, 8}, -1, 1);
  Tensor t = p;
  for (double& v : t.data()) v += rng.uniform() < 0.5 ? 0.3 : -0.3;
  CHECK(fd_relative_error({p, t}, [](Graph&, const std::vector<Var>& v) { return l1_loss(v[0], v[1]); }) < 1e-3);
}

TEST_CASE("finite differences: grid sampling and luma") {
  Rng rng(5);
  const Tensor x = images(rng, 2, 3, 12, 12);
  std::vector<SamplingGrid> grids;
  grids.push_back(make_sampling_grid(homography(geo::Rotation{23}), 12, 12, 12, 12));
  grids.push_back(make_sampling_grid(homography(centered_crop(0.6)), 12, 12, 12, 12));
  CHECK(fd_relative_error({x}, [&](Graph&, const std::vector<Var>& v) { return grid_sample(v[0], grids); }) < 1e-3);
  CHECK(fd_relative_error({x}, [](Graph&, const std::vector<Var>& v) { return luma(v[0]); }) < 1e-3);
}

TEST_CASE("finite differences: differentiable valuemetric transforms") {
  Rng rng(6);
  const std::vector<ValuemetricTransform> ts = {
      val::Brightness{1.2}, val::Contrast{0.7},    val::Saturation{1.4},
      val::Hue{0.15},       val::Grayscale{},     val::GaussianBlur{5},
      val::Identity{},      val::Brightness{0.6}};
  for (const auto& t : ts) {
    const Tensor x = images(rng, 2, 3, 9, 9);
    const std::vector<ValuemetricTransform> per = {t, t};
    const double e = fd_relative_error(
        {x}, [&](Graph&, const std::vector<Var>& v) { return valuemetric(v[0], per); });
    INFO(describe(t));
    CHECK(e < 1e-3);
  }
}

TEST_CASE("valuemetric forward matches the image transform") {
  Rng rng(7);
  const Tensor x = images(rng, 2, 3, 16, 16);
  Graph g(false);
  const std::vector<ValuemetricTransform> ts = {val::Jpeg{50}, val::GaussianBlur{3}};
  const Var out = valuemetric(g.constant(x), ts);
  for (int n = 0; n < 2; ++n)
    CHECK(unstack(out.value(), n) == apply_valuemetric(unstack(x, n), ts[n]));
}

TEST_CASE("straight-through passes the gradient unchanged") {
  Graph g;
  Tensor t({1, 1, 2, 2}, std::vector<double>{0.1, 0.2, 0.3, 0.4});
  const Var x = g.variable(t);
  const Var y = straight_through(x, [](const Tensor& v) {
    Tensor o = v;
    for (double& e : o.data()) e = std::round(e);
    return o;
  });
  CHECK(y.value()[3] == 0.0);
  g.backward(mean(y));
  for (double v : g.grad(x).data()) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("elementary values") {
  Graph g;
  const Var z = g.constant(Tensor({1, 1, 1, 1}, 0.0));
  CHECK(tanh(z).value()[0] == 0.0);
  // A 1x1 identity convolution copies its input.
  Rng rng(8);
  const Tensor x = images(rng, 1, 2, 4, 4);
  Tensor w({2, 2, 1, 1});
  w[0] = 1.0;
  w[3] = 1.0;
  const Var y = conv2d(g.constant(x), g.constant(w), g.constant(Tensor({2})), 1, 0);
  CHECK(y.value() == x);
  const Var h = hinge_real(g.constant(Tensor({1, 1, 1, 2}, std::vector<double>{2.0, -1.0})));
  CHECK(h.value()[0] == doctest::Approx(1.0));
  const Var f = hinge_fake(g.constant(Tensor({1, 1, 1, 2}, std::vector<double>{2.0, -1.0})));
  CHECK(f.value()[0] == doctest::Approx(1.5));
}

TEST_CASE("non-finite values are rejected when recorded") {
  Graph g;
  const Var x = g.variable(Tensor({1, 1, 1, 1}, 1.0));
  CHECK_THROWS_AS(scalar_mul(x, std::numeric_limits<double>::infinity()), NonFinite);
}

TEST_CASE("network shapes and parameter counts") {
  ModelBundle m = ModelBundle::initialized(1);
  CHECK(m.embedder.parameter_count() == 25761u);
  CHECK(m.extractor.parameter_count() == 35384u);
  Graph g(false);
  Rng rng(9);
  const Var l = g.constant(images(rng, 2, 1, 32, 32));
  CHECK(m.embedder.forward(g, l).shape() == std::vector<int>{2, 1, 32, 32});
  CHECK(m.extractor.forward(g, l).shape() == std::vector<int>{2, 8});
  const Var rgb = g.constant(images(rng, 2, 3, 32, 32));
  CHECK(m.discriminator.forward(g, rgb).shape() == std::vector<int>{2, 1, 4, 4});
  CHECK_THROWS_AS(m.extractor.forward(g, g.constant(images(rng, 1, 1, 30, 32))), InvalidInput);
  CHECK(m.embedder.param("embedder.c1.weight").value.shape() == std::vector<int>{16, 1, 3, 3});
}

TEST_CASE("initialization contracts") {
  ModelBundle m = ModelBundle::initialized(3);
  Graph g(false);
  Rng rng(10);
  const Var l = g.constant(images(rng, 2, 1, 32, 32));
  for (double v : m.embedder.forward(g, l).value().data()) CHECK(v == 0.0);
  const Tensor q = m.extractor.forward(g, l).value();
  const auto canonical = CornerQuad::canonical().flat();
  for (int n = 0; n < 2; ++n)
    for (int k = 0; k < 8; ++k) CHECK(q[n * 8 + k] == canonical[k]);
  // He-normal spread on a wide layer.
  const Tensor& w = m.embedder.param("embedder.c3.weight").value;
  double ss = 0.0;
  for (double v : w.data()) ss += v * v;
  const double sd = std::sqrt(ss / w.numel());
  CHECK(sd == doctest::Approx(std::sqrt(2.0 / (16 * 9))).epsilon(0.1));
  for (const Parameter* p : m.all_params())
    for (double v : p->value.data()) CHECK_MESSAGE(static_cast<double>(static_cast<float>(v)) == v, p->name);
  const ModelBundle same = ModelBundle::initialized(3);
  const ModelBundle other = ModelBundle::initialized(4);
  CHECK(same.embedder.params()[0].value == m.embedder.params()[0].value);
  CHECK(!(other.embedder.params()[0].value == m.embedder.params()[0].value));
}

TEST_CASE("frozen network passes no gradient to its weights") {
  ModelBundle m = ModelBundle::initialized(5);
  Rng rng(11);
  m.discriminator.trainable = false;
  Graph g;
  const Var x = g.variable(images(rng, 1, 3, 16, 16));
  g.backward(mean(m.discriminator.forward(g, x)));
  for (const auto& p : m.discriminator.params())
    for (double v : p.grad.data()) CHECK(v == 0.0);
  CHECK(!g.grad(x).empty());
  m.discriminator.trainable = true;
  Graph g2;
  g2.backward(mean(m.discriminator.forward(g2, g2.constant(images(rng, 1, 3, 16, 16)))));
  double s = 0.0;
  for (double v : m.discriminator.param("discriminator.c1.weight").grad.data()) s += std::abs(v);
  CHECK(s > 0.0);
}

TEST_CASE("checkpoint round trip") {
  const auto dir = testutil::temp_dir("ckpt_rt");
  ModelBundle m = ModelBundle::initialized(12, EmbedConfig{0.3, 32, 32});
  m.meta["note"] = "x";
  TrainingState st;
  st.meta["next_iteration"] = 7;
  st.tensors.push_back({"adam.generator.m.embedder.c1.weight", Tensor({2, 2}, 0.5)});
  save_checkpoint(m, dir / "a.ckpt", &st);
  TrainingState back_state;
  const ModelBundle back = load_checkpoint(dir / "a.ckpt", &back_state);
  const auto a = m.all_params();
  const auto b = back.all_params();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i]->name == b[i]->name);
    CHECK(a[i]->value == b[i]->value);
  }
  CHECK(back.embed.alpha_w == 0.3);
  CHECK(back.embed.proc_h == 32);
  CHECK(back_state.meta["next_iteration"] == 7);
  REQUIRE(back_state.tensors.size() == 1u);
  CHECK(back_state.tensors[0].value == st.tensors[0].value);
}

TEST_CASE("checkpoint errors") {
  const auto dir = testutil::temp_dir("ckpt_err");
  ModelBundle m = ModelBundle::initialized(13);
  save_checkpoint(m, dir / "good.ckpt");
  auto kind_of = [](const std::filesystem::path& p) {
    try {
      load_checkpoint(p);
    } catch (const CheckpointError& e) {
      return std::make_pair(e.kind(), e.tensor());
    }
    FAIL("no error");
    return std::make_pair(CheckpointError::Kind::Io, std::string());
  };

  CHECK(kind_of(dir / "missing.ckpt").first == CheckpointError::Kind::Io);

  {  // corrupted magic
    std::filesystem::copy_file(dir / "good.ckpt", dir / "magic.ckpt");
    std::fstream f(dir / "magic.ckpt", std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
  }
  CHECK(kind_of(dir / "magic.ckpt").first == CheckpointError::Kind::VersionMismatch);

  {  // corrupted header JSON
    std::filesystem::copy_file(dir / "good.ckpt", dir / "header.ckpt");
    std::fstream f(dir / "header.ckpt", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(16);
    f.write("}}}}", 4);
  }
  CHECK(kind_of(dir / "header.ckpt").first == CheckpointError::Kind::VersionMismatch);

  {  // truncated blob section
    const auto size = std::filesystem::file_size(dir / "good.ckpt");
    std::filesystem::copy_file(dir / "good.ckpt", dir / "short.ckpt");
    std::filesystem::resize_file(dir / "short.ckpt", size - 100);
  }
  CHECK(kind_of(dir / "short.ckpt").first == CheckpointError::Kind::Truncated);

  {  // edited shape
    CheckpointFile f = read_checkpoint_file(dir / "good.ckpt");
    for (auto& t : f.tensors)
      if (t.name == "extractor.fc.weight") t.value = Tensor({8, 32});
    write_checkpoint_file(dir / "shape.ckpt", f);
  }
  const auto [kind, tensor] = kind_of(dir / "shape.ckpt");
  CHECK(kind == CheckpointError::Kind::ShapeMismatch);
  CHECK(tensor == "extractor.fc.weight");

  {  // other architecture
    CheckpointFile f = read_checkpoint_file(dir / "good.ckpt");
    f.architecture = "something-else";
    write_checkpoint_file(dir / "arch.ckpt", f);
  }
  CHECK(kind_of(dir / "arch.ckpt").first == CheckpointError::Kind::VersionMismatch);
}

TEST_CASE("forward passes are deterministic") {
  ModelBundle m = ModelBundle::initialized(14);
  Rng rng(15);
  const Tensor x = images(rng, 2, 1, 32, 32);
  Graph a(false), b(false);
  CHECK(m.extractor.forward(a, a.constant(x)).value() == m.extractor.forward(b, b.constant(x)).value());
}
