#include "syncforge/nn/models.hpp"

#include <cmath>

#include "syncforge/errors.hpp"
#include "syncforge/nn/ops.hpp"

namespace syncforge::nn {

namespace {

void require_input(const Var& x, int channels, int multiple, const char* who) {
  const auto& s = x.shape();
  if (s.size() != 4 || s[1] != channels || s[2] % multiple != 0 || s[3] % multiple != 0 ||
      s[2] < multiple || s[3] < multiple) {
    throw InvalidInput(std::string(who) + ": expected [N," + std::to_string(channels) +
                       ",H,W] with H, W multiples of " + std::to_string(multiple) + ", got " +
                       shape_str(s));
  }
}

}  // namespace

void round_to_float(Tensor& t) {
  for (double& v : t.data()) v = static_cast<double>(static_cast<float>(v));
}

Parameter& Network::param(std::string_view name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw InvalidInput("no parameter named '" + std::string(name) + "'");
}

const Parameter& Network::param(std::string_view name) const {
  return const_cast<Network*>(this)->param(name);
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.numel();
  return n;
}

void Network::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Network::add_conv(const std::string& name, int in, int out, int kernel) {
  params_.emplace_back(prefix_ + "." + name + ".weight", std::vector<int>{out, in, kernel, kernel});
  params_.emplace_back(prefix_ + "." + name + ".bias", std::vector<int>{out});
}

void Network::add_linear(const std::string& name, int in, int out) {
  params_.emplace_back(prefix_ + "." + name + ".weight", std::vector<int>{out, in});
  params_.emplace_back(prefix_ + "." + name + ".bias", std::vector<int>{out});
}

void Network::init_he(Rng& rng) {
  for (auto& p : params_) {
    if (p.value.rank() == 1) {
      p.value.fill(0.0);
      continue;
    }
    std::size_t fan_in = 1;
    for (int i = 1; i < p.value.rank(); ++i) fan_in *= p.value.dim(i);
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : p.value.data()) v = stddev * rng.normal();
    round_to_float(p.value);
  }
  zero_grad();
}

Var Network::bind(Graph& g, const std::string& name) {
  Parameter& p = param(prefix_ + "." + name);
  return trainable ? g.parameter(p) : g.constant(p.value);
}

Var Network::conv(Graph& g, Var x, const std::string& name, int stride, int pad) {
  return conv2d(x, bind(g, name + ".weight"), bind(g, name + ".bias"), stride, pad);
}

// ---------------------------------------------------------------------------

Embedder::Embedder() : Network("embedder") {
  add_conv("c1", 1, 16);
  add_conv("c2", 16, 16);
  add_conv("c3", 16, 32);
  add_conv("c4", 32, 32);
  add_conv("c5", 32, 16);
  add_conv("c6", 32, 16);
  add_conv("c7", 16, 1);
}

void Embedder::init(Rng& rng) {
  init_he(rng);
  param("embedder.c7.weight").value.fill(0.0);
}

Var Embedder::forward(Graph& g, Var x) {
  require_input(x, 1, 4, "embedder");
  const Var skip = relu(conv(g, x, "c1", 1));
  Var h = relu(conv(g, skip, "c2", 2));
  h = relu(conv(g, h, "c3", 2));
  h = relu(conv(g, h, "c4", 1));
  h = upsample_nearest2(h);
  h = relu(conv(g, h, "c5", 1));
  h = upsample_nearest2(h);
  h = relu(conv(g, concat_channels(h, skip), "c6", 1));
  return conv(g, h, "c7", 1);
}

Extractor::Extractor() : Network("extractor") {
  add_conv("c1", 1, 16);
  add_conv("c2", 16, 16);
  add_conv("c3", 16, 32);
  add_conv("c4", 32, 32);
  add_conv("c5", 32, 64);
  add_linear("fc", 64, 8);
}

void Extractor::init(Rng& rng) {
  init_he(rng);
  param("extractor.fc.weight").value.fill(0.0);
  param("extractor.fc.bias").value = Tensor({8}, {-1, -1, 1, -1, 1, 1, -1, 1});
}

Var Extractor::forward(Graph& g, Var x) {
  require_input(x, 1, 8, "extractor");
  Var h = x;
  for (const char* name : {"c1", "c2", "c3", "c4", "c5"}) h = relu(conv(g, h, name, 2));
  return linear(global_avg_pool(h), bind(g, "fc.weight"), bind(g, "fc.bias"));
}

Discriminator::Discriminator() : Network("discriminator") {
  add_conv("c1", 3, 32);
  add_conv("c2", 32, 64);
  add_conv("c3", 64, 128);
  add_conv("out", 128, 1);
}

void Discriminator::init(Rng& rng) { init_he(rng); }

Var Discriminator::forward(Graph& g, Var x) {
  require_input(x, 3, 8, "discriminator");
  Var h = x;
  for (const char* name : {"c1", "c2", "c3"}) h = leaky_relu(conv(g, h, name, 2), 0.2);
  return conv(g, h, "out", 1);
}

// ---------------------------------------------------------------------------

ModelBundle ModelBundle::initialized(std::uint64_t seed, const EmbedConfig& embed) {
  embed.validate();
  ModelBundle b;
  b.embed = embed;
  Rng r1 = Rng::derive(seed, 1), r2 = Rng::derive(seed, 2), r3 = Rng::derive(seed, 3);
  b.embedder.init(r1);
  b.extractor.init(r2);
  b.discriminator.init(r3);
  return b;
}

std::vector<Parameter*> ModelBundle::all_params() {
  std::vector<Parameter*> out;
  for (Network* n : {static_cast<Network*>(&embedder), static_cast<Network*>(&extractor),
                     static_cast<Network*>(&discriminator)})
    for (auto& p : n->params()) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> ModelBundle::all_params() const {
  auto ps = const_cast<ModelBundle*>(this)->all_params();
  return {ps.begin(), ps.end()};
}

}  // namespace syncforge::nn
