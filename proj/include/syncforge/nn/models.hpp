#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "syncforge/nn/graph.hpp"
#include "syncforge/perceptual.hpp"
#include "syncforge/rng.hpp"

namespace syncforge::nn {

inline constexpr std::string_view kArchitectureTag = "syncforge-toy-v1";

/// A fixed-architecture network: an ordered list of named parameters plus a
/// forward function. Parameter storage never reallocates after construction,
/// so graphs may hold pointers into it.
class Network {
 public:
  virtual ~Network() = default;

  std::vector<Parameter>& params() noexcept { return params_; }
  const std::vector<Parameter>& params() const noexcept { return params_; }
  Parameter& param(std::string_view name);
  const Parameter& param(std::string_view name) const;
  std::size_t parameter_count() const;
  void zero_grad();

  /// When false, forward binds the weights as graph constants, so no
  /// gradient reaches them.
  bool trainable = true;

 protected:
  explicit Network(std::string prefix) : prefix_(std::move(prefix)) {}
  void add_conv(const std::string& name, int in, int out, int kernel = 3);
  void add_linear(const std::string& name, int in, int out);
  /// He-normal weights (rounded to float32) and zero biases.
  void init_he(Rng& rng);

  Var bind(Graph& g, const std::string& name);
  Var conv(Graph& g, Var x, const std::string& name, int stride, int pad = 1);

  std::string prefix_;
  std::vector<Parameter> params_;
};

/// Encoder-decoder with one skip connection. [N,1,H,W] -> pre-tanh residual
/// [N,1,H,W]; H and W must be multiples of 4.
class Embedder : public Network {
 public:
  Embedder();
  /// The last layer starts at zero, so the untrained embedder is a no-op.
  void init(Rng& rng);
  Var forward(Graph& g, Var luma);
};

/// Strided conv stack, global pooling and a linear head. [N,1,H,W] -> [N,8]
/// corner coordinates (TL, TR, BR, BL as x, y pairs).
class Extractor : public Network {
 public:
  Extractor();
  /// Zero head weights and identity-quad head bias.
  void init(Rng& rng);
  Var forward(Graph& g, Var luma);
};

/// Patch discriminator. [N,3,H,W] -> logits [N,1,H/8,W/8]; H, W multiples of 8.
class Discriminator : public Network {
 public:
  Discriminator();
  void init(Rng& rng);
  Var forward(Graph& g, Var rgb);
};

struct ModelBundle {
  Embedder embedder;
  Extractor extractor;
  Discriminator discriminator;
  EmbedConfig embed;
  nlohmann::json meta = nlohmann::json::object();

  /// Fresh weights from `seed`.
  static ModelBundle initialized(std::uint64_t seed, const EmbedConfig& embed = {});

  /// All parameters in checkpoint order (embedder, extractor, discriminator).
  std::vector<Parameter*> all_params();
  std::vector<const Parameter*> all_params() const;
};

/// Round every element to the nearest float32 value.
void round_to_float(Tensor& t);

}  // namespace syncforge::nn
