#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "syncforge/augment.hpp"
#include "syncforge/nn/checkpoint.hpp"
#include "syncforge/nn/models.hpp"

namespace syncforge {

/// Which augmentations the training step samples.
enum class AugmentMode { Full, Identity };

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  int batch = 16;
  int iterations = 2000;
  double lambda_adv = 0.1;
  double grad_clip = 1.0;
  std::uint64_t seed = 0;
  int n_geo = 3;
  int n_val = 2;
  int adv_start_iter = 500;
  int checkpoint_every = 500;  ///< 0 writes only the final checkpoint
  AugmentMode augment = AugmentMode::Full;
  GeometricRanges geo_ranges;
  ValuemetricRanges val_ranges;

  /// Throws InvalidInput when a field is out of range.
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct LossReport {
  double sync = 0.0;
  double adv = 0.0;
  double disc = 0.0;
  double total = 0.0;
  bool skipped = false;
  std::string skip_reason;
};

/// Adam with decoupled weight decay. Parameters and moments are kept
/// float32-representable so checkpoints restore them exactly.
class AdamW {
 public:
  AdamW(std::vector<nn::Parameter*> params, const TrainConfig& cfg);

  /// One update from the parameters' current gradients.
  void step();
  long steps() const noexcept { return t_; }

  /// Moments as named tensors "<prefix>.m.<param>" / "<prefix>.v.<param>".
  std::vector<nn::NamedTensor> state(const std::string& prefix) const;
  void load_state(const std::vector<nn::NamedTensor>& tensors, const std::string& prefix,
                  long steps);

 private:
  std::vector<nn::Parameter*> params_;
  std::vector<nn::Tensor> m_, v_;
  double lr_, b1_, b2_, eps_, wd_;
  long t_ = 0;
};

/// Global gradient norm over the parameters, then rescale so it is at most
/// max_norm. Returns the norm before clipping.
double clip_grad_norm(const std::vector<nn::Parameter*>& params, double max_norm);

/// sum over the 8 coordinates of |pred - gt|, averaged over the batch.
nn::Var sync_loss(nn::Var pred, nn::Var gt);

struct AdversarialLosses {
  nn::Var gen;   ///< -mean(D(fake))
  nn::Var disc;  ///< hinge on D(real) and D(fake) with fake detached
};
/// `gen` lives on `gen_graph` (gradients reach `fake`); `disc` lives on
/// `disc_graph` and sees a detached copy of `fake`.
AdversarialLosses adversarial_losses(nn::Discriminator& d, nn::Graph& gen_graph, nn::Var fake,
                                     nn::Graph& disc_graph, const nn::Tensor& real);

/// One training image at processing resolution with its JND map.
struct TrainSample {
  Image rgb;
  Image luma;
  Image jnd;
};
TrainSample make_train_sample(const Image& rgb, const EmbedConfig& embed);

/// Augmentations drawn for one step.
struct StepPlan {
  std::vector<SamplingGrid> grids;
  std::vector<std::vector<ValuemetricTransform>> valuemetric;  ///< [n_val][batch]
  nn::Tensor gt;                                               ///< [batch, 8]
  std::vector<TransformRecord> records;
};
StepPlan plan_step(Rng& rng, int batch, int h, int w, const TrainConfig& cfg);

struct Optimizers {
  AdamW generator;
  AdamW discriminator;
  static Optimizers make(nn::ModelBundle& model, const TrainConfig& cfg);
};

/// Forward graph of one step. `total` = sync (+ lambda_adv * adv) lives on
/// `g`; `disc` lives on `dg` and sees the watermarked images detached. `adv`
/// is unset unless `adversarial`.
struct GeneratorPass {
  nn::Var watermarked;
  nn::Var pred;
  nn::Var sync;
  nn::Var adv;
  nn::Var total;
  nn::Var disc;
};
GeneratorPass generator_pass(nn::Graph& g, nn::Graph& dg, nn::ModelBundle& model,
                             const std::vector<const TrainSample*>& batch, const StepPlan& plan,
                             bool adversarial, const TrainConfig& cfg);

/// Embed, augment, extract, and update the generator; then update the
/// discriminator on the same batch. A non-finite value anywhere skips the
/// step without touching any parameter.
LossReport train_step(nn::ModelBundle& model, Optimizers& opt,
                      const std::vector<const TrainSample*>& batch, const StepPlan& plan,
                      bool adversarial, const TrainConfig& cfg);

struct TrainResult {
  LossReport last;
  int iterations_run = 0;
  std::filesystem::path log_path;
};

struct TrainOptions {
  std::optional<std::filesystem::path> resume;
  std::optional<std::filesystem::path> log_path;  ///< default: <out>.loss.csv
  /// Stop after this iteration count even if cfg.iterations is larger
  /// (used to simulate an interrupted run).
  std::optional<int> stop_after;
  std::function<void(int, const LossReport&)> on_step;
};

/// Load every PNG in `dir` at processing resolution.
std::vector<TrainSample> load_dataset(const std::filesystem::path& dir, const EmbedConfig& embed,
                                      std::size_t min_images = 64);

/// Full training loop with periodic checkpoints and a CSV loss log
/// (iteration,sync,adv,disc,total). Deterministic given cfg.seed.
TrainResult train(const std::vector<TrainSample>& data, const TrainConfig& cfg,
                  const EmbedConfig& embed, const std::filesystem::path& out,
                  const TrainOptions& options = {});

}  // namespace syncforge
