#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "syncforge/perceptual.hpp"
#include "syncforge/training.hpp"

namespace syncforge {

struct PathConfig {
  std::string input;
  std::string output;
  std::string model;
  std::string dataset;
  std::string emit_gt;
  std::string resume;
  std::string log;
};

struct EvalConfig {
  int eval_h = 64;
  int eval_w = 64;
  std::vector<std::string> rows;        ///< valuemetric labels; empty = defaults
  std::vector<std::string> cols;        ///< geometric labels; empty = defaults
  std::vector<std::string> transforms;  ///< wrap-demo transform specs
};

/// Everything a command can be told, from a JSON file and/or flags.
struct GlobalConfig {
  std::uint64_t seed = 0;
  int threads = 1;
  EmbedConfig embed;
  TrainConfig train;
  PathConfig paths;
  EvalConfig eval;
  std::string spec;  ///< augment transform spec

  void validate() const;
};

/// Unknown keys anywhere are rejected with InvalidInput. A top-level "seed"
/// also becomes the training seed.
GlobalConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GlobalConfig& c);
GlobalConfig load_config(const std::filesystem::path& path);

}  // namespace syncforge
