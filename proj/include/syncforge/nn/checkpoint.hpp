#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "syncforge/errors.hpp"
#include "syncforge/nn/models.hpp"

// File layout: 8-byte magic "SYNCCKPT", u64 little-endian header length, the
// JSON header, then the tensors as consecutive little-endian float32 blobs.
// Header: {"format": 1, "architecture": tag, "meta": {...},
//          "tensors": [{"name", "shape", "offset", "count"}, ...]}
// with offsets in bytes from the start of the blob section.
namespace syncforge::nn {

inline constexpr int kCheckpointFormat = 1;

class CheckpointError : public Error {
 public:
  enum class Kind { VersionMismatch, Truncated, ShapeMismatch, Io };
  CheckpointError(Kind kind, const std::string& what, std::string tensor = {})
      : Error(what), kind_(kind), tensor_(std::move(tensor)) {}
  Kind kind() const noexcept { return kind_; }
  /// Offending tensor for ShapeMismatch.
  const std::string& tensor() const noexcept { return tensor_; }

 private:
  Kind kind_;
  std::string tensor_;
};

const char* to_string(CheckpointError::Kind kind);

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct CheckpointFile {
  std::string architecture;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedTensor> tensors;
};

/// Values are stored as float32; doubles that are not float-representable
/// are rounded.
void write_checkpoint_file(const std::filesystem::path& path, const CheckpointFile& file);
/// Reads and validates the whole file before returning anything.
CheckpointFile read_checkpoint_file(const std::filesystem::path& path);

/// Extra tensors and metadata stored next to the model (optimizer state).
struct TrainingState {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedTensor> tensors;
};

void save_checkpoint(const ModelBundle& bundle, const std::filesystem::path& path,
                     const TrainingState* state = nullptr);
/// Every model tensor must be present with the architecture's shape.
ModelBundle load_checkpoint(const std::filesystem::path& path, TrainingState* state = nullptr);

}  // namespace syncforge::nn
