#include "syncforge/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

namespace syncforge::nn {

namespace {

constexpr char kMagic[8] = {'S', 'Y', 'N', 'C', 'C', 'K', 'P', 'T'};

using Kind = CheckpointError::Kind;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

void put_f32(std::string& out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

float get_f32(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<float>(bits);
}

std::size_t count_of(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

}  // namespace

const char* to_string(CheckpointError::Kind kind) {
  switch (kind) {
    case Kind::VersionMismatch: return "version-mismatch";
    case Kind::Truncated: return "truncated";
    case Kind::ShapeMismatch: return "shape-mismatch";
    case Kind::Io: return "io";
  }
  return "unknown";
}

void write_checkpoint_file(const std::filesystem::path& path, const CheckpointFile& file) {
  nlohmann::json header;
  header["format"] = kCheckpointFormat;
  header["architecture"] = file.architecture;
  header["meta"] = file.meta;
  header["tensors"] = nlohmann::json::array();
  std::string blob;
  for (const auto& t : file.tensors) {
    header["tensors"].push_back({{"name", t.name},
                                 {"shape", t.value.shape()},
                                 {"offset", blob.size()},
                                 {"count", t.value.numel()}});
    for (double v : t.value.data()) put_f32(blob, static_cast<float>(v));
  }
  const std::string text = header.dump();
  std::string out(kMagic, sizeof kMagic);
  put_u64(out, text.size());
  out += text;
  out += blob;

  // Write to a sibling file and rename, so a crash never leaves a partial
  // checkpoint under the final name.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError(Kind::Io, "cannot write checkpoint '" + path.string() + "'");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw CheckpointError(Kind::Io, "failed writing checkpoint '" + path.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CheckpointError(Kind::Io, "cannot move checkpoint into place: " + ec.message());
}

CheckpointFile read_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError(Kind::Io, "cannot open checkpoint '" + path.string() + "'");
  const std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const std::string where = " in checkpoint '" + path.string() + "'";

  if (data.size() < 16 || std::memcmp(data.data(), kMagic, sizeof kMagic) != 0) {
    throw CheckpointError(Kind::VersionMismatch, "unrecognized file header" + where);
  }
  const std::uint64_t header_len = get_u64(data.data() + 8);
  if (header_len > data.size() - 16) {
    throw CheckpointError(Kind::Truncated, "header extends past end of file" + where);
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(data.begin() + 16, data.begin() + 16 + header_len);
  } catch (const nlohmann::json::exception&) {
    throw CheckpointError(Kind::VersionMismatch, "unreadable header" + where);
  }
  if (!header.is_object() || header.value("format", -1) != kCheckpointFormat ||
      !header.contains("architecture") || !header["architecture"].is_string() ||
      !header.contains("tensors") || !header["tensors"].is_array()) {
    throw CheckpointError(Kind::VersionMismatch,
                          "unsupported checkpoint format (expected format " +
                              std::to_string(kCheckpointFormat) + ")" + where);
  }

  CheckpointFile out;
  out.architecture = header["architecture"].get<std::string>();
  out.meta = header.value("meta", nlohmann::json::object());
  const std::size_t blob_start = 16 + header_len;
  const std::size_t blob_size = data.size() - blob_start;
  for (const auto& entry : header["tensors"]) {
    std::string name;
    std::vector<int> shape;
    std::size_t offset = 0, count = 0;
    try {
      name = entry.at("name").get<std::string>();
      shape = entry.at("shape").get<std::vector<int>>();
      offset = entry.at("offset").get<std::size_t>();
      count = entry.at("count").get<std::size_t>();
    } catch (const nlohmann::json::exception&) {
      throw CheckpointError(Kind::VersionMismatch, "malformed tensor entry" + where);
    }
    for (int d : shape)
      if (d <= 0) throw CheckpointError(Kind::ShapeMismatch, "tensor '" + name + "' has a non-positive dimension" + where, name);
    if (shape.empty() || shape.size() > 4 || count_of(shape) != count) {
      throw CheckpointError(Kind::ShapeMismatch,
                            "tensor '" + name + "' shape " + shape_str(shape) +
                                " does not match its element count " + std::to_string(count) + where,
                            name);
    }
    if (offset > blob_size || count * 4 > blob_size - offset) {
      throw CheckpointError(Kind::Truncated, "data for tensor '" + name + "' is truncated" + where);
    }
    Tensor t(shape);
    const char* p = data.data() + blob_start + offset;
    for (std::size_t i = 0; i < count; ++i) t[i] = get_f32(p + 4 * i);
    out.tensors.push_back({name, std::move(t)});
  }
  return out;
}

void save_checkpoint(const ModelBundle& bundle, const std::filesystem::path& path,
                     const TrainingState* state) {
  CheckpointFile file;
  file.architecture = std::string(kArchitectureTag);
  file.meta = bundle.meta.is_object() ? bundle.meta : nlohmann::json::object();
  file.meta["embed"] = {{"alpha_w", bundle.embed.alpha_w},
                        {"proc_h", bundle.embed.proc_h},
                        {"proc_w", bundle.embed.proc_w}};
  for (const Parameter* p : bundle.all_params()) file.tensors.push_back({p->name, p->value});
  if (state) {
    file.meta["training"] = state->meta;
    for (const auto& t : state->tensors) file.tensors.push_back(t);
  }
  write_checkpoint_file(path, file);
}

ModelBundle load_checkpoint(const std::filesystem::path& path, TrainingState* state) {
  CheckpointFile file = read_checkpoint_file(path);
  if (file.architecture != kArchitectureTag) {
    throw CheckpointError(Kind::VersionMismatch, "checkpoint architecture '" + file.architecture +
                                                     "' is not '" + std::string(kArchitectureTag) +
                                                     "'");
  }
  std::map<std::string, Tensor*> by_name;
  for (auto& t : file.tensors) by_name[t.name] = &t.value;

  ModelBundle bundle;
  for (Parameter* p : bundle.all_params()) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) {
      throw CheckpointError(Kind::ShapeMismatch, "checkpoint lacks tensor '" + p->name + "'",
                            p->name);
    }
    if (it->second->shape() != p->value.shape()) {
      throw CheckpointError(Kind::ShapeMismatch,
                            "tensor '" + p->name + "' has shape " +
                                shape_str(it->second->shape()) + ", architecture expects " +
                                shape_str(p->value.shape()),
                            p->name);
    }
  }
  for (Parameter* p : bundle.all_params()) {
    p->value = std::move(*by_name[p->name]);
    p->zero_grad();
    by_name.erase(p->name);
  }

  if (file.meta.contains("embed")) {
    const auto& e = file.meta["embed"];
    bundle.embed.alpha_w = e.value("alpha_w", bundle.embed.alpha_w);
    bundle.embed.proc_h = e.value("proc_h", bundle.embed.proc_h);
    bundle.embed.proc_w = e.value("proc_w", bundle.embed.proc_w);
    bundle.embed.validate();
  }
  bundle.meta = file.meta;
  bundle.meta.erase("embed");
  bundle.meta.erase("training");
  if (state) {
    state->meta = file.meta.value("training", nlohmann::json::object());
    state->tensors.clear();
    for (auto& t : file.tensors)
      if (by_name.count(t.name)) state->tensors.push_back({t.name, std::move(t.value)});
  }
  return bundle;
}

}  // namespace syncforge::nn
