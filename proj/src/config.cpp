#include "syncforge/config.hpp"

#include <fstream>
#include <set>

#include "syncforge/errors.hpp"

namespace syncforge {

using nlohmann::json;

namespace {

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidInput("config: '" + where + "' must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) {
      throw InvalidInput("config: unknown key '" + (where.empty() ? k : where + "." + k) + "'");
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidInput("config: '" + (where.empty() ? std::string(key) : where + "." + key) +
                       "' has the wrong type");
  }
}

}  // namespace

void GlobalConfig::validate() const {
  embed.validate();
  train.validate();
  if (threads < 1) throw InvalidInput("config: threads must be at least 1");
  if (eval.eval_h < 8 || eval.eval_w < 8) throw InvalidInput("config: evaluation size must be at least 8");
}

GlobalConfig config_from_json(const json& j) {
  only_keys(j, {"seed", "threads", "embed", "train", "paths", "eval", "spec"}, "");
  GlobalConfig c;
  read(j, "threads", c.threads, "");
  read(j, "spec", c.spec, "");
  if (j.contains("embed")) {
    const json& e = j["embed"];
    only_keys(e, {"alpha_w", "proc_h", "proc_w"}, "embed");
    read(e, "alpha_w", c.embed.alpha_w, "embed");
    read(e, "proc_h", c.embed.proc_h, "embed");
    read(e, "proc_w", c.embed.proc_w, "embed");
  }
  if (j.contains("train")) c.train = train_config_from_json(j["train"]);
  c.seed = c.train.seed;
  read(j, "seed", c.seed, "");
  c.train.seed = c.seed;
  if (j.contains("paths")) {
    const json& p = j["paths"];
    only_keys(p, {"input", "output", "model", "dataset", "emit_gt", "resume", "log"}, "paths");
    read(p, "input", c.paths.input, "paths");
    read(p, "output", c.paths.output, "paths");
    read(p, "model", c.paths.model, "paths");
    read(p, "dataset", c.paths.dataset, "paths");
    read(p, "emit_gt", c.paths.emit_gt, "paths");
    read(p, "resume", c.paths.resume, "paths");
    read(p, "log", c.paths.log, "paths");
  }
  if (j.contains("eval")) {
    const json& e = j["eval"];
    only_keys(e, {"eval_h", "eval_w", "rows", "cols", "transforms"}, "eval");
    read(e, "eval_h", c.eval.eval_h, "eval");
    read(e, "eval_w", c.eval.eval_w, "eval");
    read(e, "rows", c.eval.rows, "eval");
    read(e, "cols", c.eval.cols, "eval");
    read(e, "transforms", c.eval.transforms, "eval");
  }
  return c;
}

json to_json(const GlobalConfig& c) {
  return {{"seed", c.seed},
          {"threads", c.threads},
          {"embed", {{"alpha_w", c.embed.alpha_w}, {"proc_h", c.embed.proc_h}, {"proc_w", c.embed.proc_w}}},
          {"train", to_json(c.train)},
          {"paths",
           {{"input", c.paths.input},
            {"output", c.paths.output},
            {"model", c.paths.model},
            {"dataset", c.paths.dataset},
            {"emit_gt", c.paths.emit_gt},
            {"resume", c.paths.resume},
            {"log", c.paths.log}}},
          {"eval",
           {{"eval_h", c.eval.eval_h},
            {"eval_w", c.eval.eval_w},
            {"rows", c.eval.rows},
            {"cols", c.eval.cols},
            {"transforms", c.eval.transforms}}},
          {"spec", c.spec}};
}

GlobalConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw InvalidInput("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace syncforge
