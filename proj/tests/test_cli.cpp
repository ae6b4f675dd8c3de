#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "syncforge/geometry.hpp"
#include "syncforge/nn/checkpoint.hpp"
#include "syncforge/png_io.hpp"
#include "syncforge/synth.hpp"
#include "test_util.hpp"

using namespace syncforge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr discarded.
Run run(const std::string& args) {
  const std::string cmd = std::string(SYNCFORGE_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path sample_png(const fs::path& dir, int size = 32) {
  Rng rng(3);
  const fs::path p = dir / "in.png";
  write_png(p, synth_image(rng, size, size));
  return p;
}

fs::path untrained_model(const fs::path& dir) {
  const fs::path p = dir / "untrained.ckpt";
  nn::save_checkpoint(nn::ModelBundle::initialized(1, EmbedConfig{0.2, 32, 32}), p);
  return p;
}

}  // namespace

TEST_CASE("augment reports the ground-truth quad of crop then rotate") {
  const auto dir = testutil::temp_dir("cli_fig1");
  const auto in = sample_png(dir);
  const Run r = run("augment -i " + q(in) + " -o " + q(dir / "out.png") +
                    " --spec '[{\"crop\":[0,0,1,1]},{\"rotate\":90}]' --emit-gt " + q(dir / "gt.json"));
  REQUIRE(r.code == 0);
  CornerQuad got;
  from_json(json::parse(r.out)["gt_quad"], got);
  const CornerQuad expected{{{{0, 1}, {0, 0}, {1, 0}, {1, 1}}}};
  CHECK(got == expected);
  CHECK(fs::exists(dir / "out.png"));
  CHECK(json::parse(read_file(dir / "gt.json")).contains("gt_quad"));
}

TEST_CASE("extract prints the quad and its homography") {
  const auto dir = testutil::temp_dir("cli_extract");
  const Run r = run("extract -m " + q(untrained_model(dir)) + " -i " + q(sample_png(dir, 40)));
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CornerQuad got;
  from_json(j["quad"], got);
  CHECK(got == CornerQuad::canonical());
  CHECK(j["matrix"].size() == 9);
}

TEST_CASE("embed and sync round trip through files") {
  const auto dir = testutil::temp_dir("cli_embed");
  const auto model = untrained_model(dir);
  const auto in = sample_png(dir);
  REQUIRE(run("embed -m " + q(model) + " -i " + q(in) + " -o " + q(dir / "w.png")).code == 0);
  const Run s = run("sync -m " + q(model) + " -i " + q(dir / "w.png") + " -o " + q(dir / "r.png"));
  REQUIRE(s.code == 0);
  CHECK(read_png(dir / "r.png").width() == 32);
}

TEST_CASE("help lists every flag with its config key") {
  const Run r = run("train --help");
  CHECK(r.code == 0);
  for (const char* s : {"--lr", "train.lr", "--lambda-adv", "train.lambda_adv", "--dataset",
                        "paths.dataset", "--seed", "--geo-variants", "--rotation-angles", "--resume"})
    CHECK_MESSAGE(r.out.find(s) != std::string::npos, s);
  const Run top = run("--help");
  for (const char* s : {"embed", "extract", "sync", "augment", "train", "eval-grid", "eval-quality",
                        "wrap-demo"})
    CHECK_MESSAGE(top.out.find(s) != std::string::npos, s);
}

TEST_CASE("exit codes") {
  const auto dir = testutil::temp_dir("cli_exit");
  const auto in = sample_png(dir);
  CHECK(run("").code == 1);
  CHECK(run("extract --no-such-flag").code == 1);
  CHECK(run("extract -i " + q(in)).code == 1);  // missing model
  CHECK(run("augment -i " + q(in) + " -o " + q(dir / "o.png") + " --spec '[{\"rotate\":500}]'").code == 1);
  CHECK(run("augment -i " + q(in) + " -o " + q(dir / "o.png") + " --spec '[{\"twist\":1}]'").code == 1);
  CHECK(run("extract -m " + q(dir / "missing.ckpt") + " -i " + q(in)).code == 2);
  {
    std::ofstream bad(dir / "bad.ckpt", std::ios::binary);
    bad << "not a checkpoint at all";
  }
  CHECK(run("extract -m " + q(dir / "bad.ckpt") + " -i " + q(in)).code == 2);
}

TEST_CASE("config file and flags give byte-identical training runs") {
  const auto dir = testutil::temp_dir("cli_config");
  write_synth_dataset(dir / "data", 64, 32, 32, 5);
  const json cfg = {{"seed", 11},
                    {"embed", {{"alpha_w", 0.2}, {"proc_h", 32}, {"proc_w", 32}}},
                    {"train",
                     {{"iterations", 3},
                      {"batch", 2},
                      {"adv_start_iter", 1},
                      {"checkpoint_every", 0},
                      {"lr", 0.002}}},
                    {"paths", {{"dataset", (dir / "data").string()}, {"output", (dir / "a.ckpt").string()}}}};
  std::ofstream(dir / "cfg.json") << cfg.dump(2);
  REQUIRE(run("train -c " + q(dir / "cfg.json")).code == 0);
  REQUIRE(run("train --seed 11 --proc-size 32 --alpha 0.2 --iterations 3 --batch 2 --adv-start 1 "
              "--checkpoint-every 0 --lr 0.002 -d " +
              q(dir / "data") + " -o " + q(dir / "b.ckpt"))
              .code == 0);
  REQUIRE(run("train -c " + q(dir / "cfg.json") + " -o " + q(dir / "c.ckpt")).code == 0);
  CHECK(read_file(dir / "a.ckpt") == read_file(dir / "b.ckpt"));
  CHECK(read_file(dir / "a.ckpt") == read_file(dir / "c.ckpt"));
  CHECK(read_file(dir / "a.loss.csv") == read_file(dir / "b.loss.csv"));

  // A flag overrides the file.
  REQUIRE(run("train -c " + q(dir / "cfg.json") + " -o " + q(dir / "d.ckpt") + " --lr 0.01").code == 0);
  CHECK(read_file(dir / "a.ckpt") != read_file(dir / "d.ckpt"));

  std::ofstream(dir / "typo.json") << R"({"train": {"iteratons": 3}})";
  CHECK(run("train -c " + q(dir / "typo.json")).code == 1);
}

TEST_CASE("eval-grid writes a seeded CSV report") {
  const auto dir = testutil::temp_dir("cli_grid");
  write_synth_dataset(dir / "test", 3, 40, 40, 6);
  const auto model = untrained_model(dir);
  const std::string args = "eval-grid -m " + q(model) + " -d " + q(dir / "test") +
                           " --seed 4 --eval-size 32 --rows Identity 'JPEG 50' --cols Identity HFlip";
  REQUIRE(run(args + " -o " + q(dir / "a")).code == 0);
  REQUIRE(run(args + " -o " + q(dir / "b") + " --threads 2").code == 0);
  const fs::path csv = dir / "a" / "grid_untrained_4.csv";
  REQUIRE(fs::exists(csv));
  CHECK(read_file(csv) == read_file(dir / "b" / "grid_untrained_4.csv"));
  CHECK(read_file(csv).find("Average,Average,") != std::string::npos);
}

TEST_CASE("eval-quality and wrap-demo write their reports") {
  const auto dir = testutil::temp_dir("cli_quality");
  write_synth_dataset(dir / "test", 2, 32, 32, 7);
  const auto model = untrained_model(dir);
  REQUIRE(run("eval-quality -m " + q(model) + " -d " + q(dir / "test") + " -o " + q(dir / "q")).code == 0);
  CHECK(fs::exists(dir / "q" / "quality_untrained.json"));
  REQUIRE(run("wrap-demo -m " + q(model) + " -d " + q(dir / "test") + " -o " + q(dir / "w")).code == 0);
  const json report = json::parse(read_file(dir / "w" / "report.json"));
  CHECK(report.size() == 8);  // 2 images x 4 default transforms
}
