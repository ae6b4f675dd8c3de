// Writes a procedural PNG dataset for training and evaluation.

#include <iostream>

#include "CLI11.hpp"

#include "syncforge/errors.hpp"
#include "syncforge/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic textured PNG dataset."};
  std::string out;
  int count = 512, size = 64;
  std::uint64_t seed = 0;
  app.add_option("-o,--output", out, "Output directory")->required();
  app.add_option("-n,--count", count, "Number of images")->check(CLI::PositiveNumber);
  app.add_option("--size", size, "Square image size in pixels")->check(CLI::Range(8, 4096));
  app.add_option("--seed", seed, "Random seed");
  CLI11_PARSE(app, argc, argv);
  try {
    syncforge::write_synth_dataset(out, count, size, size, seed);
  } catch (const std::exception& e) {
    std::cerr << "syncforge-synth: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
