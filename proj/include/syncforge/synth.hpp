#pragma once

#include <cstdint>
#include <filesystem>

#include "syncforge/image.hpp"
#include "syncforge/rng.hpp"

// Procedural test imagery: gradients, textured shapes and smooth noise with
// no preferred orientation.
namespace syncforge {

Image synth_image(Rng& rng, int height, int width);

/// Write `count` images named img_00000.png, ... into `dir` (created if
/// needed). Image i depends only on (seed, i).
void write_synth_dataset(const std::filesystem::path& dir, int count, int height, int width,
                         std::uint64_t seed);

}  // namespace syncforge
