#pragma once

#include <cstdint>
#include <string>

#include "dielink/manifest.hpp"

namespace dielink::synth {

// Desk-scale ground-truth generator: each "die" is a procedural relief
// texture; each coin is that texture under a small similarity transform,
// an illumination gradient, blur, and pixel noise.
struct SynthParams {
  int n_dies = 4;
  int coins_per_die = 5;
  int image_size = 256;
  double noise_level = 0.05;      // gaussian std, fraction of the range
  double max_rotation_deg = 1.2;
  double max_translation = 2.0;   // px
  double max_scale_jitter = 0.01;
  double illumination = 0.05;     // max relative gradient across the coin
  std::uint64_t seed = 7;
};

// Writes <out_dir>/<coin_id>.png for every coin and returns the manifest
// (ids are "<dataset_id>_d<die>_c<k>", labels "die<die>").
manifest::Manifest generate(const SynthParams& params,
                            const std::string& out_dir,
                            const std::string& dataset_id);

}  // namespace dielink::synth
