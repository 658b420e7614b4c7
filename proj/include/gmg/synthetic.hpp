#pragma once

// Procedural stand-in for rendered CAD data: small "vehicles" built from
// ellipsoid parts, ray-cast orthographically from a viewpoint, with known
// per-pixel part labels.

#include "gmg/features.hpp"
#include "gmg/tps.hpp"
#include "gmg/types.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace gmg::synthetic {

inline constexpr int kPrototypes = 3;
inline constexpr std::uint16_t kClasses = 4;  // background, body, cabin, wheel

CategorySpec category();

struct View {
  int prototype = 0;
  double azimuth = 0.0;    // degrees
  double elevation = 5.0;  // degrees
};

struct Rendering {
  RgbImage image;
  LabelMask labels;
};

// Square render of `size` pixels. `texture_seed` varies surface stripes,
// colours and the backdrop. With `warp`, output pixel p shows what the plain
// render shows at W(p).
Rendering render(const View &view, std::size_t size, std::uint64_t texture_seed,
                 const TpsSolved *warp = nullptr);

void add_pixel_noise(RgbImage &image, std::mt19937_64 &rng, double sigma);

// A segmentation-network stand-in: softmax of sharpness * box-blurred
// one-hot ground truth plus Gaussian logit noise. IGNORE pixels are uniform.
ProbabilityMap simulate_probabilities(const LabelMask &truth, std::mt19937_64 &rng,
                                      double sharpness = 4.0, int blur_radius = 2,
                                      double logit_noise = 0.8);

struct DatasetConfig {
  std::size_t image_size = 128;
  int targets = 12;
  double target_warp = 0.06;   // max |displacement| of the target TPS
  double pixel_noise = 6.0;    // sigma, 0..255 scale
  std::uint64_t seed = 7;
};

// Layout under `root`:
//   category.txt, pool.tsv (features point at pool/features/<id>.fgrd,
//   which `gmg features` creates), pool/images/<id>.png,
//   pool/labels/<id>.lmsk, targets/images/<name>.png,
//   targets/gt/<name>.lmsk, targets/probs/<name>.pmap.
struct Dataset {
  std::filesystem::path root;
  std::vector<std::uint64_t> pool_ids;
  std::vector<std::string> targets;
  // Pool entry each target was derived from, parallel to `targets`.
  std::vector<std::uint64_t> target_sources;
};

Dataset write_dataset(const std::filesystem::path &root, const DatasetConfig &config);

}  // namespace gmg::synthetic
