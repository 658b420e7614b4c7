#pragma once

// Deterministic generators shared by unit and acceptance tests.

#include "gmg/tps.hpp"
#include "gmg/types.hpp"

#include <cstdint>
#include <filesystem>
#include <random>

namespace gmg::testing {

using Rng = std::mt19937_64;

// IID Gaussian vectors normalized to unit length.
FeatureGrid random_unit_grid(Rng &rng, std::size_t rows, std::size_t cols,
                             std::size_t depth);

// Each channel is a sum of a few low-frequency plane waves over the
// normalized frame, so neighbouring vectors differ smoothly in direction.
FeatureGrid smooth_grid(Rng &rng, std::size_t rows, std::size_t cols,
                        std::size_t depth, double max_frequency = 2.0);

FeatureGrid constant_grid(std::size_t rows, std::size_t cols,
                          std::size_t depth, float value = 0.5f);

// Uniform displacements in [-max_abs, max_abs].
TpsParams random_params(Rng &rng, int grid_size, double max_abs);

// Target grid of the given shape whose (k,l) vector is the bilinear sample of
// `source` at W(k,l); out-of-frame positions hold zero vectors.
FeatureGrid warp_grid(const FeatureGrid &source, const TpsSolved &theta,
                      std::size_t rows, std::size_t cols);

// Per target position: which bilinear cell of `source` W(k,l) falls in, or -1
// when out of frame. Equal signatures mean no kink lies between two warps.
std::vector<long> cell_signature(const FeatureGrid &source,
                                 const FeatureGrid &target,
                                 const TpsSolved &theta);

// Central differences of Phi with each target position's validity and
// bilinear cell frozen at `theta`: the smooth branch of Phi that the analytic
// gradient differentiates. Written independently of the library's sampler
// and objective.
std::vector<double> frozen_stencil_fd(const FeatureGrid &source,
                                      const FeatureGrid &target,
                                      const TpsParams &theta, double step);

LabelMask random_mask(Rng &rng, std::size_t rows, std::size_t cols,
                      std::uint16_t classes);

// Fresh directory under the system temp folder, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const std::filesystem::path &path() const { return path_; }
  std::filesystem::path operator/(const std::filesystem::path &p) const {
    return path_ / p;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace gmg::testing
