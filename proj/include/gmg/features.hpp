#pragma once

#include "gmg/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace gmg {

// 8-bit interleaved RGB raster, row-major.
struct RgbImage {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;  // rows * cols * 3

  RgbImage() = default;
  RgbImage(std::size_t r, std::size_t c)
      : rows(r), cols(c), pixels(r * c * 3, 0) {}

  std::uint8_t *at(std::size_t r, std::size_t c) {
    return pixels.data() + (r * cols + c) * 3;
  }
  const std::uint8_t *at(std::size_t r, std::size_t c) const {
    return pixels.data() + (r * cols + c) * 3;
  }

  friend bool operator==(const RgbImage &, const RgbImage &) = default;
};

struct DescriptorConfig {
  std::size_t cell_size = 16;
  std::size_t bins = 8;
  double magnitude_floor = 1e-6;
  double norm_epsilon = 1e-8;

  void validate() const;
};

// Per cell of cell_size^2 pixels: a magnitude-weighted histogram of unsigned
// gradient orientations over [0, pi), then the mean RGB in [0,1], the whole
// vector L2-normalized. Depth is bins + 3. Trailing partial cells are dropped.
FeatureGrid extract_descriptors(const RgbImage &image,
                                const DescriptorConfig &config = {});

struct GridPosition {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t channel = 0;
};

struct FeatureGridReport {
  bool finite = true;
  std::optional<GridPosition> first_non_finite;
  std::vector<double> channel_mean;
  std::vector<double> channel_std;
  double near_zero_fraction = 0.0;
  bool flagged = false;  // more than half the vectors are near zero
};

inline constexpr double kNearZeroNorm = 1e-8;

// Works on raw values so grids that would not construct (NaN) still get a
// report.
FeatureGridReport validate_feature_grid(std::size_t rows, std::size_t cols,
                                        std::size_t depth,
                                        std::span<const float> values);
FeatureGridReport validate_feature_grid(const FeatureGrid &grid);

}  // namespace gmg
