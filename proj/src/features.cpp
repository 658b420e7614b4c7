#include "gmg/features.hpp"

#include "gmg/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace gmg {

void DescriptorConfig::validate() const {
  if (cell_size < 2) throw Error(ErrorCode::kUsage, "cell size must be >= 2");
  if (bins < 2) throw Error(ErrorCode::kUsage, "orientation bins must be >= 2");
  if (!(magnitude_floor >= 0.0) || !(norm_epsilon > 0.0)) {
    throw Error(ErrorCode::kUsage, "descriptor floors must be non-negative");
  }
}

FeatureGrid extract_descriptors(const RgbImage &image,
                                const DescriptorConfig &config) {
  config.validate();
  const std::size_t s = config.cell_size;
  if (image.pixels.size() != image.rows * image.cols * 3) {
    throw Error(ErrorCode::kDimension, "image buffer does not match its shape");
  }
  if (image.rows < 2 * s || image.cols < 2 * s) {
    throw Error(ErrorCode::kDimension,
                "image " + std::to_string(image.rows) + "x" +
                    std::to_string(image.cols) +
                    " is smaller than two cells of " + std::to_string(s) +
                    " pixels per axis");
  }
  const std::size_t H = image.rows, W = image.cols;
  std::vector<double> gray(H * W);
  for (std::size_t i = 0; i < H * W; ++i) {
    const std::uint8_t *p = image.pixels.data() + 3 * i;
    gray[i] = (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
  }

  const std::size_t grid_rows = H / s, grid_cols = W / s;
  const std::size_t B = config.bins;
  const std::size_t depth = B + 3;
  std::vector<float> values(grid_rows * grid_cols * depth, 0.0f);
  std::vector<double> desc(depth);

  for (std::size_t gr = 0; gr < grid_rows; ++gr) {
    for (std::size_t gc = 0; gc < grid_cols; ++gc) {
      std::fill(desc.begin(), desc.end(), 0.0);
      std::uint64_t rgb[3] = {0, 0, 0};
      for (std::size_t r = gr * s; r < (gr + 1) * s; ++r) {
        const std::size_t up = r == 0 ? 0 : r - 1;
        const std::size_t down = std::min(r + 1, H - 1);
        for (std::size_t c = gc * s; c < (gc + 1) * s; ++c) {
          const std::size_t left = c == 0 ? 0 : c - 1;
          const std::size_t right = std::min(c + 1, W - 1);
          double gx = 0.5 * (gray[r * W + right] - gray[r * W + left]);
          double gy = 0.5 * (gray[down * W + c] - gray[up * W + c]);
          const double mag = std::sqrt(gx * gx + gy * gy);
          if (mag > config.magnitude_floor) {
            // Fold opposite directions onto one half-plane before atan2 so
            // the orientation of g and -g is the same number bit for bit.
            if (gy < 0.0 || (gy == 0.0 && gx < 0.0)) {
              gx = -gx;
              gy = -gy;
            }
            double angle = std::atan2(gy, gx);
            if (angle >= std::numbers::pi) angle = 0.0;
            auto bin = static_cast<std::size_t>(
                angle / std::numbers::pi * static_cast<double>(B));
            desc[std::min(bin, B - 1)] += mag;
          }
          const std::uint8_t *p = image.at(r, c);
          rgb[0] += p[0];
          rgb[1] += p[1];
          rgb[2] += p[2];
        }
      }
      const double count = static_cast<double>(s * s) * 255.0;
      for (int k = 0; k < 3; ++k) {
        desc[B + k] = static_cast<double>(rgb[k]) / count;
      }
      double norm = 0.0;
      for (double x : desc) norm += x * x;
      norm = std::sqrt(norm);
      float *out = values.data() + (gr * grid_cols + gc) * depth;
      if (norm > config.norm_epsilon) {
        for (std::size_t k = 0; k < depth; ++k) {
          out[k] = static_cast<float>(desc[k] / norm);
        }
      }
    }
  }
  return FeatureGrid(grid_rows, grid_cols, depth, std::move(values));
}

FeatureGridReport validate_feature_grid(std::size_t rows, std::size_t cols,
                                        std::size_t depth,
                                        std::span<const float> values) {
  FeatureGridReport report;
  if (values.size() != rows * cols * depth || depth == 0) {
    throw Error(ErrorCode::kDimension, "feature values do not match h*w*d");
  }
  report.channel_mean.assign(depth, 0.0);
  report.channel_std.assign(depth, 0.0);
  std::vector<std::size_t> finite_count(depth, 0);
  std::size_t near_zero = 0;
  const std::size_t positions = rows * cols;
  for (std::size_t i = 0; i < positions; ++i) {
    double norm2 = 0.0;
    bool vector_finite = true;
    for (std::size_t ch = 0; ch < depth; ++ch) {
      const float x = values[i * depth + ch];
      if (!std::isfinite(x)) {
        vector_finite = false;
        if (report.finite) {
          report.finite = false;
          report.first_non_finite = GridPosition{i / cols, i % cols, ch};
        }
        continue;
      }
      report.channel_mean[ch] += x;
      ++finite_count[ch];
      norm2 += static_cast<double>(x) * x;
    }
    if (vector_finite && std::sqrt(norm2) < kNearZeroNorm) ++near_zero;
  }
  for (std::size_t ch = 0; ch < depth; ++ch) {
    if (finite_count[ch] > 0) {
      report.channel_mean[ch] /= static_cast<double>(finite_count[ch]);
    }
  }
  for (std::size_t i = 0; i < positions; ++i) {
    for (std::size_t ch = 0; ch < depth; ++ch) {
      const float x = values[i * depth + ch];
      if (!std::isfinite(x)) continue;
      const double d = x - report.channel_mean[ch];
      report.channel_std[ch] += d * d;
    }
  }
  for (std::size_t ch = 0; ch < depth; ++ch) {
    if (finite_count[ch] > 0) {
      report.channel_std[ch] = std::sqrt(report.channel_std[ch] /
                                         static_cast<double>(finite_count[ch]));
    }
  }
  report.near_zero_fraction =
      positions == 0 ? 0.0
                     : static_cast<double>(near_zero) / static_cast<double>(positions);
  report.flagged = report.near_zero_fraction > 0.5;
  return report;
}

FeatureGridReport validate_feature_grid(const FeatureGrid &grid) {
  return validate_feature_grid(grid.rows(), grid.cols(), grid.depth(),
                               grid.values());
}

}  // namespace gmg
