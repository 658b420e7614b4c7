#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gmg {

// Reserved label for pixels that carry no supervision.
inline constexpr std::uint8_t kIgnoreLabel = 255;

// Slack on the frame test absorbing round-off of warps that map the frame
// onto itself (e.g. the identity TPS evaluates 1 as 1 + 2e-16).
inline constexpr double kFrameSlack = 1e-9;

// Continuous coordinate in the corner-aligned frame [-1,1]^2. u runs along
// columns, v along rows; (-1,-1) is the centre of the top-left pixel/node.
struct NormCoord {
  double u = 0.0;
  double v = 0.0;

  // Boundary counts as inside. NaN coordinates are never inside.
  bool in_bounds() const {
    constexpr double lim = 1.0 + kFrameSlack;
    return u >= -lim && u <= lim && v >= -lim && v <= lim;
  }
};

struct PixelCoord {
  double row = 0.0;
  double col = 0.0;
};

NormCoord pixel_to_norm(std::size_t row, std::size_t col, std::size_t rows,
                        std::size_t cols);
PixelCoord norm_to_pixel(NormCoord coord, std::size_t rows, std::size_t cols);

// h x w grid of d-dimensional feature vectors, stored row-major by
// (row, col, channel). Values are always finite.
class FeatureGrid {
 public:
  FeatureGrid(std::size_t rows, std::size_t cols, std::size_t depth,
              std::vector<float> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t depth() const { return depth_; }
  std::size_t positions() const { return rows_ * cols_; }

  std::span<const float> at(std::size_t row, std::size_t col) const {
    return {values_.data() + (row * cols_ + col) * depth_, depth_};
  }
  std::span<const float> values() const { return values_; }

  friend bool operator==(const FeatureGrid &, const FeatureGrid &) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::size_t depth_;
  std::vector<float> values_;
};

// H x W categorical map. Every label is < num_classes or kIgnoreLabel.
class LabelMask {
 public:
  LabelMask(std::size_t rows, std::size_t cols, std::uint16_t num_classes,
            std::vector<std::uint8_t> labels);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return labels_.size(); }
  std::uint16_t num_classes() const { return num_classes_; }

  std::uint8_t at(std::size_t row, std::size_t col) const {
    return labels_[row * cols_ + col];
  }
  std::span<const std::uint8_t> labels() const { return labels_; }
  bool has_ignore() const;

  friend bool operator==(const LabelMask &, const LabelMask &) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::uint16_t num_classes_;
  std::vector<std::uint8_t> labels_;
};

// Per-pixel class distribution, H x W x C row-major.
class ProbabilityMap {
 public:
  static constexpr double kSimplexTolerance = 1e-4;

  ProbabilityMap(std::size_t rows, std::size_t cols,
                 std::uint16_t num_classes, std::vector<float> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::uint16_t num_classes() const { return num_classes_; }

  float at(std::size_t row, std::size_t col, std::size_t c) const {
    return values_[(row * cols_ + col) * num_classes_ + c];
  }
  std::span<const float> values() const { return values_; }

  friend bool operator==(const ProbabilityMap &,
                         const ProbabilityMap &) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::uint16_t num_classes_;
  std::vector<float> values_;
};

// Ordered part list of one object category. Index 0 is the background.
struct CategorySpec {
  std::string name;
  std::vector<std::string> parts;

  CategorySpec(std::string category_name, std::vector<std::string> part_names);

  std::uint16_t num_classes() const {
    return static_cast<std::uint16_t>(parts.size());
  }
};

}  // namespace gmg
