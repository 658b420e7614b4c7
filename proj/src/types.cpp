#include "gmg/types.hpp"

#include "gmg/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace gmg {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage:
      return "usage";
    case ErrorCode::kFormat:
      return "format";
    case ErrorCode::kDimension:
      return "dimension";
    case ErrorCode::kMissingArtifact:
      return "missing";
    case ErrorCode::kNumerical:
      return "numerical";
  }
  return "unknown";
}

namespace {

void require_grid(std::size_t rows, std::size_t cols) {
  if (rows < 2 || cols < 2) {
    throw Error(ErrorCode::kDimension,
                "degenerate grid " + std::to_string(rows) + "x" +
                    std::to_string(cols) + " (need at least 2x2)");
  }
}

}  // namespace

NormCoord pixel_to_norm(std::size_t row, std::size_t col, std::size_t rows,
                        std::size_t cols) {
  require_grid(rows, cols);
  if (row >= rows || col >= cols) {
    throw Error(ErrorCode::kDimension, "pixel index outside grid");
  }
  return {2.0 * static_cast<double>(col) / static_cast<double>(cols - 1) - 1.0,
          2.0 * static_cast<double>(row) / static_cast<double>(rows - 1) - 1.0};
}

PixelCoord norm_to_pixel(NormCoord coord, std::size_t rows, std::size_t cols) {
  require_grid(rows, cols);
  return {(coord.v + 1.0) * 0.5 * static_cast<double>(rows - 1),
          (coord.u + 1.0) * 0.5 * static_cast<double>(cols - 1)};
}

FeatureGrid::FeatureGrid(std::size_t rows, std::size_t cols, std::size_t depth,
                         std::vector<float> values)
    : rows_(rows), cols_(cols), depth_(depth), values_(std::move(values)) {
  require_grid(rows_, cols_);
  if (depth_ < 1) {
    throw Error(ErrorCode::kDimension, "feature depth must be at least 1");
  }
  if (values_.size() != rows_ * cols_ * depth_) {
    throw Error(ErrorCode::kDimension,
                "feature grid holds " + std::to_string(values_.size()) +
                    " values, expected " +
                    std::to_string(rows_ * cols_ * depth_));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      const std::size_t pos = i / depth_;
      throw Error(ErrorCode::kFormat,
                  "non-finite feature at row " + std::to_string(pos / cols_) +
                      " col " + std::to_string(pos % cols_) + " channel " +
                      std::to_string(i % depth_));
    }
  }
}

LabelMask::LabelMask(std::size_t rows, std::size_t cols,
                     std::uint16_t num_classes,
                     std::vector<std::uint8_t> labels)
    : rows_(rows),
      cols_(cols),
      num_classes_(num_classes),
      labels_(std::move(labels)) {
  require_grid(rows_, cols_);
  if (num_classes_ < 1 || num_classes_ > kIgnoreLabel) {
    throw Error(ErrorCode::kDimension,
                "class count must be in [1, 255], got " +
                    std::to_string(num_classes_));
  }
  if (labels_.size() != rows_ * cols_) {
    throw Error(ErrorCode::kDimension, "label count does not match H*W");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] != kIgnoreLabel && labels_[i] >= num_classes_) {
      throw Error(ErrorCode::kDimension,
                  "label " + std::to_string(labels_[i]) + " at pixel " +
                      std::to_string(i) + " exceeds class count " +
                      std::to_string(num_classes_));
    }
  }
}

bool LabelMask::has_ignore() const {
  return std::find(labels_.begin(), labels_.end(), kIgnoreLabel) !=
         labels_.end();
}

ProbabilityMap::ProbabilityMap(std::size_t rows, std::size_t cols,
                               std::uint16_t num_classes,
                               std::vector<float> values)
    : rows_(rows),
      cols_(cols),
      num_classes_(num_classes),
      values_(std::move(values)) {
  require_grid(rows_, cols_);
  if (num_classes_ < 1) {
    throw Error(ErrorCode::kDimension, "probability map needs C >= 1");
  }
  if (values_.size() != rows_ * cols_ * num_classes_) {
    throw Error(ErrorCode::kDimension, "probability count does not match H*W*C");
  }
  for (std::size_t px = 0; px < rows_ * cols_; ++px) {
    double sum = 0.0;
    for (std::size_t c = 0; c < num_classes_; ++c) {
      const float p = values_[px * num_classes_ + c];
      if (!(p >= 0.0f && p <= 1.0f)) {
        throw Error(ErrorCode::kFormat,
                    "probability outside [0,1] at pixel " + std::to_string(px));
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance) {
      throw Error(ErrorCode::kFormat, "probabilities at pixel " +
                                          std::to_string(px) + " sum to " +
                                          std::to_string(sum));
    }
  }
}

CategorySpec::CategorySpec(std::string category_name,
                           std::vector<std::string> part_names)
    : name(std::move(category_name)), parts(std::move(part_names)) {
  if (parts.empty() || parts.size() > kIgnoreLabel) {
    throw Error(ErrorCode::kFormat,
                "category '" + name + "' must list between 1 and 255 parts");
  }
  std::set<std::string> seen;
  for (const auto &part : parts) {
    if (!seen.insert(part).second) {
      throw Error(ErrorCode::kFormat,
                  "duplicate part name '" + part + "' in category " + name);
    }
  }
}

}  // namespace gmg
