#pragma once

#include "gmg/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gmg {

// Bilinear feature sample with its derivative w.r.t. the normalized
// coordinate. Out-of-bounds samples are all zeros with valid == false.
struct SampleResult {
  std::vector<double> value;
  std::vector<double> d_du;
  std::vector<double> d_dv;
  bool valid = false;
};

SampleResult sample_features(const FeatureGrid &grid, NormCoord p);

// Allocation-free variant. `value` must have grid.depth() entries; the
// derivative spans may be empty when not needed. Returns validity.
bool sample_features_into(const FeatureGrid &grid, NormCoord p,
                          std::span<double> value, std::span<double> d_du,
                          std::span<double> d_dv);

// Nearest-neighbour label; ties go to the smaller row, then smaller column.
// Out-of-bounds returns kIgnoreLabel.
std::uint8_t sample_label(const LabelMask &mask, NormCoord p);

// Warps `mask` onto an out_rows x out_cols grid, pulling each output pixel
// from mask at map(norm(k,l)).
template <typename Map>
LabelMask warp_labels(const LabelMask &mask, Map &&map, std::size_t out_rows,
                      std::size_t out_cols) {
  std::vector<std::uint8_t> out(out_rows * out_cols);
  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      out[r * out_cols + c] =
          sample_label(mask, map(pixel_to_norm(r, c, out_rows, out_cols)));
    }
  }
  return LabelMask(out_rows, out_cols, mask.num_classes(), std::move(out));
}

}  // namespace gmg
