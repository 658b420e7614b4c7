#include "gmg/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace gmg {

namespace {

// Lower node of the interpolation cell and the fractional offset within it.
// The last node reuses the previous cell with offset 1 so every in-bounds
// coordinate has a complete 2x2 stencil.
struct CellPos {
  std::size_t lower;
  double frac;
};

CellPos locate(double pixel, std::size_t extent) {
  const double last = static_cast<double>(extent - 1);
  pixel = std::clamp(pixel, 0.0, last);  // only slack-sized corrections
  double base = std::floor(pixel);
  if (base >= last) base = last - 1.0;
  if (base < 0.0) base = 0.0;
  return {static_cast<std::size_t>(base), pixel - base};
}

}  // namespace

bool sample_features_into(const FeatureGrid &grid, NormCoord p,
                          std::span<double> value, std::span<double> d_du,
                          std::span<double> d_dv) {
  const std::size_t depth = grid.depth();
  const bool want_grad = !d_du.empty();
  if (!p.in_bounds()) {
    std::fill(value.begin(), value.end(), 0.0);
    if (want_grad) {
      std::fill(d_du.begin(), d_du.end(), 0.0);
      std::fill(d_dv.begin(), d_dv.end(), 0.0);
    }
    return false;
  }

  const PixelCoord px = norm_to_pixel(p, grid.rows(), grid.cols());
  const CellPos row = locate(px.row, grid.rows());
  const CellPos col = locate(px.col, grid.cols());
  const double t = col.frac;
  const double s = row.frac;

  const auto f00 = grid.at(row.lower, col.lower);
  const auto f01 = grid.at(row.lower, col.lower + 1);
  const auto f10 = grid.at(row.lower + 1, col.lower);
  const auto f11 = grid.at(row.lower + 1, col.lower + 1);

  const double w00 = (1.0 - s) * (1.0 - t);
  const double w01 = (1.0 - s) * t;
  const double w10 = s * (1.0 - t);
  const double w11 = s * t;
  for (std::size_t ch = 0; ch < depth; ++ch) {
    value[ch] = w00 * f00[ch] + w01 * f01[ch] + w10 * f10[ch] + w11 * f11[ch];
  }

  if (want_grad) {
    // d(pixel)/d(norm) = (extent - 1) / 2 on each axis.
    const double col_scale = 0.5 * static_cast<double>(grid.cols() - 1);
    const double row_scale = 0.5 * static_cast<double>(grid.rows() - 1);
    for (std::size_t ch = 0; ch < depth; ++ch) {
      const double d_dcol =
          (1.0 - s) * (f01[ch] - f00[ch]) + s * (f11[ch] - f10[ch]);
      const double d_drow =
          (1.0 - t) * (f10[ch] - f00[ch]) + t * (f11[ch] - f01[ch]);
      d_du[ch] = d_dcol * col_scale;
      d_dv[ch] = d_drow * row_scale;
    }
  }
  return true;
}

SampleResult sample_features(const FeatureGrid &grid, NormCoord p) {
  SampleResult result;
  result.value.resize(grid.depth());
  result.d_du.resize(grid.depth());
  result.d_dv.resize(grid.depth());
  result.valid =
      sample_features_into(grid, p, result.value, result.d_du, result.d_dv);
  return result;
}

std::uint8_t sample_label(const LabelMask &mask, NormCoord p) {
  if (!p.in_bounds()) return kIgnoreLabel;
  const PixelCoord px = norm_to_pixel(p, mask.rows(), mask.cols());
  // ceil(x - 0.5) rounds half-way cases down.
  const auto nearest = [](double x, std::size_t extent) {
    const double r = std::ceil(x - 0.5);
    return static_cast<std::size_t>(
        std::clamp(r, 0.0, static_cast<double>(extent - 1)));
  };
  return mask.at(nearest(px.row, mask.rows()), nearest(px.col, mask.cols()));
}

}  // namespace gmg
