#include "gmg/warp.hpp"

#include "gmg/error.hpp"
#include "gmg/io.hpp"
#include "gmg/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace gmg {

FeatureGrid warp_features(const FeatureGrid &input, const TpsSolved &theta,
                          std::size_t out_rows, std::size_t out_cols) {
  const std::size_t d = input.depth();
  std::vector<float> out(out_rows * out_cols * d, 0.0f);
  std::vector<double> value(d);
  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      const NormCoord p = tps_map(theta, pixel_to_norm(r, c, out_rows, out_cols));
      if (!sample_features_into(input, p, value, {}, {})) continue;
      float *dst = out.data() + (r * out_cols + c) * d;
      for (std::size_t ch = 0; ch < d; ++ch) dst[ch] = static_cast<float>(value[ch]);
    }
  }
  return FeatureGrid(out_rows, out_cols, d, std::move(out));
}

RgbImage warp_image(const RgbImage &input, const TpsSolved &theta,
                    std::size_t out_rows, std::size_t out_cols) {
  if (input.pixels.size() != input.rows * input.cols * 3) {
    throw Error(ErrorCode::kDimension, "image buffer does not match its shape");
  }
  const FeatureGrid as_grid(input.rows, input.cols, 3,
                            std::vector<float>(input.pixels.begin(), input.pixels.end()));
  const FeatureGrid warped = warp_features(as_grid, theta, out_rows, out_cols);
  RgbImage out(out_rows, out_cols);
  const auto v = warped.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(v[i], 0.0f, 255.0f)));
  }
  return out;
}

RgbImage colorize_labels(const LabelMask &mask) {
  RgbImage out(mask.rows(), mask.cols());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const auto rgb = palette_color(mask.labels()[i]);
    std::copy(rgb.begin(), rgb.end(), out.pixels.begin() + static_cast<long>(3 * i));
  }
  return out;
}

RgbImage blend_overlay(const RgbImage &base, const LabelMask &mask, double alpha) {
  if (base.rows != mask.rows() || base.cols != mask.cols()) {
    throw Error(ErrorCode::kDimension,
                "overlay image is " + std::to_string(base.rows) + "x" +
                    std::to_string(base.cols) + " but the mask is " +
                    std::to_string(mask.rows()) + "x" + std::to_string(mask.cols()));
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kUsage, "overlay alpha must lie in [0,1]");
  }
  const RgbImage colours = colorize_labels(mask);
  RgbImage out(base.rows, base.cols);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const double v = (1.0 - alpha) * base.pixels[i] + alpha * colours.pixels[i];
    out.pixels[i] = static_cast<std::uint8_t>(std::lround(v));
  }
  return out;
}

}  // namespace gmg
