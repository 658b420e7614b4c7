#pragma once

#include "gmg/features.hpp"
#include "gmg/tps.hpp"
#include "gmg/types.hpp"

namespace gmg {

// Pulls each output position (k,l) from the input at W(k,l). Features and
// images are sampled bilinearly; positions mapped out of frame become zero
// vectors (black pixels).
FeatureGrid warp_features(const FeatureGrid &input, const TpsSolved &theta,
                          std::size_t out_rows, std::size_t out_cols);
RgbImage warp_image(const RgbImage &input, const TpsSolved &theta,
                    std::size_t out_rows, std::size_t out_cols);

RgbImage colorize_labels(const LabelMask &mask);

// Per pixel: (1 - alpha) * base + alpha * palette colour, rounded.
RgbImage blend_overlay(const RgbImage &base, const LabelMask &mask,
                       double alpha = 0.5);

}  // namespace gmg
