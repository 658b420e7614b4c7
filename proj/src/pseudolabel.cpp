#include "gmg/pseudolabel.hpp"

#include "gmg/error.hpp"
#include "gmg/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gmg {

std::size_t ConfidenceMap::valid_count() const {
  return static_cast<std::size_t>(
      std::count_if(valid.begin(), valid.end(), [](std::uint8_t v) { return v; }));
}

void ConfidenceMap::validate() const {
  if (rows < 2 || cols < 2 || scores.size() != rows * cols ||
      valid.size() != rows * cols) {
    throw Error(ErrorCode::kDimension, "confidence map sizes are inconsistent");
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!(scores[i] >= 0.0f && scores[i] <= 1.0f)) {
      throw Error(ErrorCode::kFormat,
                  "confidence outside [0,1] at pixel " + std::to_string(i));
    }
    if (valid[i] > 1 || (valid[i] == 0 && scores[i] != 0.0f)) {
      throw Error(ErrorCode::kFormat,
                  "invalid pixel " + std::to_string(i) + " carries a score");
    }
  }
}

LabelMask warp_source_label(const LabelMask &source_label,
                            const TpsSolved &theta, std::size_t out_rows,
                            std::size_t out_cols) {
  return warp_labels(
      source_label, [&](NormCoord p) { return tps_map(theta, p); }, out_rows,
      out_cols);
}

ConfidenceMap confidence_scores(const LabelMask &warped_label,
                                const ProbabilityMap &target_probs) {
  if (warped_label.rows() != target_probs.rows() ||
      warped_label.cols() != target_probs.cols()) {
    throw Error(ErrorCode::kDimension,
                "warped label and probability map differ in shape");
  }
  if (warped_label.num_classes() != target_probs.num_classes()) {
    throw Error(ErrorCode::kDimension,
                "label class count " +
                    std::to_string(warped_label.num_classes()) +
                    " differs from probability map C " +
                    std::to_string(target_probs.num_classes()));
  }
  ConfidenceMap out;
  out.rows = target_probs.rows();
  out.cols = target_probs.cols();
  out.scores.assign(out.rows * out.cols, 0.0f);
  out.valid.assign(out.rows * out.cols, 0);
  for (std::size_t k = 0; k < out.rows; ++k) {
    for (std::size_t l = 0; l < out.cols; ++l) {
      const std::uint8_t c = warped_label.at(k, l);
      if (c == kIgnoreLabel) continue;
      out.scores[k * out.cols + l] = target_probs.at(k, l, c);
      out.valid[k * out.cols + l] = 1;
    }
  }
  return out;
}

ConfidenceMap confidence_scores(const LabelMask &source_label,
                                const TpsSolved &theta,
                                const ProbabilityMap &target_probs) {
  if (source_label.num_classes() != target_probs.num_classes()) {
    throw Error(ErrorCode::kDimension,
                "source label and probability map disagree on class count");
  }
  return confidence_scores(
      warp_source_label(source_label, theta, target_probs.rows(),
                        target_probs.cols()),
      target_probs);
}

Threshold percentile_threshold(std::span<const ConfidenceMap> maps,
                               double percentile) {
  if (!(percentile > 0.0 && percentile < 100.0)) {
    throw Error(ErrorCode::kUsage, "percentile must lie in (0, 100)");
  }
  std::vector<float> pooled;
  for (const auto &map : maps) {
    for (std::size_t i = 0; i < map.scores.size(); ++i) {
      if (map.valid[i]) pooled.push_back(map.scores[i]);
    }
  }
  if (pooled.empty()) {
    throw Error(ErrorCode::kNumerical,
                "no valid confidence scores to take a percentile of");
  }
  const auto n = static_cast<double>(pooled.size());
  auto rank = static_cast<std::size_t>(std::ceil(percentile * n / 100.0));
  rank = std::clamp<std::size_t>(rank, 1, pooled.size());
  auto nth = pooled.begin() + static_cast<long>(rank - 1);
  std::nth_element(pooled.begin(), nth, pooled.end());
  return {*nth, percentile, pooled.size()};
}

PseudoLabel threshold_labels(const LabelMask &warped_label,
                             const ConfidenceMap &confidences,
                             const Threshold &gamma) {
  if (warped_label.rows() != confidences.rows ||
      warped_label.cols() != confidences.cols ||
      confidences.scores.size() != warped_label.size()) {
    throw Error(ErrorCode::kDimension,
                "confidence map does not match the warped label shape");
  }
  std::vector<std::uint8_t> labels(warped_label.size(), kIgnoreLabel);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::uint8_t c = warped_label.labels()[i];
    if (c == kIgnoreLabel || !confidences.valid[i]) continue;
    if (static_cast<double>(confidences.scores[i]) > gamma.gamma) {
      labels[i] = c;
      ++kept;
    }
  }
  PseudoLabel out{LabelMask(warped_label.rows(), warped_label.cols(),
                            warped_label.num_classes(), std::move(labels)),
                  0.0};
  out.coverage = static_cast<double>(kept) / static_cast<double>(out.mask.size());
  return out;
}

PseudoLabel make_pseudolabel(const LabelMask &source_label,
                             const TpsSolved &theta,
                             const ConfidenceMap &confidences,
                             const Threshold &gamma) {
  return threshold_labels(
      warp_source_label(source_label, theta, confidences.rows, confidences.cols),
      confidences, gamma);
}

CrossEntropy cross_entropy(const ProbabilityMap &probs, const LabelMask &label) {
  if (probs.rows() != label.rows() || probs.cols() != label.cols() ||
      probs.num_classes() != label.num_classes()) {
    throw Error(ErrorCode::kDimension,
                "probability map and label disagree in shape or class count");
  }
  CrossEntropy out;
  for (std::size_t r = 0; r < label.rows(); ++r) {
    for (std::size_t c = 0; c < label.cols(); ++c) {
      const std::uint8_t y = label.at(r, c);
      if (y == kIgnoreLabel) continue;
      const double p = std::max<double>(probs.at(r, c, y), kProbabilityFloor);
      out.total -= std::log(p);
      ++out.pixel_count;
    }
  }
  if (out.pixel_count > 0) {
    out.mean = out.total / static_cast<double>(out.pixel_count);
  }
  return out;
}

double joint_loss(std::span<const double> source_losses,
                  std::span<const double> target_losses, double lambda) {
  if (!(lambda >= 0.0)) {
    throw Error(ErrorCode::kUsage, "loss balance lambda must be >= 0");
  }
  double source = 0.0;
  for (double l : source_losses) source += l;
  double target = 0.0;
  for (double l : target_losses) target += l;
  return source + lambda * target;
}

}  // namespace gmg
