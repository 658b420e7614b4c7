#pragma once

#include "gmg/tps.hpp"
#include "gmg/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gmg {

// Per-target-pixel confidence z = p_target(c_bar), where c_bar is the warped
// source label. Pixels warped out of frame are invalid and hold z = 0.
struct ConfidenceMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> scores;
  std::vector<std::uint8_t> valid;

  std::size_t valid_count() const;
  // Throws kDimension/kFormat if sizes disagree, a score leaves [0,1] or an
  // invalid pixel carries a non-zero score.
  void validate() const;

  friend bool operator==(const ConfidenceMap &, const ConfidenceMap &) = default;
};

inline constexpr double kDefaultPercentile = 60.0;

struct Threshold {
  double gamma = 0.0;
  double percentile = kDefaultPercentile;
  std::size_t sample_count = 0;
};

struct PseudoLabel {
  LabelMask mask;
  double coverage = 0.0;  // fraction of non-IGNORE pixels
};

struct CrossEntropy {
  double total = 0.0;  // sum over non-IGNORE pixels
  double mean = 0.0;   // total / pixel_count, 0 when no pixels
  std::size_t pixel_count = 0;
};

inline constexpr double kProbabilityFloor = 1e-12;

// Source label pulled back onto an out_rows x out_cols target grid through W.
LabelMask warp_source_label(const LabelMask &source_label,
                            const TpsSolved &theta, std::size_t out_rows,
                            std::size_t out_cols);

ConfidenceMap confidence_scores(const LabelMask &source_label,
                                const TpsSolved &theta,
                                const ProbabilityMap &target_probs);

// Same scoring given an already-warped label (IGNORE marks out-of-frame).
ConfidenceMap confidence_scores(const LabelMask &warped_label,
                                const ProbabilityMap &target_probs);

// Nearest-rank percentile over the pooled valid scores of all maps:
// gamma is the ceil(p/100 * n)-th smallest of n scores, 0 < p < 100.
Threshold percentile_threshold(std::span<const ConfidenceMap> maps,
                               double percentile = kDefaultPercentile);

PseudoLabel make_pseudolabel(const LabelMask &source_label,
                             const TpsSolved &theta,
                             const ConfidenceMap &confidences,
                             const Threshold &gamma);

// Keeps a warped label only where z > gamma (strictly) and the pixel is valid.
PseudoLabel threshold_labels(const LabelMask &warped_label,
                             const ConfidenceMap &confidences,
                             const Threshold &gamma);

CrossEntropy cross_entropy(const ProbabilityMap &probs, const LabelMask &label);

// sum(source) + lambda * sum(target), lambda >= 0.
double joint_loss(std::span<const double> source_losses,
                  std::span<const double> target_losses, double lambda);

}  // namespace gmg
