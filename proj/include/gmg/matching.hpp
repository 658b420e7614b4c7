#pragma once

#include "gmg/tps.hpp"
#include "gmg/types.hpp"

#include <memory>
#include <span>
#include <vector>

namespace gmg {

// Norms at or below this are treated as zero vectors (similarity 0).
inline constexpr double kCosineEpsilon = 1e-8;

double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Per-target-position similarity; positions warped out of frame hold 0.
struct SimilarityMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;
  std::size_t valid_count = 0;

  double at(std::size_t row, std::size_t col) const {
    return values[row * cols + col];
  }
};

struct MatchScore {
  double phi = 0.0;
  SimilarityMap map;
};

// Sum over target positions (k,l) of cos(source(W(k,l)), target(k,l)).
// Evaluates W through tps_map directly.
MatchScore matching_score(const FeatureGrid &source, const FeatureGrid &target,
                          const TpsSolved &theta);

// dPhi/d(displacements), all du then all dv.
std::vector<double> matching_score_gradient(const FeatureGrid &source,
                                            const FeatureGrid &target,
                                            const TpsSolved &theta);

// Matching objective bound to one (source, target, control grid) triple.
// The TPS interpolation weights at every target position are computed once,
// after which W(k,l) is a dot product with the displaced control sites.
// Holds references: both grids must outlive the problem.
class MatchingProblem {
 public:
  MatchingProblem(const FeatureGrid &source, const FeatureGrid &target,
                  std::shared_ptr<const TpsBasis> basis);

  const FeatureGrid &source() const { return *source_; }
  const FeatureGrid &target() const { return *target_; }
  const TpsBasis &basis() const { return *basis_; }
  const std::shared_ptr<const TpsBasis> &shared_basis() const { return basis_; }
  std::size_t num_params() const { return 2 * basis_->num_sites(); }

  // TPS interpolation weights of target position `pos` (row-major index).
  std::span<const double> position_weights(std::size_t pos) const {
    const std::size_t n = basis_->num_sites();
    return {weights_.data() + pos * n, n};
  }

  // Returns Phi. Fills `gradient` (size num_params) when non-empty and `map`
  // when non-null.
  double evaluate(std::span<const double> displacements,
                  std::span<double> gradient,
                  SimilarityMap *map = nullptr) const;

 private:
  const FeatureGrid *source_;
  const FeatureGrid *target_;
  std::shared_ptr<const TpsBasis> basis_;
  std::vector<double> weights_;       // positions x sites
  std::vector<double> target_norms_;  // per target position
};

}  // namespace gmg
