#pragma once

#include "gmg/matching.hpp"
#include "gmg/tps.hpp"
#include "gmg/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gmg {

struct OptimConfig {
  int max_iters = 200;
  double step = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double rel_tol = 1e-6;
  double max_displacement = 1.0;
  // Convergence window and per-iteration step-halving budget.
  int patience = 10;
  int max_halvings = 5;
  // Transformation family.
  int grid_size = kDefaultTpsGridSize;
  double tps_lambda = 0.0;

  void validate() const;
};

struct MatchResult {
  TpsParams theta_hat;
  double phi = 0.0;
  int iterations = 0;
  bool converged = false;
  SimilarityMap map;
  // Accepted Phi values, starting with the identity initialization.
  std::vector<double> phi_history;
};

// Adaptive-moment gradient ascent on Phi from the identity warp. A step is
// accepted only if Phi does not decrease; otherwise the step size is halved
// (up to max_halvings times) before giving up. Deterministic.
MatchResult optimize_transform(const FeatureGrid &source,
                               const FeatureGrid &target,
                               const OptimConfig &config);
MatchResult optimize_transform(const MatchingProblem &problem,
                               const OptimConfig &config);

// Central differences of matching_score per displacement component.
std::vector<double> finite_diff_gradient(const FeatureGrid &source,
                                         const FeatureGrid &target,
                                         const TpsParams &theta, double step);

// Which displacement components have a kink-free central-difference stencil:
// validity_stable means no target position enters or leaves the frame between
// theta - step*e_i and theta + step*e_i; cells_stable additionally requires
// that no position crosses a bilinear cell boundary.
struct StencilStability {
  std::vector<std::uint8_t> validity_stable;
  std::vector<std::uint8_t> cells_stable;

  bool all_cells_stable() const;
};

StencilStability fd_stencil_stability(const FeatureGrid &source,
                                      const FeatureGrid &target,
                                      const TpsParams &theta, double step);

// Mixed tolerance used by every gradient check: components whose magnitude
// max(|analytic|, |fd|) is at least `magnitude_floor` must agree to
// `rel_tol` relative error, smaller ones to `abs_tol` absolute error.
struct GradientComparison {
  double max_rel_error = 0.0;
  double max_abs_error_small = 0.0;
  std::size_t compared = 0;
  bool passed = true;
};

GradientComparison compare_gradients(std::span<const double> analytic,
                                     std::span<const double> numeric,
                                     std::span<const std::uint8_t> mask = {},
                                     double rel_tol = 1e-3,
                                     double abs_tol = 1e-6,
                                     double magnitude_floor = 1e-3);

}  // namespace gmg
