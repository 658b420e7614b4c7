#include "gmg/optimizer.hpp"

#include "gmg/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gmg {

void OptimConfig::validate() const {
  const auto positive = [](double x) { return x > 0.0 && std::isfinite(x); };
  if (max_iters < 1) throw Error(ErrorCode::kUsage, "max_iters must be >= 1");
  if (!positive(step) || !positive(epsilon) || !positive(rel_tol) ||
      !positive(max_displacement)) {
    throw Error(ErrorCode::kUsage,
                "step, epsilon, rel_tol and displacement clamp must be > 0");
  }
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw Error(ErrorCode::kUsage, "moment decays must lie in (0,1)");
  }
  if (patience < 1 || max_halvings < 0) {
    throw Error(ErrorCode::kUsage, "invalid convergence window");
  }
  if (grid_size < kMinTpsGridSize || grid_size > kMaxTpsGridSize) {
    throw Error(ErrorCode::kUsage, "TPS grid size must be in [2, 8]");
  }
  if (!(tps_lambda >= 0.0)) {
    throw Error(ErrorCode::kUsage, "TPS regularization must be >= 0");
  }
}

namespace {

// Keeps positions that currently add a positive similarity inside the frame.
//
// Phi drops by a whole cosine when a position leaves [-1,1]^2, a jump the
// gradient cannot see. At the identity every edge position lies exactly on
// the frame, so an unconstrained step nearly always pushes some of them out
// and is rejected at every step size. W is linear in the displacements, so
// "position p stays in frame after a step of length `rate` along x" is the
// pair of half-spaces -(1 + w_p) <= rate * b_p . x <= 1 - w_p per axis; the
// step direction is projected onto their intersection (Hildreth's method on
// the violated constraints). Axes decouple: u uses the first n components.
class FrameGuard {
 public:
  explicit FrameGuard(const MatchingProblem &problem) : problem_(problem) {}

  void update(std::span<const double> theta, const SimilarityMap &map) {
    const std::size_t n = problem_.basis().num_sites();
    const auto &sites = problem_.basis().sites();
    guarded_.clear();
    for (std::size_t pos = 0; pos < map.values.size(); ++pos) {
      if (!map.valid[pos] || !(map.values[pos] > 0.0)) continue;
      const auto b = problem_.position_weights(pos);
      double u = 0.0, v = 0.0, bb = 0.0;
      for (std::size_t m = 0; m < n; ++m) {
        u += b[m] * (sites[m].u + theta[m]);
        v += b[m] * (sites[m].v + theta[n + m]);
        bb += b[m] * b[m];
      }
      guarded_.push_back({pos, u, v, bb});
    }
  }

  void project(std::span<const double> direction, double rate, std::span<double> out) const {
    const std::size_t n = problem_.basis().num_sites();
    for (int axis = 0; axis < 2; ++axis) {
      project_axis(direction.subspan(axis * n, n), rate, axis, out.subspan(axis * n, n));
    }
  }

 private:
  struct Guarded {
    std::size_t pos;
    double u, v, weight_norm2;
  };
  struct Constraint {
    std::size_t guarded;
    double sign;   // +1: upper edge, -1: lower edge
    double bound;  // sign * (b . x) <= bound
    double lambda = 0.0;
  };

  double row_dot(const Constraint &c, std::span<const double> x) const {
    const auto b = problem_.position_weights(guarded_[c.guarded].pos);
    double s = 0.0;
    for (std::size_t m = 0; m < x.size(); ++m) s += b[m] * x[m];
    return c.sign * s;
  }

  void project_axis(std::span<const double> d, double rate, int axis,
                    std::span<double> x) const {
    constexpr double kViolation = 1e-12;
    std::copy(d.begin(), d.end(), x.begin());
    std::vector<Constraint> active;
    std::vector<std::uint8_t> added(2 * guarded_.size(), 0);
    for (int round = 0; round < 50; ++round) {
      bool grew = false;
      for (std::size_t g = 0; g < guarded_.size(); ++g) {
        const double w = axis == 0 ? guarded_[g].u : guarded_[g].v;
        for (int side = 0; side < 2; ++side) {
          if (added[2 * g + side]) continue;
          Constraint c{g, side == 0 ? 1.0 : -1.0, 0.0};
          c.bound = std::max(0.0, (side == 0 ? 1.0 - w : 1.0 + w)) / rate;
          if (row_dot(c, x) > c.bound + kViolation) {
            active.push_back(c);
            added[2 * g + side] = 1;
            grew = true;
          }
        }
      }
      if (!grew) return;
      for (int sweep = 0; sweep < 2000; ++sweep) {
        double largest = 0.0;
        for (auto &c : active) {
          const double norm2 = guarded_[c.guarded].weight_norm2;
          const double step = std::max(-c.lambda, (row_dot(c, x) - c.bound) / norm2);
          if (step == 0.0) continue;
          c.lambda += step;
          const auto b = problem_.position_weights(guarded_[c.guarded].pos);
          for (std::size_t m = 0; m < x.size(); ++m) x[m] -= step * c.sign * b[m];
          largest = std::max(largest, std::abs(step) * std::sqrt(norm2));
        }
        if (largest < 1e-14) break;
      }
    }
  }

  const MatchingProblem &problem_;
  std::vector<Guarded> guarded_;
};

}  // namespace

MatchResult optimize_transform(const FeatureGrid &source,
                               const FeatureGrid &target,
                               const OptimConfig &config) {
  config.validate();
  const MatchingProblem problem(
      source, target,
      std::make_shared<const TpsBasis>(config.grid_size, config.tps_lambda));
  return optimize_transform(problem, config);
}

MatchResult optimize_transform(const MatchingProblem &problem,
                               const OptimConfig &config) {
  config.validate();
  if (problem.basis().grid_size() != config.grid_size ||
      problem.basis().lambda() != config.tps_lambda) {
    throw Error(ErrorCode::kUsage, "matching problem basis differs from config");
  }
  const std::size_t np = problem.num_params();
  const auto check_finite = [](double phi) {
    if (!std::isfinite(phi)) {
      throw Error(ErrorCode::kNumerical, "matching score is not finite");
    }
  };

  std::vector<double> theta(np, 0.0);
  std::vector<double> grad(np);
  SimilarityMap map;
  double phi = problem.evaluate(theta, grad, &map);
  check_finite(phi);
  FrameGuard guard(problem);
  guard.update(theta, map);

  MatchResult result;
  result.phi_history.push_back(phi);

  std::vector<double> m1(np, 0.0);
  std::vector<double> m2(np, 0.0);
  std::vector<double> direction(np);
  std::vector<double> candidate(np);
  std::vector<double> candidate_grad(np);
  std::vector<double> step_dir(np);
  SimilarityMap candidate_map;
  double beta1_pow = 1.0;
  double beta2_pow = 1.0;

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    result.iterations = iter;
    if (std::all_of(grad.begin(), grad.end(),
                    [](double g) { return g == 0.0; })) {
      result.converged = true;
      break;
    }

    beta1_pow *= config.beta1;
    beta2_pow *= config.beta2;
    for (std::size_t i = 0; i < np; ++i) {
      m1[i] = config.beta1 * m1[i] + (1.0 - config.beta1) * grad[i];
      m2[i] = config.beta2 * m2[i] + (1.0 - config.beta2) * grad[i] * grad[i];
      const double m_hat = m1[i] / (1.0 - beta1_pow);
      const double v_hat = m2[i] / (1.0 - beta2_pow);
      direction[i] = m_hat / (std::sqrt(v_hat) + config.epsilon);
    }

    bool accepted = false;
    double rate = config.step;
    for (int halving = 0; halving <= config.max_halvings; ++halving) {
      guard.project(direction, rate, step_dir);
      for (std::size_t i = 0; i < np; ++i) {
        candidate[i] = std::clamp(theta[i] + rate * step_dir[i],
                                  -config.max_displacement,
                                  config.max_displacement);
      }
      const double candidate_phi = problem.evaluate(candidate, candidate_grad, &candidate_map);
      check_finite(candidate_phi);
      if (candidate_phi >= phi) {
        theta.swap(candidate);
        grad.swap(candidate_grad);
        std::swap(map, candidate_map);
        guard.update(theta, map);
        phi = candidate_phi;
        accepted = true;
        break;
      }
      rate *= 0.5;
    }
    if (!accepted) {
      // No ascent at the smallest step: local maximum at this resolution.
      result.converged = true;
      break;
    }
    result.phi_history.push_back(phi);

    const std::size_t count = result.phi_history.size();
    const auto window = static_cast<std::size_t>(config.patience);
    if (count > window) {
      const double before = result.phi_history[count - 1 - window];
      const double scale = std::max(std::abs(before), 1e-12);
      if ((phi - before) / scale < config.rel_tol) {
        result.converged = true;
        break;
      }
    }
  }

  result.theta_hat.grid_size = config.grid_size;
  result.theta_hat.lambda = config.tps_lambda;
  result.theta_hat.displacements = theta;
  // Reported through the direct objective so that Phi is reproducible
  // bit-for-bit by anyone holding theta_hat; the cached-weight path used
  // during the ascent differs from it in the last few ulps.
  MatchScore final_score = matching_score(problem.source(), problem.target(),
                                          solve(result.theta_hat, problem.shared_basis()));
  result.phi = final_score.phi;
  result.map = std::move(final_score.map);
  return result;
}

std::vector<double> finite_diff_gradient(const FeatureGrid &source,
                                         const FeatureGrid &target,
                                         const TpsParams &theta, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::kUsage, "FD step must be > 0");
  theta.validate();
  const auto basis =
      std::make_shared<const TpsBasis>(theta.grid_size, theta.lambda);
  std::vector<double> gradient(theta.num_params());
  TpsParams probe = theta;
  for (std::size_t i = 0; i < theta.num_params(); ++i) {
    probe.displacements[i] = theta.displacements[i] + step;
    const double plus = matching_score(source, target, solve(probe, basis)).phi;
    probe.displacements[i] = theta.displacements[i] - step;
    const double minus = matching_score(source, target, solve(probe, basis)).phi;
    probe.displacements[i] = theta.displacements[i];
    gradient[i] = (plus - minus) / (2.0 * step);
  }
  return gradient;
}

namespace {

struct CellSignature {
  bool valid;
  long row;
  long col;

  bool operator==(const CellSignature &) const = default;
};

long cell_index(double pixel, std::size_t extent) {
  return std::clamp(static_cast<long>(std::floor(pixel)), 0L,
                    static_cast<long>(extent) - 2);
}

std::vector<CellSignature> signatures(const FeatureGrid &source,
                                      const FeatureGrid &target,
                                      const TpsSolved &solved) {
  std::vector<CellSignature> out;
  out.reserve(target.positions());
  for (std::size_t k = 0; k < target.rows(); ++k) {
    for (std::size_t l = 0; l < target.cols(); ++l) {
      const NormCoord w =
          tps_map(solved, pixel_to_norm(k, l, target.rows(), target.cols()));
      if (!w.in_bounds()) {
        out.push_back({false, 0, 0});
        continue;
      }
      const PixelCoord px = norm_to_pixel(w, source.rows(), source.cols());
      out.push_back({true, cell_index(px.row, source.rows()),
                     cell_index(px.col, source.cols())});
    }
  }
  return out;
}

}  // namespace

bool StencilStability::all_cells_stable() const {
  return std::all_of(cells_stable.begin(), cells_stable.end(),
                     [](std::uint8_t s) { return s != 0; });
}

StencilStability fd_stencil_stability(const FeatureGrid &source,
                                      const FeatureGrid &target,
                                      const TpsParams &theta, double step) {
  theta.validate();
  const auto basis =
      std::make_shared<const TpsBasis>(theta.grid_size, theta.lambda);
  const auto centre = signatures(source, target, solve(theta, basis));
  StencilStability out;
  out.validity_stable.assign(theta.num_params(), 1);
  out.cells_stable.assign(theta.num_params(), 1);
  TpsParams probe = theta;
  for (std::size_t i = 0; i < theta.num_params(); ++i) {
    for (double sign : {1.0, -1.0}) {
      probe.displacements[i] = theta.displacements[i] + sign * step;
      const auto moved = signatures(source, target, solve(probe, basis));
      for (std::size_t p = 0; p < centre.size(); ++p) {
        if (moved[p].valid != centre[p].valid) out.validity_stable[i] = 0;
        if (!(moved[p] == centre[p])) out.cells_stable[i] = 0;
      }
    }
    probe.displacements[i] = theta.displacements[i];
  }
  return out;
}

GradientComparison compare_gradients(std::span<const double> analytic,
                                     std::span<const double> numeric,
                                     std::span<const std::uint8_t> mask,
                                     double rel_tol, double abs_tol,
                                     double magnitude_floor) {
  if (analytic.size() != numeric.size() ||
      (!mask.empty() && mask.size() != analytic.size())) {
    throw Error(ErrorCode::kDimension, "gradient length mismatch");
  }
  GradientComparison out;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    if (!mask.empty() && mask[i] == 0) continue;
    ++out.compared;
    const double diff = std::abs(analytic[i] - numeric[i]);
    const double magnitude = std::max(std::abs(analytic[i]), std::abs(numeric[i]));
    if (!std::isfinite(diff)) {
      out.passed = false;
      out.max_rel_error = INFINITY;
      continue;
    }
    if (magnitude >= magnitude_floor) {
      out.max_rel_error = std::max(out.max_rel_error, diff / magnitude);
      if (diff / magnitude >= rel_tol) out.passed = false;
    } else {
      out.max_abs_error_small = std::max(out.max_abs_error_small, diff);
      if (diff >= abs_tol) out.passed = false;
    }
  }
  return out;
}

}  // namespace gmg
