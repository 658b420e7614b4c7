#include "gmg/matching.hpp"

#include "gmg/error.hpp"
#include "gmg/sampler.hpp"

#include <cmath>
#include <string>

namespace gmg {

namespace {

void require_same_depth(const FeatureGrid &source, const FeatureGrid &target) {
  if (source.depth() != target.depth()) {
    throw Error(ErrorCode::kDimension,
                "feature depth mismatch: source " +
                    std::to_string(source.depth()) + " vs target " +
                    std::to_string(target.depth()));
  }
}

double norm_of(std::span<const float> f) {
  double sq = 0.0;
  for (float x : f) sq += static_cast<double>(x) * x;
  return std::sqrt(sq);
}

}  // namespace

double cosine_similarity(std::span<const double> a,
                         std::span<const double> b) {
  double dot = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  const double na = std::sqrt(aa);
  const double nb = std::sqrt(bb);
  if (na <= kCosineEpsilon || nb <= kCosineEpsilon) return 0.0;
  return dot / (na * nb);
}

MatchScore matching_score(const FeatureGrid &source, const FeatureGrid &target,
                          const TpsSolved &theta) {
  require_same_depth(source, target);
  const std::size_t depth = target.depth();
  MatchScore score;
  SimilarityMap &map = score.map;
  map.rows = target.rows();
  map.cols = target.cols();
  map.values.assign(target.positions(), 0.0);
  map.valid.assign(target.positions(), 0);

  std::vector<double> sampled(depth);
  std::vector<double> reference(depth);
  for (std::size_t k = 0; k < target.rows(); ++k) {
    for (std::size_t l = 0; l < target.cols(); ++l) {
      const NormCoord warped =
          tps_map(theta, pixel_to_norm(k, l, target.rows(), target.cols()));
      if (!sample_features_into(source, warped, sampled, {}, {})) continue;
      const auto t = target.at(k, l);
      reference.assign(t.begin(), t.end());
      const double phi = cosine_similarity(sampled, reference);
      const std::size_t pos = k * target.cols() + l;
      map.values[pos] = phi;
      map.valid[pos] = 1;
      ++map.valid_count;
      score.phi += phi;
    }
  }
  return score;
}

std::vector<double> matching_score_gradient(const FeatureGrid &source,
                                            const FeatureGrid &target,
                                            const TpsSolved &theta) {
  const MatchingProblem problem(source, target, theta.shared_basis());
  std::vector<double> gradient(problem.num_params());
  problem.evaluate(theta.params().displacements, gradient);
  return gradient;
}

MatchingProblem::MatchingProblem(const FeatureGrid &source,
                                 const FeatureGrid &target,
                                 std::shared_ptr<const TpsBasis> basis)
    : source_(&source), target_(&target), basis_(std::move(basis)) {
  require_same_depth(source, target);
  if (!basis_) throw Error(ErrorCode::kUsage, "matching problem needs a basis");
  const std::size_t n = basis_->num_sites();
  weights_.resize(target.positions() * n);
  target_norms_.resize(target.positions());
  for (std::size_t k = 0; k < target.rows(); ++k) {
    for (std::size_t l = 0; l < target.cols(); ++l) {
      const std::size_t pos = k * target.cols() + l;
      basis_->interpolation_weights(
          pixel_to_norm(k, l, target.rows(), target.cols()),
          std::span<double>(weights_.data() + pos * n, n));
      target_norms_[pos] = norm_of(target.at(k, l));
    }
  }
}

double MatchingProblem::evaluate(std::span<const double> displacements,
                                 std::span<double> gradient,
                                 SimilarityMap *map) const {
  const std::size_t n = basis_->num_sites();
  if (displacements.size() != 2 * n) {
    throw Error(ErrorCode::kDimension, "displacement vector has wrong length");
  }
  const bool want_grad = !gradient.empty();
  if (want_grad) std::fill(gradient.begin(), gradient.end(), 0.0);

  // Displaced control sites, the values interpolated by the weights.
  std::vector<double> ctrl_u(n);
  std::vector<double> ctrl_v(n);
  for (std::size_t m = 0; m < n; ++m) {
    ctrl_u[m] = basis_->sites()[m].u + displacements[m];
    ctrl_v[m] = basis_->sites()[m].v + displacements[n + m];
  }

  if (map != nullptr) {
    map->rows = target_->rows();
    map->cols = target_->cols();
    map->values.assign(target_->positions(), 0.0);
    map->valid.assign(target_->positions(), 0);
    map->valid_count = 0;
  }

  const std::size_t depth = target_->depth();
  std::vector<double> a(depth);
  std::vector<double> da_du(want_grad ? depth : 0);
  std::vector<double> da_dv(want_grad ? depth : 0);
  double phi_total = 0.0;

  for (std::size_t pos = 0; pos < target_->positions(); ++pos) {
    const double *w = weights_.data() + pos * n;
    NormCoord warped{0.0, 0.0};
    for (std::size_t m = 0; m < n; ++m) {
      warped.u += w[m] * ctrl_u[m];
      warped.v += w[m] * ctrl_v[m];
    }
    if (!sample_features_into(*source_, warped, a, da_du, da_dv)) continue;

    const auto b = target_->at(pos / target_->cols(), pos % target_->cols());
    double dot = 0.0;
    double aa = 0.0;
    for (std::size_t ch = 0; ch < depth; ++ch) {
      dot += a[ch] * b[ch];
      aa += a[ch] * a[ch];
    }
    const double na = std::sqrt(aa);
    const double nb = target_norms_[pos];
    double phi = 0.0;
    if (na > kCosineEpsilon && nb > kCosineEpsilon) {
      phi = dot / (na * nb);
      if (want_grad) {
        // dphi/da = b / (|a||b|) - phi * a / |a|^2
        const double inv_ab = 1.0 / (na * nb);
        const double phi_over_aa = phi / aa;
        double gu = 0.0;
        double gv = 0.0;
        for (std::size_t ch = 0; ch < depth; ++ch) {
          const double dphi_da = b[ch] * inv_ab - phi_over_aa * a[ch];
          gu += dphi_da * da_du[ch];
          gv += dphi_da * da_dv[ch];
        }
        for (std::size_t m = 0; m < n; ++m) {
          gradient[m] += gu * w[m];
          gradient[n + m] += gv * w[m];
        }
      }
    }
    phi_total += phi;
    if (map != nullptr) {
      map->values[pos] = phi;
      map->valid[pos] = 1;
      ++map->valid_count;
    }
  }
  return phi_total;
}

}  // namespace gmg
