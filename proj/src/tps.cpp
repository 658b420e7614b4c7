#include "gmg/tps.hpp"

#include "gmg/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

namespace gmg {

namespace {

void require_grid_size(int grid_size) {
  if (grid_size < kMinTpsGridSize || grid_size > kMaxTpsGridSize) {
    throw Error(ErrorCode::kUsage, "TPS grid size must be in [2, 8], got " +
                                       std::to_string(grid_size));
  }
}

// Smallest reciprocal condition number accepted before declaring the
// system singular.
constexpr double kMinRcond = 1e-14;

}  // namespace

std::vector<NormCoord> control_sites(int grid_size) {
  require_grid_size(grid_size);
  const auto k = static_cast<std::size_t>(grid_size);
  std::vector<NormCoord> sites;
  sites.reserve(k * k);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      sites.push_back(pixel_to_norm(r, c, k, k));
    }
  }
  return sites;
}

TpsParams TpsParams::identity(int grid_size, double lambda) {
  TpsParams params;
  params.grid_size = grid_size;
  params.lambda = lambda;
  params.displacements.assign(params.num_params(), 0.0);
  params.validate();
  return params;
}

double TpsParams::max_abs_displacement() const {
  double m = 0.0;
  for (double d : displacements) m = std::max(m, std::abs(d));
  return m;
}

void TpsParams::validate() const {
  require_grid_size(grid_size);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kUsage, "TPS regularization must be >= 0");
  }
  if (displacements.size() != num_params()) {
    throw Error(ErrorCode::kDimension,
                "TPS expects " + std::to_string(num_params()) +
                    " displacements, got " +
                    std::to_string(displacements.size()));
  }
  for (double d : displacements) {
    if (!std::isfinite(d)) {
      throw Error(ErrorCode::kNumerical, "non-finite TPS displacement");
    }
  }
}

double tps_kernel(double squared_distance) {
  if (squared_distance <= 0.0) return 0.0;
  return squared_distance * std::log(squared_distance);
}

TpsBasis::TpsBasis(int grid_size, double lambda)
    : grid_size_(grid_size), lambda_(lambda), sites_(control_sites(grid_size)) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kUsage, "TPS regularization must be >= 0");
  }
  const auto n = static_cast<Eigen::Index>(sites_.size());
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(n + 3, n + 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const NormCoord &a = sites_[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j) {
      const NormCoord &b = sites_[static_cast<std::size_t>(j)];
      const double du = a.u - b.u;
      const double dv = a.v - b.v;
      system(i, j) = tps_kernel(du * du + dv * dv);
    }
    system(i, i) += lambda_;
    system(i, n) = 1.0;
    system(i, n + 1) = a.u;
    system(i, n + 2) = a.v;
    system(n, i) = 1.0;
    system(n + 1, i) = a.u;
    system(n + 2, i) = a.v;
  }

  const Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  rcond_ = lu.rcond();
  if (!lu.isInvertible() || !(rcond_ > kMinRcond)) {
    throw Error(ErrorCode::kNumerical,
                "TPS system is singular (rcond " + std::to_string(rcond_) + ")");
  }
  const Eigen::MatrixXd inverse = lu.inverse();
  inverse_.resize(static_cast<std::size_t>((n + 3) * (n + 3)));
  for (Eigen::Index r = 0; r < n + 3; ++r) {
    for (Eigen::Index c = 0; c < n + 3; ++c) {
      inverse_[static_cast<std::size_t>(r * (n + 3) + c)] = inverse(r, c);
    }
  }
}

void TpsBasis::interpolation_weights(NormCoord p, std::span<double> out) const {
  const std::size_t n = sites_.size();
  const std::size_t stride = n + 3;
  // Kernel row [U_1 .. U_n, 1, u, v] times the first n columns of the inverse.
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double du = p.u - sites_[i].u;
    const double dv = p.v - sites_[i].v;
    const double k = tps_kernel(du * du + dv * dv);
    if (k == 0.0) continue;
    const double *row = inverse_.data() + i * stride;
    for (std::size_t m = 0; m < n; ++m) out[m] += k * row[m];
  }
  const double affine_row[3] = {1.0, p.u, p.v};
  for (std::size_t a = 0; a < 3; ++a) {
    const double *row = inverse_.data() + (n + a) * stride;
    for (std::size_t m = 0; m < n; ++m) out[m] += affine_row[a] * row[m];
  }
}

void TpsBasis::solve_coefficients(std::span<const double> values,
                                  std::span<double> out) const {
  const std::size_t n = sites_.size();
  const std::size_t stride = n + 3;
  for (std::size_t r = 0; r < stride; ++r) {
    const double *row = inverse_.data() + r * stride;
    double acc = 0.0;
    for (std::size_t m = 0; m < n; ++m) acc += row[m] * values[m];
    out[r] = acc;
  }
}

TpsSolved solve(const TpsParams &params) {
  params.validate();
  return solve(params,
               std::make_shared<const TpsBasis>(params.grid_size, params.lambda));
}

TpsSolved solve(const TpsParams &params,
                std::shared_ptr<const TpsBasis> basis) {
  params.validate();
  if (!basis || basis->grid_size() != params.grid_size ||
      basis->lambda() != params.lambda) {
    throw Error(ErrorCode::kUsage, "TPS basis does not match parameters");
  }
  const std::size_t n = basis->num_sites();
  std::vector<double> target_u(n);
  std::vector<double> target_v(n);
  for (std::size_t m = 0; m < n; ++m) {
    target_u[m] = basis->sites()[m].u + params.du(m);
    target_v[m] = basis->sites()[m].v + params.dv(m);
  }
  std::vector<double> coef_u(n + 3);
  std::vector<double> coef_v(n + 3);
  basis->solve_coefficients(target_u, coef_u);
  basis->solve_coefficients(target_v, coef_v);

  TpsSolved solved;
  solved.params_ = params;
  solved.basis_ = std::move(basis);
  solved.weights_u_.assign(coef_u.begin(), coef_u.begin() + static_cast<long>(n));
  solved.weights_v_.assign(coef_v.begin(), coef_v.begin() + static_cast<long>(n));
  solved.affine_ = {coef_u[n], coef_u[n + 1], coef_u[n + 2],
                    coef_v[n], coef_v[n + 1], coef_v[n + 2]};
  return solved;
}

NormCoord tps_map(const TpsSolved &solved, NormCoord p) {
  const auto &a = solved.affine();
  double u = a[0] + a[1] * p.u + a[2] * p.v;
  double v = a[3] + a[4] * p.u + a[5] * p.v;
  const auto &sites = solved.basis().sites();
  const auto wu = solved.radial_weights_u();
  const auto wv = solved.radial_weights_v();
  for (std::size_t m = 0; m < sites.size(); ++m) {
    const double du = p.u - sites[m].u;
    const double dv = p.v - sites[m].v;
    const double k = tps_kernel(du * du + dv * dv);
    u += wu[m] * k;
    v += wv[m] * k;
  }
  return {u, v};
}

std::vector<double> tps_jacobian_wrt_params(const TpsSolved &solved,
                                            NormCoord p) {
  const std::size_t n = solved.basis().num_sites();
  std::vector<double> weights(n);
  solved.basis().interpolation_weights(p, weights);
  std::vector<double> jacobian(2 * 2 * n, 0.0);
  for (std::size_t m = 0; m < n; ++m) {
    jacobian[m] = weights[m];              // du'/d(du_m)
    jacobian[2 * n + n + m] = weights[m];  // dv'/d(dv_m)
  }
  return jacobian;
}

}  // namespace gmg
