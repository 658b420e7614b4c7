#pragma once

#include "gmg/types.hpp"

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace gmg {

inline constexpr int kDefaultTpsGridSize = 5;
inline constexpr int kMinTpsGridSize = 2;
inline constexpr int kMaxTpsGridSize = 8;

// Regular K x K control sites over [-1,1]^2, row-major (site m = r*K + c).
std::vector<NormCoord> control_sites(int grid_size);

// Thin-plate-spline parameters: per-site displacements of the regular control
// grid. Stored flat as all du followed by all dv, matching the TPSP layout.
struct TpsParams {
  int grid_size = kDefaultTpsGridSize;
  double lambda = 0.0;
  std::vector<double> displacements;

  static TpsParams identity(int grid_size = kDefaultTpsGridSize,
                            double lambda = 0.0);

  std::size_t num_sites() const {
    return static_cast<std::size_t>(grid_size) * grid_size;
  }
  std::size_t num_params() const { return 2 * num_sites(); }

  double du(std::size_t site) const { return displacements[site]; }
  double dv(std::size_t site) const {
    return displacements[num_sites() + site];
  }
  double max_abs_displacement() const;

  // Throws kUsage on K outside [2,8], negative lambda or wrong length.
  void validate() const;

  friend bool operator==(const TpsParams &, const TpsParams &) = default;
};

// Factorized TPS system for one (K, lambda). Independent of displacements,
// so it can be shared by every solve on the same control grid.
class TpsBasis {
 public:
  TpsBasis(int grid_size, double lambda);

  int grid_size() const { return grid_size_; }
  double lambda() const { return lambda_; }
  std::size_t num_sites() const { return sites_.size(); }
  const std::vector<NormCoord> &sites() const { return sites_; }

  // Weights b(p) with W(p) = sum_m b_m(p) * (site_m + displacement_m).
  // These are also the partial derivatives of W(p) w.r.t. each displacement.
  void interpolation_weights(NormCoord p, std::span<double> out) const;

  // Multiplies the inverse system matrix with [values; 0 0 0].
  // Output: n radial weights followed by the 3 affine coefficients.
  void solve_coefficients(std::span<const double> values,
                          std::span<double> out) const;

  double condition_estimate() const { return rcond_; }

 private:
  int grid_size_;
  double lambda_;
  std::vector<NormCoord> sites_;
  std::vector<double> inverse_;  // (n+3)^2 row-major
  double rcond_ = 0.0;
};

// Radial kernel U(r) = r^2 log r^2, evaluated from the squared distance.
double tps_kernel(double squared_distance);

class TpsSolved {
 public:
  const TpsParams &params() const { return params_; }
  const TpsBasis &basis() const { return *basis_; }
  std::shared_ptr<const TpsBasis> shared_basis() const { return basis_; }

  std::span<const double> radial_weights_u() const { return weights_u_; }
  std::span<const double> radial_weights_v() const { return weights_v_; }
  // u' = a[0] + a[1] u + a[2] v ; v' = a[3] + a[4] u + a[5] v
  const std::array<double, 6> &affine() const { return affine_; }

 private:
  friend TpsSolved solve(const TpsParams &,
                         std::shared_ptr<const TpsBasis>);

  TpsParams params_;
  std::shared_ptr<const TpsBasis> basis_;
  std::vector<double> weights_u_;
  std::vector<double> weights_v_;
  std::array<double, 6> affine_{};
};

TpsSolved solve(const TpsParams &params);
// Reuses a factorization; basis must match params' K and lambda.
TpsSolved solve(const TpsParams &params,
                std::shared_ptr<const TpsBasis> basis);

// W(p) = affine(p) + sum_m w_m U(|p - site_m|). Output is never clamped.
NormCoord tps_map(const TpsSolved &solved, NormCoord p);

// dW(p)/d(displacements), 2 x 2K^2 row-major (row 0: u', row 1: v').
// Independent of the current displacement values.
std::vector<double> tps_jacobian_wrt_params(const TpsSolved &solved,
                                            NormCoord p);

}  // namespace gmg
