#include "gmg/error.hpp"
#include "gmg/tps.hpp"

#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace gmg {
namespace {

using testing::Rng;

// Test-only oracle: assembles the TPS system from scratch and solves it with
// partial-pivot Gaussian elimination. Returns radial weights then affine
// coefficients for one output axis.
std::vector<double> reference_solve(const std::vector<NormCoord> &sites,
                                    const std::vector<double> &targets,
                                    double lambda) {
  const std::size_t n = sites.size();
  const std::size_t dim = n + 3;
  std::vector<std::vector<double>> a(dim, std::vector<double>(dim + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = sites[i].u - sites[j].u;
      const double dy = sites[i].v - sites[j].v;
      const double r2 = dx * dx + dy * dy;
      a[i][j] = r2 > 0 ? r2 * std::log(r2) : 0.0;
    }
    a[i][i] += lambda;
    a[i][n] = a[n][i] = 1.0;
    a[i][n + 1] = a[n + 1][i] = sites[i].u;
    a[i][n + 2] = a[n + 2][i] = sites[i].v;
    a[i][dim] = targets[i];
  }
  for (std::size_t col = 0; col < dim; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < dim; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    for (std::size_t r = 0; r < dim; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= dim; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> x(dim);
  for (std::size_t i = 0; i < dim; ++i) x[i] = a[i][dim] / a[i][i];
  return x;
}

TEST(TpsTest, ControlSitesAreRegularGrid) {
  const auto sites = control_sites(3);
  ASSERT_EQ(sites.size(), 9u);
  EXPECT_EQ(sites[0].u, -1.0);
  EXPECT_EQ(sites[0].v, -1.0);
  EXPECT_EQ(sites[1].u, 0.0);
  EXPECT_EQ(sites[3].v, 0.0);
  EXPECT_EQ(sites[8].u, 1.0);
  EXPECT_EQ(sites[8].v, 1.0);
}

TEST(TpsTest, KernelGuardedAtZero) {
  EXPECT_EQ(tps_kernel(0.0), 0.0);
  EXPECT_DOUBLE_EQ(tps_kernel(std::exp(1.0)), std::exp(1.0));
  EXPECT_DOUBLE_EQ(tps_kernel(1.0), 0.0);
}

TEST(TpsTest, ZeroDisplacementIsIdentity) {
  const TpsSolved s = solve(TpsParams::identity(5));
  const auto &a = s.affine();
  EXPECT_NEAR(a[0], 0.0, 1e-12);
  EXPECT_NEAR(a[1], 1.0, 1e-12);
  EXPECT_NEAR(a[2], 0.0, 1e-12);
  EXPECT_NEAR(a[3], 0.0, 1e-12);
  EXPECT_NEAR(a[4], 0.0, 1e-12);
  EXPECT_NEAR(a[5], 1.0, 1e-12);
  for (double w : s.radial_weights_u()) EXPECT_NEAR(w, 0.0, 1e-12);
  for (double w : s.radial_weights_v()) EXPECT_NEAR(w, 0.0, 1e-12);
  const NormCoord q = tps_map(s, {0.3, -0.7});
  EXPECT_NEAR(q.u, 0.3, 1e-12);
  EXPECT_NEAR(q.v, -0.7, 1e-12);
}

TEST(TpsTest, UniformDisplacementIsTranslation) {
  TpsParams p = TpsParams::identity(5);
  for (std::size_t m = 0; m < p.num_sites(); ++m) {
    p.displacements[m] = 0.2;
    p.displacements[p.num_sites() + m] = -0.1;
  }
  const TpsSolved s = solve(p);

  // Oracle: independent elimination on the assembled system.
  const auto sites = control_sites(5);
  std::vector<double> tu, tv;
  for (const auto &site : sites) {
    tu.push_back(site.u + 0.2);
    tv.push_back(site.v - 0.1);
  }
  const auto ref_u = reference_solve(sites, tu, 0.0);
  const auto ref_v = reference_solve(sites, tv, 0.0);
  for (std::size_t m = 0; m < sites.size(); ++m) {
    EXPECT_NEAR(s.radial_weights_u()[m], 0.0, 1e-9);
    EXPECT_NEAR(s.radial_weights_v()[m], 0.0, 1e-9);
    EXPECT_NEAR(ref_u[m], 0.0, 1e-9);
  }
  EXPECT_NEAR(ref_u[25], 0.2, 1e-9);
  EXPECT_NEAR(ref_v[25], -0.1, 1e-9);
  EXPECT_NEAR(s.affine()[0], 0.2, 1e-9);
  EXPECT_NEAR(s.affine()[1], 1.0, 1e-9);
  EXPECT_NEAR(s.affine()[3], -0.1, 1e-9);
  EXPECT_NEAR(s.affine()[5], 1.0, 1e-9);

  const NormCoord q = tps_map(s, {0.0, 0.0});
  EXPECT_NEAR(q.u, 0.2, 1e-9);
  EXPECT_NEAR(q.v, -0.1, 1e-9);
}

TEST(TpsTest, SolveMatchesReferenceElimination) {
  Rng rng(11);
  for (double lambda : {0.0, 0.05}) {
    const TpsParams p = [&] {
      TpsParams q = testing::random_params(rng, 4, 0.3);
      q.lambda = lambda;
      return q;
    }();
    const TpsSolved s = solve(p);
    const auto sites = control_sites(4);
    std::vector<double> tu, tv;
    for (std::size_t m = 0; m < sites.size(); ++m) {
      tu.push_back(sites[m].u + p.du(m));
      tv.push_back(sites[m].v + p.dv(m));
    }
    const auto ref_u = reference_solve(sites, tu, lambda);
    const auto ref_v = reference_solve(sites, tv, lambda);
    for (std::size_t m = 0; m < sites.size(); ++m) {
      EXPECT_NEAR(s.radial_weights_u()[m], ref_u[m], 1e-9);
      EXPECT_NEAR(s.radial_weights_v()[m], ref_v[m], 1e-9);
    }
    for (int a = 0; a < 3; ++a) {
      EXPECT_NEAR(s.affine()[a], ref_u[16 + a], 1e-9);
      EXPECT_NEAR(s.affine()[3 + a], ref_v[16 + a], 1e-9);
    }
  }
}

TEST(TpsTest, DisplacedCornerIsInterpolated) {
  TpsParams p = TpsParams::identity(3);
  p.displacements[8] = -0.25;      // du of site (2,2) = (1,1)
  p.displacements[9 + 8] = -0.15;  // dv
  const TpsSolved s = solve(p);
  const NormCoord q = tps_map(s, {1.0, 1.0});
  EXPECT_NEAR(q.u, 0.75, 1e-9);
  EXPECT_NEAR(q.v, 0.85, 1e-9);
  const NormCoord other = tps_map(s, {-1.0, 0.0});
  EXPECT_NEAR(other.u, -1.0, 1e-9);
  EXPECT_NEAR(other.v, 0.0, 1e-9);
}

TEST(TpsTest, InterpolatesRandomDisplacements) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + trial % 7;
    const TpsParams p = testing::random_params(rng, k, 0.5);
    const TpsSolved s = solve(p);
    const auto sites = control_sites(k);
    for (std::size_t m = 0; m < sites.size(); ++m) {
      const NormCoord q = tps_map(s, sites[m]);
      ASSERT_NEAR(q.u, sites[m].u + p.du(m), 1e-9);
      ASSERT_NEAR(q.v, sites[m].v + p.dv(m), 1e-9);
    }
  }
}

TEST(TpsTest, RegularizedWeightsSatisfySideConditions) {
  Rng rng(5);
  for (double lambda : {0.0, 0.1, 2.0}) {
    TpsParams p = testing::random_params(rng, 5, 0.4);
    p.lambda = lambda;
    const TpsSolved s = solve(p);
    const auto sites = control_sites(5);
    for (auto weights : {s.radial_weights_u(), s.radial_weights_v()}) {
      double sum = 0.0, su = 0.0, sv = 0.0;
      for (std::size_t m = 0; m < sites.size(); ++m) {
        sum += weights[m];
        su += weights[m] * sites[m].u;
        sv += weights[m] * sites[m].v;
      }
      EXPECT_NEAR(sum, 0.0, 1e-8);
      EXPECT_NEAR(su, 0.0, 1e-8);
      EXPECT_NEAR(sv, 0.0, 1e-8);
    }
  }
}

TEST(TpsTest, RegularizationSmoothsInsteadOfInterpolating) {
  TpsParams p = TpsParams::identity(5, 1.0);
  p.displacements[12] = 0.3;  // centre site only
  const TpsSolved s = solve(p);
  const NormCoord q = tps_map(s, {0.0, 0.0});
  EXPECT_GT(q.u, 0.0);
  EXPECT_LT(q.u, 0.3);
}

TEST(TpsTest, AffineDisplacementsGiveZeroRadialWeights) {
  Rng rng(7);
  std::uniform_real_distribution<double> coef(-0.3, 0.3);
  for (int trial = 0; trial < 20; ++trial) {
    const double a0 = coef(rng), a1 = coef(rng), a2 = coef(rng);
    const double b0 = coef(rng), b1 = coef(rng), b2 = coef(rng);
    TpsParams p = TpsParams::identity(5);
    const auto sites = control_sites(5);
    for (std::size_t m = 0; m < sites.size(); ++m) {
      p.displacements[m] = a0 + a1 * sites[m].u + a2 * sites[m].v;
      p.displacements[25 + m] = b0 + b1 * sites[m].u + b2 * sites[m].v;
    }
    const TpsSolved s = solve(p);
    for (std::size_t m = 0; m < sites.size(); ++m) {
      ASSERT_NEAR(s.radial_weights_u()[m], 0.0, 1e-8);
      ASSERT_NEAR(s.radial_weights_v()[m], 0.0, 1e-8);
    }
    std::uniform_real_distribution<double> pt(-1.5, 1.5);
    for (int i = 0; i < 10; ++i) {
      const NormCoord x{pt(rng), pt(rng)};
      const NormCoord q = tps_map(s, x);
      ASSERT_NEAR(q.u, x.u + a0 + a1 * x.u + a2 * x.v, 1e-9);
      ASSERT_NEAR(q.v, x.v + b0 + b1 * x.u + b2 * x.v, 1e-9);
    }
  }
}

TEST(TpsTest, DisplacementToWarpIsAffine) {
  Rng rng(9);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_real_distribution<double> pt(-1.2, 1.2);
  for (int trial = 0; trial < 20; ++trial) {
    const TpsParams t1 = testing::random_params(rng, 5, 0.3);
    const TpsParams t2 = testing::random_params(rng, 5, 0.3);
    const double a = coef(rng), b = coef(rng);
    TpsParams mix = TpsParams::identity(5);
    for (std::size_t i = 0; i < mix.num_params(); ++i) {
      mix.displacements[i] = a * t1.displacements[i] + b * t2.displacements[i];
    }
    const TpsSolved s1 = solve(t1), s2 = solve(t2), sm = solve(mix);
    for (int i = 0; i < 10; ++i) {
      const NormCoord x{pt(rng), pt(rng)};
      const NormCoord q1 = tps_map(s1, x), q2 = tps_map(s2, x),
                      qm = tps_map(sm, x);
      ASSERT_NEAR(qm.u, a * q1.u + b * q2.u - (a + b - 1) * x.u, 1e-9);
      ASSERT_NEAR(qm.v, a * q1.v + b * q2.v - (a + b - 1) * x.v, 1e-9);
    }
  }
}

TEST(TpsTest, JacobianAtControlSiteIsUnitBlock) {
  const TpsSolved s = solve(TpsParams::identity(5));
  const auto sites = control_sites(5);
  const std::size_t n = sites.size();
  for (std::size_t m = 0; m < n; ++m) {
    const auto jac = tps_jacobian_wrt_params(s, sites[m]);
    for (std::size_t j = 0; j < n; ++j) {
      const double expected = j == m ? 1.0 : 0.0;
      EXPECT_NEAR(jac[j], expected, 1e-9);              // du'/d du_j
      EXPECT_NEAR(jac[2 * n + n + j], expected, 1e-9);  // dv'/d dv_j
      EXPECT_EQ(jac[n + j], 0.0);                       // du'/d dv_j
      EXPECT_EQ(jac[2 * n + j], 0.0);                   // dv'/d du_j
    }
  }
}

TEST(TpsTest, JacobianMatchesFiniteDifferences) {
  Rng rng(13);
  std::uniform_real_distribution<double> pt(-1.3, 1.3);
  constexpr double kStep = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int k = trial % 2 == 0 ? 5 : 3;
    const TpsParams p = testing::random_params(rng, k, 0.5);
    const TpsSolved s = solve(p);
    const NormCoord x{pt(rng), pt(rng)};
    const auto jac = tps_jacobian_wrt_params(s, x);
    const std::size_t np = p.num_params();
    TpsParams probe = p;
    for (std::size_t i = 0; i < np; ++i) {
      probe.displacements[i] = p.displacements[i] + kStep;
      const NormCoord plus = tps_map(solve(probe, s.shared_basis()), x);
      probe.displacements[i] = p.displacements[i] - kStep;
      const NormCoord minus = tps_map(solve(probe, s.shared_basis()), x);
      probe.displacements[i] = p.displacements[i];
      worst = std::max(worst, std::abs((plus.u - minus.u) / (2 * kStep) - jac[i]));
      worst = std::max(worst,
                       std::abs((plus.v - minus.v) / (2 * kStep) - jac[np + i]));
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(TpsTest, JacobianIndependentOfDisplacements) {
  Rng rng(17);
  const TpsSolved id = solve(TpsParams::identity(5));
  const TpsSolved other = solve(testing::random_params(rng, 5, 0.4));
  const NormCoord x{0.37, -0.52};
  EXPECT_EQ(tps_jacobian_wrt_params(id, x), tps_jacobian_wrt_params(other, x));
}

TEST(TpsTest, InvalidParamsRejected) {
  EXPECT_THROW(TpsParams::identity(1), Error);
  EXPECT_THROW(TpsParams::identity(9), Error);
  EXPECT_THROW(TpsParams::identity(5, -0.1), Error);
  TpsParams p = TpsParams::identity(3);
  p.displacements.pop_back();
  EXPECT_THROW(solve(p), Error);
}

}  // namespace
}  // namespace gmg
