#include "gmg/error.hpp"
#include "gmg/pseudolabel.hpp"
#include "gmg/sampler.hpp"

#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gmg {
namespace {

using testing::Rng;

ProbabilityMap one_hot(const LabelMask &mask) {
  const std::size_t C = mask.num_classes();
  std::vector<float> v(mask.size() * C, 0.0f);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const std::uint8_t l = mask.labels()[i];
    v[i * C + (l == kIgnoreLabel ? 0 : l)] = 1.0f;
  }
  return ProbabilityMap(mask.rows(), mask.cols(), mask.num_classes(), std::move(v));
}

ProbabilityMap uniform(std::size_t rows, std::size_t cols, std::uint16_t C) {
  return ProbabilityMap(rows, cols, C,
                        std::vector<float>(rows * cols * C, 1.0f / static_cast<float>(C)));
}

ConfidenceMap map_of(std::vector<float> scores) {
  ConfidenceMap m;
  m.rows = 1;
  m.cols = scores.size();
  m.valid.assign(scores.size(), 1);
  m.scores = std::move(scores);
  return m;
}

TEST(ConfidenceTest, OneHotIdentityGivesOne) {
  Rng rng(1);
  const LabelMask src = testing::random_mask(rng, 7, 9, 5);
  const ConfidenceMap z =
      confidence_scores(src, solve(TpsParams::identity()), one_hot(src));
  EXPECT_EQ(z.valid_count(), 63u);
  for (float s : z.scores) EXPECT_EQ(s, 1.0f);
}

TEST(ConfidenceTest, UniformGivesQuarter) {
  Rng rng(2);
  const LabelMask src = testing::random_mask(rng, 6, 6, 4);
  const ConfidenceMap z =
      confidence_scores(src, solve(TpsParams::identity()), uniform(6, 6, 4));
  for (float s : z.scores) EXPECT_EQ(s, 0.25f);
}

TEST(ConfidenceTest, HandComputedTwoByTwo) {
  // Swap columns: source (r, c) is read at target (r, 1 - c). With K = 2 the
  // TPS is affine, so moving the corner sites reflects u exactly.
  TpsParams flip = TpsParams::identity(2);
  const auto sites = control_sites(2);
  for (std::size_t m = 0; m < 4; ++m) flip.displacements[m] = -2.0 * sites[m].u;
  const LabelMask src(2, 2, 3, {0, 1, 2, 1});
  const ProbabilityMap probs(2, 2, 3,
                             {0.2f, 0.5f, 0.3f,   // (0,0)
                              0.6f, 0.1f, 0.3f,   // (0,1)
                              0.1f, 0.1f, 0.8f,   // (1,0)
                              0.25f, 0.25f, 0.5f});
  const ConfidenceMap z = confidence_scores(src, solve(flip), probs);
  // Warped labels: (0,0)<-1, (0,1)<-0, (1,0)<-1, (1,1)<-2.
  EXPECT_EQ(z.scores, (std::vector<float>{0.5f, 0.6f, 0.1f, 0.5f}));
  EXPECT_EQ(z.valid_count(), 4u);
}

TEST(ConfidenceTest, OutOfFrameIsInvalidZero) {
  TpsParams shift = TpsParams::identity(3);
  for (std::size_t m = 0; m < 9; ++m) shift.displacements[m] = 0.6;
  Rng rng(3);
  const LabelMask src = testing::random_mask(rng, 8, 8, 3);
  const ConfidenceMap z = confidence_scores(src, solve(shift), uniform(8, 8, 3));
  EXPECT_LT(z.valid_count(), 64u);
  EXPECT_GT(z.valid_count(), 0u);
  for (std::size_t i = 0; i < z.scores.size(); ++i) {
    if (!z.valid[i]) EXPECT_EQ(z.scores[i], 0.0f);
  }
  EXPECT_NO_THROW(z.validate());
}

TEST(ConfidenceTest, ClassCountMismatch) {
  Rng rng(4);
  const LabelMask src = testing::random_mask(rng, 4, 4, 3);
  EXPECT_THROW(confidence_scores(src, solve(TpsParams::identity()), uniform(4, 4, 4)),
               Error);
}

TEST(PercentileTest, TenValues) {
  std::vector<float> s;
  for (int i = 1; i <= 10; ++i) s.push_back(static_cast<float>(i) / 10.0f);
  std::reverse(s.begin(), s.end());
  const std::vector<ConfidenceMap> maps = {map_of(s)};
  const Threshold t = percentile_threshold(maps, 60.0);
  EXPECT_EQ(t.gamma, static_cast<double>(0.6f));
  EXPECT_EQ(t.sample_count, 10u);
}

TEST(PercentileTest, SingleAndConstant) {
  const std::vector<ConfidenceMap> one = {map_of({0.37f})};
  for (double p : {0.5, 60.0, 99.9}) {
    EXPECT_EQ(percentile_threshold(one, p).gamma, static_cast<double>(0.37f));
  }
  const std::vector<ConfidenceMap> flat = {map_of(std::vector<float>(17, 0.42f))};
  EXPECT_EQ(percentile_threshold(flat, 60.0).gamma, static_cast<double>(0.42f));
}

TEST(PercentileTest, PoolsAcrossMapsAndSkipsInvalid) {
  ConfidenceMap a = map_of({0.9f, 0.0f, 0.1f});
  a.valid[1] = 0;
  const std::vector<ConfidenceMap> maps = {a, map_of({0.5f, 0.3f})};
  const Threshold t = percentile_threshold(maps, 50.0);
  EXPECT_EQ(t.sample_count, 4u);
  EXPECT_EQ(t.gamma, static_cast<double>(0.3f));  // 2nd smallest of 4
}

TEST(PercentileTest, Errors) {
  EXPECT_THROW(percentile_threshold({}, 60.0), Error);
  ConfidenceMap dead = map_of({0.0f});
  dead.valid[0] = 0;
  const std::vector<ConfidenceMap> maps = {dead};
  EXPECT_THROW(percentile_threshold(maps, 60.0), Error);
  const std::vector<ConfidenceMap> ok = {map_of({0.5f})};
  EXPECT_THROW(percentile_threshold(ok, 0.0), Error);
  EXPECT_THROW(percentile_threshold(ok, 100.0), Error);
}

TEST(PercentileTest, CalibrationIsExact) {
  Rng rng(5);
  for (std::size_t n : {7u, 10u, 33u, 100u, 1000u}) {
    for (double p : {10.0, 33.3, 60.0, 95.0}) {
      std::vector<float> s(n);
      std::iota(s.begin(), s.end(), 1.0f);
      for (auto &x : s) x /= static_cast<float>(n + 1);
      std::shuffle(s.begin(), s.end(), rng);
      const std::vector<ConfidenceMap> maps = {map_of(s)};
      const Threshold t = percentile_threshold(maps, p);
      const auto above = std::count_if(s.begin(), s.end(),
                                       [&](float x) { return x > t.gamma; });
      const auto rank = static_cast<long>(std::ceil(p * static_cast<double>(n) / 100.0));
      EXPECT_EQ(above, static_cast<long>(n) - rank) << n << " " << p;
      EXPECT_NE(std::find(s.begin(), s.end(), static_cast<float>(t.gamma)), s.end());
    }
  }
}

TEST(PseudoLabelTest, StrictThreshold) {
  const LabelMask warped(2, 2, 3, {1, 2, 0, kIgnoreLabel});
  ConfidenceMap z;
  z.rows = z.cols = 2;
  z.scores = {0.7f, 0.5f, 0.2f, 0.0f};
  z.valid = {1, 1, 1, 0};
  const PseudoLabel out = threshold_labels(warped, z, Threshold{0.5, 60.0, 3});
  EXPECT_EQ(out.mask.at(0, 0), 1);
  EXPECT_EQ(out.mask.at(0, 1), kIgnoreLabel);
  EXPECT_EQ(out.mask.at(1, 0), kIgnoreLabel);
  EXPECT_EQ(out.mask.at(1, 1), kIgnoreLabel);
  EXPECT_DOUBLE_EQ(out.coverage, 0.25);
  // Even gamma below zero cannot revive an out-of-frame pixel.
  EXPECT_EQ(threshold_labels(warped, z, Threshold{-1.0, 60.0, 3}).mask.at(1, 1),
            kIgnoreLabel);
}

TEST(PseudoLabelTest, IdentityCopiesSource) {
  Rng rng(6);
  const LabelMask src = testing::random_mask(rng, 11, 13, 6);
  const TpsSolved id = solve(TpsParams::identity());
  const ConfidenceMap z = confidence_scores(src, id, one_hot(src));
  const PseudoLabel out = make_pseudolabel(src, id, z, Threshold{0.999, 60.0, 0});
  EXPECT_EQ(out.mask, src);
  EXPECT_DOUBLE_EQ(out.coverage, 1.0);
}

TEST(PseudoLabelTest, LabelsComeFromSourceAndCoverageMonotone) {
  Rng rng(7);
  const LabelMask src = testing::random_mask(rng, 12, 12, 5);
  std::vector<float> p(12 * 12 * 5);
  std::uniform_real_distribution<float> u(0.01f, 1.0f);
  for (std::size_t i = 0; i < 144; ++i) {
    float sum = 0;
    for (int c = 0; c < 5; ++c) sum += (p[i * 5 + c] = u(rng));
    for (int c = 0; c < 5; ++c) p[i * 5 + c] /= sum;
  }
  const ProbabilityMap probs(12, 12, 5, p);
  const TpsSolved theta = solve(testing::random_params(rng, 4, 0.2));
  const ConfidenceMap z = confidence_scores(src, theta, probs);
  const LabelMask warped = warp_source_label(src, theta, 12, 12);
  double previous = 2.0;
  for (double g : {0.0, 0.1, 0.2, 0.3, 0.5, 0.9}) {
    const PseudoLabel out = make_pseudolabel(src, theta, z, Threshold{g, 60.0, 0});
    EXPECT_LE(out.coverage, previous);
    previous = out.coverage;
    for (std::size_t i = 0; i < out.mask.size(); ++i) {
      const auto l = out.mask.labels()[i];
      if (l != kIgnoreLabel) EXPECT_EQ(l, warped.labels()[i]);
    }
  }
}

TEST(PseudoLabelTest, ShapeMismatch) {
  const LabelMask warped(2, 3, 2, std::vector<std::uint8_t>(6, 0));
  const ConfidenceMap z = map_of({0.5f, 0.5f});
  EXPECT_THROW(threshold_labels(warped, z, Threshold{}), Error);
}

TEST(CrossEntropyTest, Identities) {
  Rng rng(8);
  // 1/C is exact in single precision for power-of-two C only; other C
  // carry the f32 rounding of the stored probability (~1e-8 relative).
  const LabelMask y = testing::random_mask(rng, 9, 7, 8);
  EXPECT_EQ(cross_entropy(one_hot(y), y).total, 0.0);

  std::size_t n = 0;
  for (auto l : y.labels()) n += l != kIgnoreLabel;
  const CrossEntropy ce = cross_entropy(uniform(9, 7, 8), y);
  EXPECT_NEAR(ce.total, static_cast<double>(n) * std::log(8.0), 1e-9);
  EXPECT_EQ(ce.pixel_count, n);
  EXPECT_NEAR(ce.mean, std::log(8.0), 1e-12);

  const LabelMask y6 = testing::random_mask(rng, 9, 7, 6);
  EXPECT_NEAR(cross_entropy(uniform(9, 7, 6), y6).mean, std::log(6.0), 1e-7);

  const LabelMask none(3, 3, 2, std::vector<std::uint8_t>(9, kIgnoreLabel));
  EXPECT_EQ(cross_entropy(uniform(3, 3, 2), none).total, 0.0);
}

TEST(CrossEntropyTest, FloorAvoidsInfinity) {
  const LabelMask y(2, 2, 2, {1, 1, 1, 1});
  const ProbabilityMap p(2, 2, 2, {1, 0, 1, 0, 1, 0, 1, 0});
  EXPECT_NEAR(cross_entropy(p, y).total, -4.0 * std::log(1e-12), 1e-9);
}

TEST(CrossEntropyTest, NonNegativeAndMismatch) {
  Rng rng(9);
  const LabelMask y = testing::random_mask(rng, 5, 5, 3);
  EXPECT_GE(cross_entropy(uniform(5, 5, 3), y).total, 0.0);
  EXPECT_THROW(cross_entropy(uniform(5, 4, 3), y), Error);
  EXPECT_THROW(cross_entropy(uniform(5, 5, 4), y), Error);
}

TEST(JointLossTest, Arithmetic) {
  const std::vector<double> s = {1.5, 0.5}, t = {1.0, 2.0};
  EXPECT_EQ(joint_loss(s, t, 0.0), 2.0);
  EXPECT_EQ(joint_loss(s, t, 1.0), 5.0);
  const std::vector<double> s4 = {4.0}, t6 = {2.5, 3.5};
  EXPECT_EQ(joint_loss(s4, t6, 0.5), 7.0);
  EXPECT_THROW(joint_loss(s, t, -0.1), Error);
}

}  // namespace
}  // namespace gmg
