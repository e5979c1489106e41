#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "hsfusion/distributions.hpp"
#include "hsfusion/recovery.hpp"

using namespace hsfusion;

namespace {

Vector random_blocks(std::size_t n, Rng& rng) {
  Vector v(n);
  double level = 0.0;
  for (double& x : v) {
    if (rng.uniform() < 0.3) level = static_cast<double>(rng.below(4));
    x = level;
  }
  return v;
}

}  // namespace

TEST(ContractionThreshold, Formula) {
  EXPECT_DOUBLE_EQ(contraction_threshold(100, 9), std::sqrt(9.0 * std::log(100.0) / 100.0) / 100.0);
  EXPECT_DOUBLE_EQ(contraction_threshold(100, 9, 3.0), 3.0 * contraction_threshold(100, 9));
}

TEST(ProjectBlocks, ConstantIsFullyFused) {
  const auto p = project_blocks(Vector(12, 4.0), 0.5, 1);
  ASSERT_EQ(p.fused_set.size(), 11u);
  for (std::size_t j = 2; j <= 12; ++j) EXPECT_TRUE(p.is_fused(j));
}

TEST(ProjectBlocks, LargeJumpIsBreak) {
  Vector theta(100, 0.0);
  for (std::size_t i = 60; i < 100; ++i) theta[i] = 10.0 * 0.7;
  const auto p = project_blocks(theta, 0.7, 1);
  EXPECT_FALSE(p.is_fused(61));
  EXPECT_EQ(p.fused_set.size(), 98u);
}

TEST(ProjectBlocks, MatchesDirectScan) {
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 20;
    Vector theta(n);
    const double sigma = 0.1 + rng.uniform();
    const std::size_t s0 = 1 + rng.below(5);
    const double thr = std::sqrt(s0 * std::log(20.0) / 20.0) / 20.0;
    for (double& v : theta) v = rng.normal(0.0, 2.0 * thr * sigma);
    std::vector<std::size_t> expected;
    for (std::size_t j = 2; j <= n; ++j)
      if (std::abs(theta[j - 1] - theta[j - 2]) / sigma < thr) expected.push_back(j);
    EXPECT_EQ(project_blocks(theta, sigma, s0).fused_set, expected);
  }
}

TEST(ProjectBlocks, MonotoneInS0) {
  Rng rng(3);
  Vector theta(60);
  for (double& v : theta) v = rng.normal(0.0, 0.01);
  std::size_t prev = 0;
  for (std::size_t s0 = 1; s0 <= 40; ++s0) {
    const auto p = project_blocks(theta, 1.0, s0);
    EXPECT_GE(p.fused_set.size(), prev);
    if (s0 > 1) {
      for (std::size_t j : project_blocks(theta, 1.0, s0 - 1).fused_set) EXPECT_TRUE(p.is_fused(j));
    }
    prev = p.fused_set.size();
  }
}

TEST(ProjectBlocks, Errors) {
  EXPECT_THROW(project_blocks(Vector{1.0, 2.0}, 1.0, 0), DomainError);
  EXPECT_THROW(project_blocks(Vector{1.0, 2.0}, 0.0, 1), DomainError);
  EXPECT_THROW(project_blocks(Vector{1.0}, 1.0, 1), DomainError);
}

TEST(FalsePositives, PerfectAndComplement) {
  const Vector truth{0, 0, 0, 1, 1, 2, 2, 2};
  const BlockProjection perfect{{2, 3, 5, 7, 8}, 0.1, 8};
  EXPECT_EQ(false_positive_count(perfect, truth), 0u);
  const BlockProjection none{{}, 0.1, 8};
  EXPECT_EQ(false_positive_count(none, truth), 8u - 1u - 2u);
  const BlockProjection all{{2, 3, 4, 5, 6, 7, 8}, 0.1, 8};
  EXPECT_EQ(false_positive_count(all, truth), 0u);
  EXPECT_THROW(false_positive_count(perfect, Vector(7, 0.0)), DomainError);
}

TEST(FalsePositives, MatchesSetDifference) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 15;
    const Vector truth = random_blocks(n, rng);
    BlockProjection p{{}, 0.1, n};
    for (std::size_t j = 2; j <= n; ++j)
      if (rng.uniform() < 0.5) p.fused_set.push_back(j);
    std::set<std::size_t> complement;
    for (std::size_t j = 2; j <= n; ++j)
      if (!p.is_fused(j)) complement.insert(j);
    for (std::size_t j = 2; j <= n; ++j)
      if (truth[j - 1] != truth[j - 2]) complement.erase(j);
    const std::size_t count = false_positive_count(p, truth);
    EXPECT_EQ(count, complement.size());
    EXPECT_LE(count, n - 1);
  }
}

TEST(FalsePositives, PerDrawAndMeanSigma) {
  PosteriorSamples s;
  s.draws.append_row(Vector{0.0, 0.0, 1.0, 1.0});
  s.draws.append_row(Vector{0.0, 0.5, 1.0, 1.5});
  s.sigma_draws = {1.0, 4.0};
  const Vector truth{0, 0, 1, 1};
  const auto per = false_positive_counts(s, truth, 1);
  EXPECT_EQ(per, (std::vector<std::size_t>{0, 2}));
  const auto pooled = false_positive_counts(s, truth, 1, SigmaMode::posterior_mean);
  EXPECT_EQ(pooled, per);
  // a threshold constant big enough to fuse every step of the second draw
  const auto loose = false_positive_counts(s, truth, 1, SigmaMode::per_draw, 100.0);
  EXPECT_EQ(loose, (std::vector<std::size_t>{0, 0}));
  EXPECT_THROW(false_positive_counts(PosteriorSamples{}, truth, 1), StateError);
}

TEST(PracticalThreshold, HalfGapBoundaryIsNotFused) {
  const Vector y{0.0, 1.0, 3.0};
  const Vector half{0.0, 0.5, 1.5};
  const auto b = practical_threshold(half, y);
  EXPECT_FALSE(b.fused(0, 1));
  EXPECT_FALSE(b.fused(1, 2));
  EXPECT_FALSE(b.fused(0, 2));
  EXPECT_TRUE(b.fused(1, 1));
}

TEST(PracticalThreshold, ConstantEstimateFusesAll) {
  const Vector y{0.3, -1.0, 2.0, 5.5};
  const auto b = practical_threshold(Vector(4, 1.0), y);
  EXPECT_EQ(b.fused_pairs(), 6u);
}

TEST(PracticalThreshold, EqualObservations) {
  const Vector y{1.0, 1.0, 2.0};
  EXPECT_TRUE(practical_threshold(Vector{0.7, 0.7, 0.0}, y).fused(0, 1));
  EXPECT_FALSE(practical_threshold(Vector{0.7, 0.8, 0.0}, y).fused(0, 1));
}

TEST(PracticalThreshold, MatchesDoubleLoop) {
  Rng rng(10);
  const std::size_t n = 10;
  Vector y(n);
  Vector th(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = rng.normal();
    th[i] = 0.6 * y[i] + rng.normal(0.0, 0.2);
  }
  const auto b = practical_threshold(th, y);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const bool expected = i == j || std::abs(th[i] - th[j]) < 0.5 * std::abs(y[i] - y[j]);
      EXPECT_EQ(b.fused(i, j), expected);
      EXPECT_EQ(b.fused(i, j), b.fused(j, i));
    }
  EXPECT_THROW(practical_threshold(Vector(3), Vector(4)), DomainError);
}

TEST(PracticalThreshold, ShiftAndScaleInvariant) {
  Rng rng(12);
  const std::size_t n = 25;
  Vector y(n);
  Vector th(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = std::round(rng.normal() * 64.0) / 64.0;
    th[i] = std::round((0.5 * y[i] + rng.normal(0.0, 0.3)) * 64.0) / 64.0;
  }
  const auto base = practical_threshold(th, y);
  // shift by a power-of-two multiple and scale by 4 keep every value exact
  for (auto [shift, scale] : {std::pair{8.0, 1.0}, {-3.0, 4.0}, {0.0, 0.25}}) {
    Vector ys(n);
    Vector ts(n);
    for (std::size_t i = 0; i < n; ++i) {
      ys[i] = scale * (y[i] + shift);
      ts[i] = scale * (th[i] + shift);
    }
    const auto moved = practical_threshold(ts, ys);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(moved.fused(i, j), base.fused(i, j));
  }
}

TEST(WbMetrics, TwoBlocks) {
  const Vector truth{0, 0, 0, 1, 1};
  const auto wb = wb_metrics(truth, truth);
  EXPECT_EQ(wb.within, 0.0);
  EXPECT_EQ(wb.between, 1.0);
  const auto flat = wb_metrics(Vector{0.5, 0.5}, Vector{2.0, 2.0});
  EXPECT_EQ(flat.between, std::numeric_limits<double>::infinity());
}

TEST(WbMetrics, MatchesPairLoop) {
  Rng rng(13);
  const std::size_t n = 12;
  const Vector truth = random_blocks(n, rng);
  Vector est(n);
  for (std::size_t i = 0; i < n; ++i) est[i] = truth[i] + rng.normal(0.0, 0.1);
  double within = 0.0;
  std::size_t count = 0;
  double between = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (truth[i] == truth[j]) {
        within += std::abs(est[i] - est[j]);
        ++count;
      } else {
        between = std::min(between, std::abs(est[i] - est[j]));
      }
    }
  const auto wb = wb_metrics(est, truth);
  EXPECT_NEAR(wb.within, within / static_cast<double>(count), 1e-14);
  EXPECT_EQ(wb.between, between);
}

TEST(WbMetrics, PiecewiseConstantOnBlocksHasZeroWithin) {
  const Vector truth{0, 0, 1, 1, 1, 0, 0};
  const Vector est{0.2, 0.2, 0.9, 0.9, 0.9, 0.1, 0.1};
  // blocks 1 and 3 share a level, so the estimate is not constant on level sets
  EXPECT_GT(wb_metrics(est, truth).within, 0.0);
  const Vector same{0.2, 0.2, 0.9, 0.9, 0.9, 0.2, 0.2};
  EXPECT_EQ(wb_metrics(same, truth).within, 0.0);
}
