#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "fpeval/extractor.hpp"
#include "oracles.hpp"

namespace fpeval {
namespace {

MinutiaeSet make(std::vector<Minutia> m, int w = 256, int h = 256) { return MinutiaeSet(std::move(m), w, h); }

TEST(AngleDiff, Branches) {
  EXPECT_NEAR(angle_diff(0.5, 0.2), 0.3, 1e-15);
  EXPECT_NEAR(angle_diff(-3, 3), 2 * kPi - 6, 1e-12);   // 0.28318530717958623
  EXPECT_NEAR(angle_diff(3, -3), -(2 * kPi - 6), 1e-12);
  EXPECT_EQ(angle_diff(kPi, 0.0), -kPi);                // pi lands on the -pi end
  EXPECT_NEAR(angle_diff(20.0, 0.0), 20.0 - 3 * kTwoPi, 1e-12);
}

TEST(AngleDiff, Antisymmetric) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 5000; ++i) {
    const double a = u(rng), b = u(rng);
    const double d1 = angle_diff(a, b), d2 = angle_diff(b, a);
    ASSERT_GE(d1, -kPi);
    ASSERT_LT(d1, kPi);
    if (d1 != -kPi && d2 != -kPi) {
      ASSERT_NEAR(d1, -d2, 1e-12);
    }
  }
}

TEST(Pairing, IdenticalSetsPairAtZero) {
  auto s = make({Minutia(10, 10, 0), Minutia(50, 60, 1), Minutia(100, 30, 2)});
  auto p = pair_minutiae(s, s);
  ASSERT_EQ(p.pairs.size(), 3u);
  for (const auto& pr : p.pairs) {
    EXPECT_EQ(pr.ground, pr.detected);
    EXPECT_EQ(pr.distance, 0.0);
  }
  EXPECT_TRUE(p.unpaired_ground.empty());
  EXPECT_TRUE(p.unpaired_detected.empty());
}

TEST(Pairing, ClosestCandidateWins) {
  auto g = make({Minutia(100, 100, 0)});
  auto d = make({Minutia(107, 100, 0), Minutia(103, 100, 0)});
  auto p = pair_minutiae(g, d);
  ASSERT_EQ(p.pairs.size(), 1u);
  EXPECT_EQ(p.pairs[0].detected, 1u);
  EXPECT_DOUBLE_EQ(p.pairs[0].distance, 3.0);
  EXPECT_EQ(p.unpaired_detected, std::vector<std::size_t>{0});
}

TEST(Pairing, BeyondDeltaUnpaired) {
  auto g = make({Minutia(100, 100, 0)});
  auto d = make({Minutia(100, 100, 0)});
  // 10.5 px away cannot be built with integer coords along an axis; use a
  // relaxed set for the fractional position.
  auto far = MinutiaeSet::relaxed({Minutia(110.5, 100, 0)}, 256, 256);
  auto p = pair_minutiae(g, far);
  EXPECT_TRUE(p.pairs.empty());
  EXPECT_EQ(p.unpaired_ground.size(), 1u);
  EXPECT_EQ(p.unpaired_detected.size(), 1u);
  auto at = MinutiaeSet::relaxed({Minutia(110.0, 100, 0)}, 256, 256);
  EXPECT_EQ(pair_minutiae(g, at).pairs.size(), 1u);  // exactly delta is paired
}

TEST(Pairing, DistanceTieBrokenByOrientation) {
  auto g = make({Minutia(100, 100, 1.0)});
  auto d = make({Minutia(104, 100, 2.0), Minutia(96, 100, 1.1)});
  auto p = pair_minutiae(g, d);
  ASSERT_EQ(p.pairs.size(), 1u);
  EXPECT_EQ(p.pairs[0].detected, 1u);
}

TEST(Pairing, MismatchedDimensionsRejected) {
  EXPECT_THROW(pair_minutiae(make({}, 100, 100), make({}, 100, 101)), InvalidArgument);
}

TEST(Pairing, FuzzContract) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> n(0, 30);
  for (int trial = 0; trial < 300; ++trial) {
    auto g = oracle::random_set(rng, n(rng), 120, 120);
    auto d = oracle::random_set(rng, n(rng), 120, 120);
    auto p = pair_minutiae(g, d);
    std::set<std::size_t> gs, ds;
    for (const auto& pr : p.pairs) {
      ASSERT_TRUE(gs.insert(pr.ground).second);
      ASSERT_TRUE(ds.insert(pr.detected).second);
      ASSERT_LE(pr.distance, 10.0);
    }
    for (auto i : p.unpaired_ground) ASSERT_TRUE(gs.insert(i).second);
    for (auto i : p.unpaired_detected) ASSERT_TRUE(ds.insert(i).second);
    ASSERT_EQ(gs.size(), g.size());
    ASSERT_EQ(ds.size(), d.size());
  }
}

TEST(GoodnessIndex, PerfectDetectionIsOne) {
  auto g = make({Minutia(10, 10, 0), Minutia(40, 40, 1)});
  EXPECT_DOUBLE_EQ(goodness_index(g, g, pair_minutiae(g, g)), 1.0);
}

TEST(GoodnessIndex, EmptyDetectionIsMinusOne) {
  auto g = make({Minutia(10, 10, 0), Minutia(40, 40, 1), Minutia(200, 3, 1)});
  auto d = make({});
  EXPECT_DOUBLE_EQ(goodness_index(g, d, pair_minutiae(g, d)), -1.0);
}

TEST(GoodnessIndex, SpuriousClampedAtTwiceGround) {
  // One patch, M = 2, both paired, ten spurious in the same patch:
  // (2 - min(10, 4) - 0) / 2 = -1.
  auto g = make({Minutia(1, 1, 0), Minutia(14, 14, 0)});
  std::vector<Minutia> det{Minutia(1, 1, 0), Minutia(14, 14, 0)};
  // Spurious ones sit inside patch (0,0) but more than 10 px from both.
  for (int i = 0; i < 10; ++i) det.emplace_back(i % 2 == 0 ? 13 : 12, 1 + (i / 2) % 2, 0);
  auto d = make(det);
  auto p = pair_minutiae(g, d);
  auto grid = build_patch_grid(g, d, p);
  ASSERT_EQ(grid.at(0, 0).ground, 2);
  ASSERT_EQ(grid.at(0, 0).paired, 2);
  ASSERT_EQ(grid.at(0, 0).spurious, 10);
  EXPECT_DOUBLE_EQ(goodness_index(g, d, p), -1.0);
}

TEST(GoodnessIndex, SpuriousInEmptyPatchesIgnored) {
  auto g = make({Minutia(5, 5, 0)});
  auto d = make({Minutia(5, 5, 0), Minutia(200, 200, 0), Minutia(220, 100, 0)});
  EXPECT_DOUBLE_EQ(goodness_index(g, d, pair_minutiae(g, d)), 1.0);
}

TEST(GoodnessIndex, EmptyGroundRejected) {
  auto e = make({});
  EXPECT_THROW(goodness_index(e, e, pair_minutiae(e, e)), InvalidArgument);
}

TEST(PatchGrid, CountsAndShape) {
  auto g = make({Minutia(5, 5, 0), Minutia(20, 5, 0)}, 40, 20);
  auto d = make({Minutia(5, 6, 0)}, 40, 20);
  auto p = pair_minutiae(g, d);
  auto grid = build_patch_grid(g, d, p);
  EXPECT_EQ(grid.cols, 3);  // ceil(40 / 16)
  EXPECT_EQ(grid.rows, 2);  // ceil(20 / 16)
  EXPECT_EQ(grid.patch_count(), 6u);
  for (const auto& c : grid.patches) EXPECT_EQ(c.paired + c.missing, c.ground);
}

TEST(GoodnessIndex, RangeFuzz) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> n(1, 40), m(0, 80);
  for (int trial = 0; trial < 500; ++trial) {
    auto g = oracle::random_set(rng, n(rng), 96, 96);
    auto d = oracle::random_set(rng, m(rng), 96, 96);
    const double gi = goodness_index(g, d, pair_minutiae(g, d));
    ASSERT_GE(gi, -3.0);
    ASSERT_LE(gi, 1.0);
  }
}

TEST(LocalizationErrors, HandValues) {
  auto g = make({Minutia(10, 10, 0.0)});
  auto d = make({Minutia(13, 14, 0.3)});
  auto p = pair_minutiae(g, d);
  EXPECT_NEAR(positional_error(g, d, p), 5.0, 1e-12);
  EXPECT_NEAR(orientation_error(g, d, p), 0.3, 1e-12);

  auto g2 = make({Minutia(10, 10, 0.0), Minutia(100, 100, 0.4)});
  auto d2 = make({Minutia(10, 10, 0.0), Minutia(100, 102, 0.0)});
  auto p2 = pair_minutiae(g2, d2);
  EXPECT_NEAR(positional_error(g2, d2, p2), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(orientation_error(g2, d2, p2), std::sqrt(0.08), 1e-12);
}

TEST(LocalizationErrors, EmptyPairingRejected) {
  auto g = make({Minutia(10, 10, 0)});
  auto d = make({});
  auto p = pair_minutiae(g, d);
  EXPECT_THROW(positional_error(g, d, p), InvalidArgument);
  EXPECT_THROW(orientation_error(g, d, p), InvalidArgument);
}

TEST(LocalizationErrors, InvariantToPairOrder) {
  std::mt19937_64 rng(9);
  auto g = oracle::random_set(rng, 25, 80, 80);
  auto d = oracle::random_set(rng, 25, 80, 80);
  auto p = pair_minutiae(g, d);
  ASSERT_FALSE(p.pairs.empty());
  const double ep = positional_error(g, d, p), et = orientation_error(g, d, p);
  std::reverse(p.pairs.begin(), p.pairs.end());
  EXPECT_NEAR(positional_error(g, d, p), ep, 1e-12);
  EXPECT_NEAR(orientation_error(g, d, p), et, 1e-12);
}

TEST(ExtractorReport, RowsPerConditionAndMeans) {
  auto g = make({Minutia(10, 10, 0), Minutia(60, 60, 1)});
  auto half = make({Minutia(10, 10, 0)});
  std::vector<ExtractorCase> cases{
      {g, g, Condition::kNormal},
      {g, half, Condition::kNormal},
      {g, make({}), Condition::kWetFinger},
  };
  auto r = extractor_report(cases);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].condition, Condition::kNormal);
  EXPECT_DOUBLE_EQ(r.rows[0].paired_ratio.mean, 0.75);
  EXPECT_DOUBLE_EQ(r.rows[0].goodness_index.mean, (1.0 + 0.0) / 2);
  EXPECT_DOUBLE_EQ(r.rows[0].positional_error.mean, 0.0);
  EXPECT_EQ(r.rows[1].condition, Condition::kWetFinger);
  EXPECT_DOUBLE_EQ(r.rows[1].goodness_index.mean, -1.0);
  EXPECT_EQ(r.rows[1].positional_error.count, 0u);
  EXPECT_EQ(r.failures.size(), 1u);
}

TEST(ExtractorReport, EmptyGroundTruthExcluded) {
  std::vector<ExtractorCase> cases{{make({}), make({}), Condition::kNormal}};
  auto r = extractor_report(cases);
  EXPECT_TRUE(r.rows.empty());
  EXPECT_EQ(r.failures.size(), 1u);
}

TEST(ExtractorReport, PerfectCase) {
  auto g = make({Minutia(10, 10, 0)});
  auto r = extractor_report({{g, g, Condition::kDryFinger}});
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].paired_ratio.mean, 1.0);
  EXPECT_EQ(r.rows[0].goodness_index.mean, 1.0);
  EXPECT_EQ(r.rows[0].positional_error.mean, 0.0);
}

}  // namespace
}  // namespace fpeval
