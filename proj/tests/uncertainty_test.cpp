#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "fpeval/uncertainty.hpp"
#include "oracles.hpp"

namespace fpeval {
namespace {

TEST(NormalizeScores, IdentityBounds) {
  std::vector<double> s{0, 0.5, 1};
  EXPECT_EQ(normalize_scores(s, 0, 1), s);
}

TEST(NormalizeScores, EndpointsAndClamp) {
  std::vector<double> s{20, 120, 150, -4};
  auto n = normalize_scores(s, 20, 120);
  EXPECT_EQ(n[0], 0.0);
  EXPECT_EQ(n[1], 1.0);
  EXPECT_EQ(n[2], 1.0);
  EXPECT_EQ(n[3], 0.0);
  std::vector<double> one{150};
  EXPECT_EQ(normalize_scores(one, 0, 100)[0], 1.0);
}

TEST(NormalizeScores, BadBounds) {
  std::vector<double> s{0.5};
  EXPECT_THROW(normalize_scores(s, 1, 1), InvalidArgument);
  EXPECT_THROW(normalize_scores(s, 2, 1), InvalidArgument);
}

TEST(StandardUncertainty, HandValues) {
  std::vector<double> same{0.3, 0.3, 0.3};
  EXPECT_EQ(standard_uncertainty(same).u, 0.0);

  std::vector<double> two{0.0, 1.0};
  auto r = standard_uncertainty(two);
  EXPECT_DOUBLE_EQ(r.mean, 0.5);
  EXPECT_DOUBLE_EQ(r.u, 0.5);

  std::vector<double> three{0.2, 0.4, 0.6};
  auto r3 = standard_uncertainty(three);
  EXPECT_NEAR(r3.mean, 0.4, 1e-15);
  EXPECT_NEAR(r3.u, 0.16329931618554522, 1e-12);  // sqrt(0.08 / 3)
}

TEST(StandardUncertainty, EmptyRejected) {
  std::vector<double> none;
  EXPECT_THROW(standard_uncertainty(none), InvalidArgument);
}

TEST(TotalUncertainty, HandValues) {
  std::vector<double> one{0.27};
  EXPECT_DOUBLE_EQ(total_uncertainty(one), 0.27);
  std::vector<double> two{0.3, 0.4};
  EXPECT_NEAR(total_uncertainty(two), 0.3535533905932738, 1e-12);  // sqrt(0.125)
  std::vector<double> zeros{0, 0, 0};
  EXPECT_EQ(total_uncertainty(zeros), 0.0);
  std::vector<double> none;
  EXPECT_THROW(total_uncertainty(none), InvalidArgument);
}

TEST(RunUncertainty, ConstantScorer) {
  std::vector<int> refs{1, 2, 3};
  std::vector<std::vector<int>> pert{{1, 2}, {3}, {4, 5, 6}};
  auto r = run_uncertainty(std::span<const int>(refs), pert, [](int, int) { return 0.7; }, kUnitBounds);
  EXPECT_EQ(r.total, 0.0);
  EXPECT_EQ(r.references(), 3u);
}

TEST(RunUncertainty, SingleReferenceTwoScores) {
  std::vector<int> refs{0};
  std::vector<std::vector<int>> pert{{0, 1}};
  auto r = run_uncertainty(std::span<const int>(refs), pert, [](int, int n) { return double(n); }, kUnitBounds);
  EXPECT_DOUBLE_EQ(r.total, 0.5);
  EXPECT_DOUBLE_EQ(r.mean[0], 0.5);
}

TEST(RunUncertainty, ScorerFailureIdentifiesPair) {
  std::vector<int> refs{0, 1};
  std::vector<std::vector<int>> pert{{0, 1}, {0, 1, 2}};
  try {
    run_uncertainty(std::span<const int>(refs), pert,
                    [](int k, int n) -> double {
                      if (k == 1 && n == 2) throw std::runtime_error("boom");
                      return 0.5;
                    },
                    kUnitBounds);
    FAIL() << "expected ScorerError";
  } catch (const ScorerError& e) {
    EXPECT_EQ(e.reference(), 1u);
    EXPECT_EQ(e.perturbation(), 2u);
  }
}

TEST(RunUncertainty, MissingPerturbationsRejected) {
  std::vector<int> refs{0};
  std::vector<std::vector<int>> pert{{}};
  EXPECT_THROW(run_uncertainty(std::span<const int>(refs), pert, [](int, int) { return 0.0; }, kUnitBounds),
               InvalidArgument);
}

TEST(RunUncertainty, ClampsCountedAndGoodnessIndexMapping) {
  auto r = uncertainty_from_scores({{-3.0, 1.0, 2.0}}, kGoodnessIndexBounds);
  EXPECT_EQ(r.clamped, 1u);
  // (GI + 3) / 4: -3 -> 0, 1 -> 1, 2 -> clamped to 1.
  EXPECT_NEAR(r.mean[0], 2.0 / 3.0, 1e-15);
}

TEST(RunUncertainty, ReportConsistencyAndBounds) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<double>> raw(1 + trial % 7);
    for (auto& row : raw) row.resize(1 + (trial * 7) % 13);
    for (auto& row : raw)
      for (auto& v : row) v = u(rng);
    auto r = uncertainty_from_scores(raw, kUnitBounds);
    double ss = 0;
    for (double v : r.uncertainty) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 0.5);
      ss += v * v;
    }
    ASSERT_NEAR(r.total, std::sqrt(ss / r.references()), 1e-12);
    ASSERT_NEAR(r.total, oracle::direct_u_total(raw, 0, 1), 1e-12);
  }
}

TEST(RunUncertainty, PermutationInvariance) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2, 5);
  std::vector<std::vector<double>> raw(6, std::vector<double>(9));
  for (auto& row : raw)
    for (auto& v : row) v = u(rng);
  auto base = uncertainty_from_scores(raw, {-1, 4});
  auto shuffled = raw;
  for (auto& row : shuffled) std::shuffle(row.begin(), row.end(), rng);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  auto r = uncertainty_from_scores(shuffled, {-1, 4});
  EXPECT_NEAR(r.total, base.total, 1e-12);
}

}  // namespace
}  // namespace fpeval
