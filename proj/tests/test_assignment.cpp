// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "samtrack/assignment.hpp"

using namespace samtrack;

namespace {

void expect_feasible(const AssignmentResult& r, std::size_t rows, std::size_t cols) {
  std::set<std::size_t> rs, cs;
  for (auto [a, b] : r.matched_pairs) {
    EXPECT_TRUE(rs.insert(a).second);
    EXPECT_TRUE(cs.insert(b).second);
  }
  for (auto a : r.unmatched_rows) EXPECT_TRUE(rs.insert(a).second);
  for (auto b : r.unmatched_cols) EXPECT_TRUE(cs.insert(b).second);
  EXPECT_EQ(rs.size(), rows);
  EXPECT_EQ(cs.size(), cols);
}

}  // namespace

TEST(Hungarian, ZerosTieBreak) {
  const auto r = hungarian(DistanceMatrix::from_rows({{0, 0}, {0, 0}}));
  EXPECT_EQ(r.matched_pairs, (std::vector<IndexPair>{{0, 0}, {1, 1}}));
}

TEST(Hungarian, TwoByTwo) {
  const auto m = DistanceMatrix::from_rows({{1, 2}, {2, 1}});
  const auto r = hungarian(m);
  EXPECT_EQ(r.matched_pairs, (std::vector<IndexPair>{{0, 0}, {1, 1}}));
  EXPECT_DOUBLE_EQ(r.total_cost(m), 2.0);
}

TEST(Hungarian, ForbiddenCellsStayUnmatched) {
  const auto r = hungarian(DistanceMatrix::from_rows({{1, kForbidden}, {kForbidden, kForbidden}}));
  EXPECT_EQ(r.matched_pairs, (std::vector<IndexPair>{{0, 0}}));
  EXPECT_EQ(r.unmatched_rows, (std::vector<std::size_t>{1}));
  EXPECT_EQ(r.unmatched_cols, (std::vector<std::size_t>{1}));
}

TEST(Hungarian, EmptyAndAllForbidden) {
  EXPECT_TRUE(hungarian(DistanceMatrix(0, 3)).matched_pairs.empty());
  EXPECT_EQ(hungarian(DistanceMatrix(0, 3)).unmatched_cols.size(), 3u);
  const auto r = hungarian(DistanceMatrix(2, 2));
  EXPECT_TRUE(r.matched_pairs.empty());
  expect_feasible(r, 2, 2);
}

TEST(Hungarian, CardinalityBeatsCost) {
  // Pairing (0,0) alone is cheapest, but (0,1)+(1,0) matches more.
  const auto m = DistanceMatrix::from_rows({{0, 100}, {100, kForbidden}});
  EXPECT_EQ(hungarian(m).matched_pairs.size(), 2u);
}

TEST(Hungarian, MatchesBruteForceOnSquareIntegers) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> val(0, 50);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + trial % 7;
    std::vector<std::vector<long long>> im(n, std::vector<long long>(n));
    std::vector<std::vector<double>> dm(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) dm[i][j] = static_cast<double>(im[i][j] = val(rng));
    const auto m = DistanceMatrix::from_rows(dm);
    const auto r = hungarian(m);
    ASSERT_EQ(r.matched_pairs.size(), n);
    ASSERT_EQ(static_cast<long long>(r.total_cost(m)), oracle::brute_force_assignment(im));
  }
}

TEST(Hungarian, MatchesBruteForceOnRectangularWithForbidden) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> val(0, 30);
  std::bernoulli_distribution forbid(0.3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t rows = 1 + rng() % 5, cols = 1 + rng() % 5;
    std::vector<std::vector<long long>> im(rows, std::vector<long long>(cols));
    DistanceMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        if (forbid(rng)) {
          im[i][j] = -1;
        } else {
          im[i][j] = val(rng);
          m.set(i, j, static_cast<double>(im[i][j]));
        }
      }
    }
    const auto r = hungarian(m);
    expect_feasible(r, rows, cols);
    const auto [pairs, cost] = oracle::brute_force_rect(im, cols);
    ASSERT_EQ(static_cast<int>(r.matched_pairs.size()), pairs);
    ASSERT_EQ(static_cast<long long>(r.total_cost(m)), cost);
  }
}

TEST(Greedy, NothingBelowThreshold) {
  EXPECT_TRUE(greedy_associate(DistanceMatrix::from_rows({{5, 6}, {7, 8}}), 3).empty());
}

TEST(Greedy, PicksCheapestFirst) {
  EXPECT_EQ(greedy_associate(DistanceMatrix::from_rows({{1, 5}, {5, 2}}), 3),
            (std::vector<IndexPair>{{0, 0}, {1, 1}}));
  EXPECT_EQ(greedy_associate(DistanceMatrix::from_rows({{1, 2}, {2, 9}}), 3), (std::vector<IndexPair>{{0, 0}}));
}

TEST(Greedy, ThresholdIsInclusiveAndTiesBreakOnIndex) {
  const auto p = greedy_associate_with_costs(DistanceMatrix::from_rows({{3, 3}, {3, 3}}), 3);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].row, 0u);
  EXPECT_EQ(p[0].col, 0u);
  EXPECT_EQ(p[1].row, 1u);
  EXPECT_EQ(p[1].col, 1u);
}

TEST(Greedy, MatchesSimulationOracle) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t rows = 1 + rng() % 6, cols = 1 + rng() % 6;
    DistanceMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) m.set(i, j, u(rng));
    const double thr = u(rng);
    // Simulate: repeatedly scan for the smallest admissible entry.
    std::vector<char> ru(rows, 0), cu(cols, 0);
    std::vector<IndexPair> expect;
    while (true) {
      double best = kForbidden;
      std::size_t bi = rows, bj = cols;
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
          if (!ru[i] && !cu[j] && m(i, j) <= thr && m(i, j) < best) {
            best = m(i, j);
            bi = i;
            bj = j;
          }
      if (bi == rows) break;
      ru[bi] = cu[bj] = 1;
      expect.emplace_back(bi, bj);
    }
    ASSERT_EQ(greedy_associate(m, thr), expect);
  }
}
