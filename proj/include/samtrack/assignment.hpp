// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <tuple>
#include <utility>
#include <vector>

#include "samtrack/core.hpp"

namespace samtrack {

using IndexPair = std::pair<std::size_t, std::size_t>;

struct AssignmentResult {
  std::vector<IndexPair> matched_pairs;  // sorted by row
  std::vector<std::size_t> unmatched_rows;
  std::vector<std::size_t> unmatched_cols;

  double total_cost(const DistanceMatrix& m) const {
    double total = 0.0;
    for (auto [r, c] : matched_pairs) total += m(r, c);
    return total;
  }
};

namespace detail {

// Kuhn-Munkres with row/column potentials on a dense square matrix.
// Returns col_of_row. O(n^3).
inline std::vector<std::size_t> solve_square(const std::vector<double>& cost, std::size_t n) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<double> minv(n + 1);
  std::vector<char> used(n + 1);

  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> col_of_row(n, 0);
  for (std::size_t j = 1; j <= n; ++j) {
    if (p[j] != 0) col_of_row[p[j] - 1] = j - 1;
  }
  return col_of_row;
}

}  // namespace detail

/// Minimum-cost matching among all matchings of maximum feasible size.
/// Forbidden entries are never matched. The matrix is padded to square and
/// forbidden/dummy cells get a penalty larger than any sum of real costs, so
/// cardinality dominates cost.
inline AssignmentResult hungarian(const DistanceMatrix& m) {
  AssignmentResult result;
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  const std::size_t n = std::max(rows, cols);

  double finite_sum = 0.0;
  bool any_finite = false;
  for (std::size_t r = 0; r < rows; ++r) {
    for (double v : m.row(r)) {
      if (!is_forbidden(v)) {
        finite_sum += v;
        any_finite = true;
      }
    }
  }

  if (!any_finite) {
    for (std::size_t r = 0; r < rows; ++r) result.unmatched_rows.push_back(r);
    for (std::size_t c = 0; c < cols; ++c) result.unmatched_cols.push_back(c);
    return result;
  }

  const double penalty = 2.0 * finite_sum + 1.0;
  std::vector<double> cost(n * n, penalty);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = m(r, c);
      if (!is_forbidden(v)) cost[r * n + c] = v;
    }
  }

  const auto col_of_row = detail::solve_square(cost, n);
  std::vector<char> col_used(cols, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t c = col_of_row[r];
    if (c < cols && !is_forbidden(m(r, c))) {
      result.matched_pairs.emplace_back(r, c);
      col_used[c] = 1;
    } else {
      result.unmatched_rows.push_back(r);
    }
  }
  for (std::size_t c = 0; c < cols; ++c) {
    if (!col_used[c]) result.unmatched_cols.push_back(c);
  }
  return result;
}

struct GreedyPair {
  std::size_t row = 0;
  std::size_t col = 0;
  double cost = 0.0;
};

/// Repeatedly accepts the globally cheapest usable entry until the next one
/// exceeds the threshold. Ties break on (row, col). Acceptance order is kept.
inline std::vector<GreedyPair> greedy_associate_with_costs(const DistanceMatrix& m, double threshold) {
  std::vector<GreedyPair> candidates;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      if (!is_forbidden(v) && v <= threshold) candidates.push_back({r, c, v});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const GreedyPair& a, const GreedyPair& b) {
    return std::tie(a.cost, a.row, a.col) < std::tie(b.cost, b.row, b.col);
  });

  std::vector<char> row_used(m.rows(), 0), col_used(m.cols(), 0);
  std::vector<GreedyPair> accepted;
  for (const auto& p : candidates) {
    if (row_used[p.row] || col_used[p.col]) continue;
    row_used[p.row] = col_used[p.col] = 1;
    accepted.push_back(p);
  }
  return accepted;
}

inline std::vector<IndexPair> greedy_associate(const DistanceMatrix& m, double threshold) {
  std::vector<IndexPair> out;
  for (const auto& p : greedy_associate_with_costs(m, threshold)) out.emplace_back(p.row, p.col);
  return out;
}

}  // namespace samtrack
