// SPDX-License-Identifier: Apache-2.0
// Slow, obviously-correct reference implementations used to check the
// library. None of them call into the code they are checking.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <vector>

namespace oracle {

/// Minimum total over all permutations of an n x n integer matrix.
inline long long brute_force_assignment(const std::vector<std::vector<long long>>& m) {
  const std::size_t n = m.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  long long best = std::numeric_limits<long long>::max();
  do {
    long long s = 0;
    for (std::size_t i = 0; i < n; ++i) s += m[i][perm[i]];
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return n == 0 ? 0 : best;
}

/// Rectangular version with forbidden (negative) cells: maximize the number
/// of pairs first, then minimize cost. Returns {pairs, cost}.
inline std::pair<int, long long> brute_force_rect(const std::vector<std::vector<long long>>& m, std::size_t cols) {
  const std::size_t rows = m.size();
  std::pair<int, long long> best{0, 0};
  bool have = false;
  std::vector<char> used(cols, 0);
  auto rec = [&](auto&& self, std::size_t r, int pairs, long long cost) -> void {
    if (r == rows) {
      if (!have || pairs > best.first || (pairs == best.first && cost < best.second)) {
        best = {pairs, cost};
        have = true;
      }
      return;
    }
    self(self, r + 1, pairs, cost);
    for (std::size_t c = 0; c < cols; ++c) {
      if (used[c] || m[r][c] < 0) continue;
      used[c] = 1;
      self(self, r + 1, pairs + 1, cost + m[r][c]);
      used[c] = 0;
    }
  };
  rec(rec, 0, 0, 0);
  return best;
}

inline int strict_count(const std::vector<double>& confidences, double gamma) {
  int n = 0;
  for (double c : confidences) n += (c > gamma) ? 1 : 0;
  return n;
}

/// Textbook dense network: x -> relu(W1 x + b1) -> ... -> W5 h + b5.
/// Weights are per layer, row-major [out][in].
inline std::vector<double> naive_mlp(const std::vector<double>& x, const std::vector<std::vector<double>>& weights,
                                     const std::vector<std::vector<double>>& biases,
                                     const std::vector<std::size_t>& shape) {
  std::vector<double> h = x;
  for (std::size_t l = 0; l + 1 < shape.size(); ++l) {
    const std::size_t in = shape[l], out = shape[l + 1];
    std::vector<double> next(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      double s = biases[l][o];
      for (std::size_t i = 0; i < in; ++i) s += weights[l][o * in + i] * h[i];
      next[o] = (l + 2 < shape.size()) ? std::max(0.0, s) : s;
    }
    h = std::move(next);
  }
  return h;
}

inline double l2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline std::vector<double> mean_of(const std::vector<std::vector<double>>& xs) {
  std::vector<double> m(xs.front().size(), 0.0);
  for (const auto& x : xs)
    for (std::size_t i = 0; i < x.size(); ++i) m[i] += x[i];
  for (double& v : m) v /= static_cast<double>(xs.size());
  return m;
}

/// Lifecycle automaton written as an explicit transition table over
/// (phase, miss counter). Phases: 0 Tentative, 1 Confirmed, 2 Invisible,
/// 3 Disappeared. Events: 0 match valid, 1 match invalid, 2 miss.
struct Automaton {
  int mu_m;
  int mu_d;

  // Returns {phase, misses}, or nullopt when the event is illegal.
  std::optional<std::pair<int, int>> step(int phase, int misses, int event) const {
    if (phase == 3) {
      if (event == 2) return std::pair{3, misses};
      return std::nullopt;
    }
    if (event == 0) return std::pair{1, 0};                       // any valid match ends up Confirmed
    if (event == 1) return std::pair{phase == 0 ? 0 : 1, 0};      // Tentative needs a valid feature
    if (phase == 0) return std::pair{3, 0};                       // one miss kills a Tentative
    if (phase == 1) return misses + 1 == mu_m ? std::pair{2, 0} : std::pair{1, misses + 1};
    return misses + 1 == mu_d ? std::pair{3, 0} : std::pair{2, misses + 1};
  }
};

struct Row {
  int cam;
  long long frame;
  long long id;
  double x, y, w, h;
};

inline double iou(const Row& a, const Row& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

/// IDTP by enumerating every partial injective map from GT ids to predicted ids.
inline long long exhaustive_idtp(const std::vector<Row>& gt, const std::vector<Row>& pred, double thr) {
  std::vector<long long> gids, pids;
  for (const auto& r : gt)
    if (std::find(gids.begin(), gids.end(), r.id) == gids.end()) gids.push_back(r.id);
  for (const auto& r : pred)
    if (std::find(pids.begin(), pids.end(), r.id) == pids.end()) pids.push_back(r.id);
  std::vector<std::vector<long long>> co(gids.size(), std::vector<long long>(pids.size(), 0));
  for (const auto& g : gt) {
    for (const auto& p : pred) {
      if (g.cam == p.cam && g.frame == p.frame && iou(g, p) >= thr) {
        const auto gi = std::find(gids.begin(), gids.end(), g.id) - gids.begin();
        const auto pi = std::find(pids.begin(), pids.end(), p.id) - pids.begin();
        ++co[gi][pi];
      }
    }
  }
  long long best = 0;
  std::vector<char> used(pids.size(), 0);
  auto rec = [&](auto&& self, std::size_t g, long long acc) -> void {
    if (g == gids.size()) {
      best = std::max(best, acc);
      return;
    }
    self(self, g + 1, acc);
    for (std::size_t p = 0; p < pids.size(); ++p) {
      if (used[p]) continue;
      used[p] = 1;
      self(self, g + 1, acc + co[g][p]);
      used[p] = 0;
    }
  };
  rec(rec, 0, 0);
  return best;
}

}  // namespace oracle
