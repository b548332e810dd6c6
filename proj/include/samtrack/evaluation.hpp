// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "samtrack/assignment.hpp"
#include "samtrack/core.hpp"

namespace samtrack {

struct IdMeasureReport {
  std::int64_t idtp = 0;
  std::int64_t idfp = 0;
  std::int64_t idfn = 0;
  double idf1 = 1.0;
  double idp = 1.0;
  double idr = 1.0;
};

struct ClearReport {
  double mota = 1.0;
  std::int64_t ids = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t matches = 0;
  std::int64_t gt_total = 0;
};

namespace detail {

using FrameKey = std::pair<int, std::int64_t>;  // (camera, frame)

inline std::map<FrameKey, std::vector<const TrackRow*>> rows_by_frame(const std::vector<TrackRow>& rows) {
  std::map<FrameKey, std::vector<const TrackRow*>> out;
  for (const auto& r : rows) out[{r.camera_id, r.frame}].push_back(&r);
  return out;
}

// 0/0 counts as a perfect score.
inline double ratio(double num, double den) { return den > 0.0 ? num / den : 1.0; }

}  // namespace detail

/// Per-identity-pair co-location counts and track lengths, the input to the
/// global identity matching.
struct IdentityOverlap {
  std::vector<std::int64_t> gt_ids;
  std::vector<std::int64_t> pred_ids;
  std::vector<std::int64_t> gt_len;
  std::vector<std::int64_t> pred_len;
  std::vector<std::vector<std::int64_t>> matches;  // [gt][pred]
};

inline IdentityOverlap identity_overlap(const std::vector<TrackRow>& gt, const std::vector<TrackRow>& pred,
                                        double iou_threshold) {
  IdentityOverlap ov;
  std::map<std::int64_t, std::size_t> gi, pi;
  for (const auto& r : gt) gi.emplace(r.identity, 0);
  for (const auto& r : pred) pi.emplace(r.identity, 0);
  for (auto& [id, idx] : gi) {
    idx = ov.gt_ids.size();
    ov.gt_ids.push_back(id);
  }
  for (auto& [id, idx] : pi) {
    idx = ov.pred_ids.size();
    ov.pred_ids.push_back(id);
  }
  ov.gt_len.assign(ov.gt_ids.size(), 0);
  ov.pred_len.assign(ov.pred_ids.size(), 0);
  ov.matches.assign(ov.gt_ids.size(), std::vector<std::int64_t>(ov.pred_ids.size(), 0));
  for (const auto& r : gt) ++ov.gt_len[gi[r.identity]];
  for (const auto& r : pred) ++ov.pred_len[pi[r.identity]];

  const auto pred_frames = detail::rows_by_frame(pred);
  for (const auto& [key, grows] : detail::rows_by_frame(gt)) {
    auto it = pred_frames.find(key);
    if (it == pred_frames.end()) continue;
    for (const TrackRow* g : grows) {
      for (const TrackRow* p : it->second) {
        if (iou(g->bbox, p->bbox) >= iou_threshold) ++ov.matches[gi[g->identity]][pi[p->identity]];
      }
    }
  }
  return ov;
}

inline IdMeasureReport id_measures_from_tp(std::int64_t idtp, std::int64_t total_gt, std::int64_t total_pred) {
  IdMeasureReport rep;
  rep.idtp = idtp;
  rep.idfn = total_gt - idtp;
  rep.idfp = total_pred - idtp;
  rep.idp = detail::ratio(static_cast<double>(rep.idtp), static_cast<double>(rep.idtp + rep.idfp));
  rep.idr = detail::ratio(static_cast<double>(rep.idtp), static_cast<double>(rep.idtp + rep.idfn));
  rep.idf1 = detail::ratio(2.0 * static_cast<double>(rep.idtp),
                           static_cast<double>(2 * rep.idtp + rep.idfp + rep.idfn));
  return rep;
}

/// Identity precision/recall/F1 from the minimum-cost one-to-one matching of
/// ground-truth identities to predicted identities.
inline IdMeasureReport id_measures(const std::vector<TrackRow>& gt, const std::vector<TrackRow>& pred,
                                   double iou_threshold = 0.5) {
  const IdentityOverlap ov = identity_overlap(gt, pred, iou_threshold);
  const std::size_t G = ov.gt_ids.size();
  const std::size_t P = ov.pred_ids.size();
  const auto total_gt = static_cast<std::int64_t>(gt.size());
  const auto total_pred = static_cast<std::int64_t>(pred.size());

  // [G real | G dummy-fn] x [P real | P dummy-fp]:
  //   real-real: FN + FP of that pairing, gt-dummy: whole gt track missed,
  //   dummy-pred: whole prediction false, dummy-dummy: free.
  const std::size_t n = G + P;
  DistanceMatrix cost(n, n);
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t p = 0; p < P; ++p) {
      cost.set(g, p, static_cast<double>(ov.gt_len[g] + ov.pred_len[p] - 2 * ov.matches[g][p]));
    }
    cost.set(g, P + g, static_cast<double>(ov.gt_len[g]));
  }
  for (std::size_t p = 0; p < P; ++p) {
    cost.set(G + p, p, static_cast<double>(ov.pred_len[p]));
    for (std::size_t g = 0; g < G; ++g) cost.set(G + p, P + g, 0.0);
  }

  std::int64_t idtp = 0;
  for (auto [r, c] : hungarian(cost).matched_pairs) {
    if (r < G && c < P) idtp += ov.matches[r][c];
  }
  return id_measures_from_tp(idtp, total_gt, total_pred);
}

/// CLEAR-MOT counts. Per camera and frame, previous pairings that still
/// overlap are kept first; the rest are matched by Hungarian on 1 - IoU.
inline ClearReport clear_metrics(const std::vector<TrackRow>& gt, const std::vector<TrackRow>& pred,
                                 double iou_threshold = 0.5) {
  ClearReport rep;
  rep.gt_total = static_cast<std::int64_t>(gt.size());
  std::map<std::pair<int, std::int64_t>, std::int64_t> last_pair;  // (camera, gt id) -> pred id

  const auto gt_frames = detail::rows_by_frame(gt);
  const auto pred_frames = detail::rows_by_frame(pred);
  std::set<detail::FrameKey> keys;
  for (const auto& [k, _] : gt_frames) keys.insert(k);
  for (const auto& [k, _] : pred_frames) keys.insert(k);

  static const std::vector<const TrackRow*> kNone;
  for (const auto& key : keys) {
    auto git = gt_frames.find(key);
    auto pit = pred_frames.find(key);
    const auto& g = git == gt_frames.end() ? kNone : git->second;
    const auto& p = pit == pred_frames.end() ? kNone : pit->second;
    const int cam = key.first;

    std::vector<char> g_used(g.size(), 0), p_used(p.size(), 0);
    std::vector<std::pair<std::size_t, std::size_t>> matches;

    for (std::size_t i = 0; i < g.size(); ++i) {
      auto lp = last_pair.find({cam, g[i]->identity});
      if (lp == last_pair.end()) continue;
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (p_used[j] || p[j]->identity != lp->second) continue;
        if (iou(g[i]->bbox, p[j]->bbox) >= iou_threshold) {
          g_used[i] = p_used[j] = 1;
          matches.emplace_back(i, j);
        }
        break;
      }
    }

    std::vector<std::size_t> gi, pj;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!g_used[i]) gi.push_back(i);
    for (std::size_t j = 0; j < p.size(); ++j)
      if (!p_used[j]) pj.push_back(j);
    DistanceMatrix m(gi.size(), pj.size());
    for (std::size_t a = 0; a < gi.size(); ++a) {
      for (std::size_t b = 0; b < pj.size(); ++b) {
        const double v = iou(g[gi[a]]->bbox, p[pj[b]]->bbox);
        if (v >= iou_threshold) m.set(a, b, 1.0 - v);
      }
    }
    for (auto [a, b] : hungarian(m).matched_pairs) {
      g_used[gi[a]] = p_used[pj[b]] = 1;
      matches.emplace_back(gi[a], pj[b]);
    }

    for (auto [i, j] : matches) {
      auto [it, inserted] = last_pair.try_emplace({cam, g[i]->identity}, p[j]->identity);
      if (!inserted && it->second != p[j]->identity) {
        ++rep.ids;
        it->second = p[j]->identity;
      }
    }
    rep.matches += static_cast<std::int64_t>(matches.size());
    rep.fn += static_cast<std::int64_t>(g.size() - matches.size());
    rep.fp += static_cast<std::int64_t>(p.size() - matches.size());
  }
  const double errors = static_cast<double>(rep.fn + rep.fp + rep.ids);
  rep.mota = 1.0 - errors / static_cast<double>(std::max<std::int64_t>(1, rep.gt_total));
  return rep;
}

/// Fraction of (identity, camera pair) links that the prediction preserves:
/// per identity and camera the dominant co-located predicted id is taken, and
/// a link counts when both cameras agree on it.
inline double cross_camera_link_recall(const std::vector<TrackRow>& gt, const std::vector<TrackRow>& pred,
                                       double iou_threshold = 0.5) {
  // (gt id, camera) -> pred id -> count
  std::map<std::pair<std::int64_t, int>, std::map<std::int64_t, std::int64_t>> votes;
  std::map<std::int64_t, std::set<int>> cams;
  for (const auto& r : gt) cams[r.identity].insert(r.camera_id);
  const auto pred_frames = detail::rows_by_frame(pred);
  for (const auto& g : gt) {
    auto it = pred_frames.find({g.camera_id, g.frame});
    if (it == pred_frames.end()) continue;
    const TrackRow* best = nullptr;
    double best_iou = iou_threshold;
    for (const TrackRow* p : it->second) {
      const double v = iou(g.bbox, p->bbox);
      if (v >= best_iou) {
        best_iou = v;
        best = p;
      }
    }
    if (best) ++votes[{g.identity, g.camera_id}][best->identity];
  }
  auto dominant = [&](std::int64_t id, int cam) -> std::int64_t {
    auto it = votes.find({id, cam});
    if (it == votes.end()) return -1;
    std::int64_t best = -1, count = -1;
    for (auto [pid, c] : it->second) {
      if (c > count) {
        count = c;
        best = pid;
      }
    }
    return best;
  };

  std::int64_t links = 0, kept = 0;
  for (const auto& [id, cs] : cams) {
    const std::vector<int> v(cs.begin(), cs.end());
    for (std::size_t a = 0; a < v.size(); ++a) {
      for (std::size_t b = a + 1; b < v.size(); ++b) {
        ++links;
        const std::int64_t da = dominant(id, v[a]);
        if (da >= 0 && da == dominant(id, v[b])) ++kept;
      }
    }
  }
  return links == 0 ? 1.0 : static_cast<double>(kept) / static_cast<double>(links);
}

struct EvalReport {
  IdMeasureReport id;
  ClearReport clear;
  double iou_threshold = 0.5;

  std::string to_text() const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << "IDF1  " << id.idf1 << "\nIDP   " << id.idp << "\nIDR   " << id.idr << "\nIDTP  " << id.idtp
       << "\nIDFP  " << id.idfp << "\nIDFN  " << id.idfn << "\nMOTA  " << clear.mota << "\nIDS   " << clear.ids
       << "\nFP    " << clear.fp << "\nFN    " << clear.fn << "\nGT    " << clear.gt_total << '\n';
    return os.str();
  }
};

inline EvalReport evaluate(const std::vector<TrackRow>& gt, const std::vector<TrackRow>& pred,
                           double iou_threshold = 0.5) {
  return {id_measures(gt, pred, iou_threshold), clear_metrics(gt, pred, iou_threshold), iou_threshold};
}

}  // namespace samtrack
