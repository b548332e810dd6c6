// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include "samtrack/core.hpp"
#include "samtrack/fused_feature.hpp"
#include "samtrack/sct.hpp"
#include "samtrack/state_estimation.hpp"

namespace samtrack {

/// One single-camera trajectory as produced by the SCT stage.
struct TrajectorySegment {
  int camera_id = 0;
  std::int64_t local_id = 0;
  std::vector<TrackRow> rows;                   // output rows, untouched by MCT
  std::vector<TrackObservation> observations;  // appearance carriers for the rows
};

struct Trajectory {
  std::int64_t global_id = 0;
  std::vector<TrajectorySegment> segments;
  FusedTrackingFeature fused;

  std::set<int> cameras() const {
    std::set<int> out;
    for (const auto& s : segments) out.insert(s.camera_id);
    return out;
  }

  // Time span over all segment rows.
  TimeSpan span() const {
    TimeSpan t{std::numeric_limits<std::int64_t>::max(), std::numeric_limits<std::int64_t>::min()};
    for (const auto& s : segments) {
      for (const auto& r : s.rows) {
        t.start = std::min(t.start, r.frame);
        t.end = std::max(t.end, r.frame);
      }
    }
    return t;
  }

  const TrackRow* first_row() const {
    const TrackRow* best = nullptr;
    for (const auto& s : segments)
      for (const auto& r : s.rows)
        if (!best || r.frame < best->frame) best = &r;
    return best;
  }

  const TrackRow* last_row() const {
    const TrackRow* best = nullptr;
    for (const auto& s : segments)
      for (const auto& r : s.rows)
        if (!best || r.frame > best->frame) best = &r;
    return best;
  }

  /// Replays every observation of every segment in (frame, camera) order.
  void rebuild_fused(const TrackerConfig& cfg) {
    std::vector<std::pair<int, const TrackObservation*>> all;
    for (const auto& s : segments)
      for (const auto& o : s.observations) all.emplace_back(s.camera_id, &o);
    std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
      return std::tie(a.second->frame, a.first) < std::tie(b.second->frame, b.first);
    });
    fused = FusedTrackingFeature{};
    for (const auto& [cam, o] : all) update_on_match(fused, o->embedding, o->occlusion, o->orientation, o->frame, cfg);
  }
};

/// Groups per-camera track rows into trajectories and attaches each row to the
/// detection it came from (same camera and frame, highest IoU), recovering the
/// appearance data. Detections are state-estimated here.
inline std::vector<Trajectory> build_trajectories(const std::vector<TrackRow>& rows,
                                                  std::vector<DetectionObservation> dets, const TrackerConfig& cfg,
                                                  const OrientationClassifier& classifier = {}) {
  std::map<std::pair<int, std::int64_t>, std::vector<const DetectionObservation*>> by_frame;
  for (auto& d : dets) estimate_state(d, cfg, classifier);
  for (const auto& d : dets) by_frame[{d.camera_id, d.frame}].push_back(&d);

  std::map<std::pair<int, std::int64_t>, TrajectorySegment> segments;
  for (const auto& r : rows) {
    auto& seg = segments[{r.camera_id, r.identity}];
    seg.camera_id = r.camera_id;
    seg.local_id = r.identity;
    seg.rows.push_back(r);
    auto it = by_frame.find({r.camera_id, r.frame});
    if (it == by_frame.end()) continue;
    const DetectionObservation* best = nullptr;
    double best_iou = 0.0;
    for (const auto* d : it->second) {
      const double v = iou(d->bbox, r.bbox);
      if (v > best_iou) {
        best_iou = v;
        best = d;
      }
    }
    if (best) seg.observations.push_back(TrackObservation::from(*best));
  }

  std::vector<Trajectory> out;
  std::int64_t next = 1;
  for (auto& [key, seg] : segments) {
    std::sort(seg.rows.begin(), seg.rows.end(), track_row_less);
    std::stable_sort(seg.observations.begin(), seg.observations.end(),
                     [](const TrackObservation& a, const TrackObservation& b) { return a.frame < b.frame; });
    Trajectory t;
    t.global_id = next++;
    t.segments.push_back(std::move(seg));
    t.rebuild_fused(cfg);
    out.push_back(std::move(t));
  }
  return out;
}

/// Cross-camera pair distance, or kForbidden when the pair may not be linked.
inline double mct_pair_distance(const Trajectory& a, const Trajectory& b, const TrackerConfig& cfg) {
  const auto ca = a.cameras();
  for (int c : b.cameras()) {
    if (ca.count(c)) return kForbidden;
  }
  const TrackRow* af = a.first_row();
  const TrackRow* bf = b.first_row();
  if (!af || !bf) return kForbidden;
  if (!physical_constraints_ok(a.span(), af->bbox, a.last_row()->bbox, b.span(), bf->bbox, b.last_row()->bbox, cfg,
                               cfg.mct_velocity_gate)) {
    return kForbidden;
  }
  return tracklet_pair_distance(a.fused, b.fused, PairMode::Cluster);
}

inline DistanceMatrix build_mct_matrix(const std::vector<Trajectory>& trajs, const TrackerConfig& cfg) {
  DistanceMatrix m(trajs.size(), trajs.size());
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    for (std::size_t j = i + 1; j < trajs.size(); ++j) {
      const double d = mct_pair_distance(trajs[i], trajs[j], cfg);
      m.set(i, j, d);
      m.set(j, i, d);
    }
  }
  return m;
}

struct MctResult {
  std::vector<Trajectory> trajectories;
  std::vector<double> accepted_costs;  // in acceptance order
};

/// Greedy cross-camera linking. After each merge the merged trajectory's
/// feature is rebuilt and its row/column recomputed, so camera-overlap gates
/// see the merged camera set.
inline MctResult associate_mct(std::vector<Trajectory> trajs, const TrackerConfig& cfg) {
  MctResult result;
  DistanceMatrix m = build_mct_matrix(trajs, cfg);
  const std::size_t n = trajs.size();
  std::vector<char> active(n, 1);

  while (true) {
    double best = kForbidden;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (active[j] && m(i, j) < best) {
          best = m(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    if (is_forbidden(best) || best > cfg.theta_mct) break;

    result.accepted_costs.push_back(best);
    for (auto& seg : trajs[bj].segments) trajs[bi].segments.push_back(std::move(seg));
    trajs[bj].segments.clear();
    active[bj] = 0;
    trajs[bi].rebuild_fused(cfg);
    for (std::size_t k = 0; k < n; ++k) {
      if (k == bi) continue;
      const double d = active[k] ? mct_pair_distance(trajs[bi], trajs[k], cfg) : kForbidden;
      m.set(bi, k, d);
      m.set(k, bi, d);
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (active[i]) result.trajectories.push_back(std::move(trajs[i]));
  }
  // Stable global numbering: by first frame, then lowest (camera, local id).
  auto key = [](const Trajectory& t) {
    std::tuple<std::int64_t, int, std::int64_t> k{t.span().start, std::numeric_limits<int>::max(), 0};
    for (const auto& s : t.segments) {
      if (std::tie(s.camera_id, s.local_id) < std::tie(std::get<1>(k), std::get<2>(k))) {
        std::get<1>(k) = s.camera_id;
        std::get<2>(k) = s.local_id;
      }
    }
    return k;
  };
  std::stable_sort(result.trajectories.begin(), result.trajectories.end(),
                   [&](const Trajectory& a, const Trajectory& b) { return key(a) < key(b); });
  std::int64_t next = 1;
  for (auto& t : result.trajectories) t.global_id = next++;
  return result;
}

/// Output rows relabelled with global ids, sorted by (camera, frame, id).
inline std::vector<TrackRow> global_rows(const std::vector<Trajectory>& trajs) {
  std::vector<TrackRow> rows;
  for (const auto& t : trajs) {
    for (const auto& s : t.segments) {
      for (TrackRow r : s.rows) {
        r.identity = t.global_id;
        rows.push_back(r);
      }
    }
  }
  std::sort(rows.begin(), rows.end(), track_row_less);
  return rows;
}

}  // namespace samtrack
