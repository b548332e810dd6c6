// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "samtrack/assignment.hpp"
#include "samtrack/core.hpp"
#include "samtrack/fused_feature.hpp"
#include "samtrack/state_estimation.hpp"

namespace samtrack {

enum class TrackingPhase : std::uint8_t { Tentative, Confirmed, Invisible, Disappeared };

inline const char* to_string(TrackingPhase p) {
  switch (p) {
    case TrackingPhase::Tentative: return "tentative";
    case TrackingPhase::Confirmed: return "confirmed";
    case TrackingPhase::Invisible: return "invisible";
    case TrackingPhase::Disappeared: return "disappeared";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Phase automaton
// ---------------------------------------------------------------------------

enum class PhaseEvent : std::uint8_t { MatchValid, MatchInvalid, Miss };

struct PhaseState {
  TrackingPhase phase = TrackingPhase::Tentative;
  int miss_count = 0;

  friend bool operator==(const PhaseState&, const PhaseState&) = default;
};

/// One step of the tracklet lifecycle. miss_count counts consecutive misses
/// since entering the current phase.
inline PhaseState phase_transition(PhaseState s, PhaseEvent e, const TrackerConfig& cfg) {
  if (s.phase == TrackingPhase::Disappeared) {
    if (e == PhaseEvent::Miss) return s;
    throw ContractViolation("match against a Disappeared tracklet");
  }
  if (e != PhaseEvent::Miss) {
    switch (s.phase) {
      case TrackingPhase::Tentative:
        if (e == PhaseEvent::MatchValid) s.phase = TrackingPhase::Confirmed;
        break;
      case TrackingPhase::Invisible:
        s.phase = TrackingPhase::Confirmed;
        break;
      default:
        break;
    }
    s.miss_count = 0;
    return s;
  }

  ++s.miss_count;
  switch (s.phase) {
    case TrackingPhase::Tentative:
      s = {TrackingPhase::Disappeared, 0};
      break;
    case TrackingPhase::Confirmed:
      if (s.miss_count >= cfg.mu_m) s = {TrackingPhase::Invisible, 0};
      break;
    case TrackingPhase::Invisible:
      if (s.miss_count >= cfg.mu_d) s = {TrackingPhase::Disappeared, 0};
      break;
    default:
      break;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Tracklet
// ---------------------------------------------------------------------------

struct TrackObservation {
  std::int64_t frame = 0;
  BBox bbox;
  double det_confidence = 1.0;
  OcclusionStatus occlusion = OcclusionStatus::Valid;
  Orientation orientation = Orientation::Front;
  ReIDFeature embedding;

  static TrackObservation from(const DetectionObservation& d) {
    return {d.frame, d.bbox, d.det_confidence, d.occlusion, d.orientation, d.embedding};
  }

  friend bool operator==(const TrackObservation&, const TrackObservation&) = default;
};

/// Rebuilds a fused feature by folding observations in time order.
inline FusedTrackingFeature replay_fused(std::span<const TrackObservation> observations, const TrackerConfig& cfg,
                                         std::int64_t current_frame) {
  FusedTrackingFeature F;
  for (const auto& o : observations) update_on_match(F, o.embedding, o.occlusion, o.orientation, o.frame, cfg);
  expire_invalid(F, current_frame);
  return F;
}

struct Tracklet {
  std::int64_t id = 0;
  int camera_id = 0;
  TrackingPhase phase = TrackingPhase::Tentative;
  int miss_count = 0;
  bool ever_confirmed = false;
  std::vector<TrackObservation> observations;
  FusedTrackingFeature fused;

  std::int64_t start_frame() const { return observations.front().frame; }
  std::int64_t end_frame() const { return observations.back().frame; }
  const BBox& first_bbox() const { return observations.front().bbox; }
  const BBox& last_bbox() const { return observations.back().bbox; }
  std::size_t length() const { return observations.size(); }

  PhaseState phase_state() const { return {phase, miss_count}; }
  void set_phase_state(PhaseState s) {
    phase = s.phase;
    miss_count = s.miss_count;
    if (phase == TrackingPhase::Confirmed) ever_confirmed = true;
  }
};

inline TrackingPhase phase_on_match(Tracklet& t, OcclusionStatus det_status, const TrackerConfig& cfg = {}) {
  const PhaseEvent e = det_status == OcclusionStatus::Valid ? PhaseEvent::MatchValid : PhaseEvent::MatchInvalid;
  t.set_phase_state(phase_transition(t.phase_state(), e, cfg));
  return t.phase;
}

inline TrackingPhase phase_on_miss(Tracklet& t, const TrackerConfig& cfg) {
  if (t.phase == TrackingPhase::Disappeared) throw ContractViolation("miss on a Disappeared tracklet");
  t.set_phase_state(phase_transition(t.phase_state(), PhaseEvent::Miss, cfg));
  return t.phase;
}

// ---------------------------------------------------------------------------
// Gating and constraints
// ---------------------------------------------------------------------------

/// Position plausibility: box centers may move at most v_max px per frame.
inline bool spatial_gate(const Tracklet& t, const DetectionObservation& det, const TrackerConfig& cfg) {
  const auto gap = static_cast<double>(det.frame - t.end_frame());
  return center_distance(t.last_bbox(), det.bbox) <= cfg.v_max * gap;
}

struct TimeSpan {
  std::int64_t start = 0;
  std::int64_t end = 0;
};

inline bool spans_overlap(TimeSpan a, TimeSpan b) { return !(a.end < b.start || b.end < a.start); }

/// The three physical rules: no co-occurrence, bounded speed, bounded gap.
/// The boxes are only consulted when check_velocity is set.
inline bool physical_constraints_ok(TimeSpan a, const BBox& a_first, const BBox& a_last, TimeSpan b,
                                    const BBox& b_first, const BBox& b_last, const TrackerConfig& cfg,
                                    bool check_velocity = true) {
  if (spans_overlap(a, b)) return false;
  const bool a_first_in_time = a.end < b.start;
  const TimeSpan former = a_first_in_time ? a : b;
  const TimeSpan latter = a_first_in_time ? b : a;
  const std::int64_t gap = latter.start - former.end;
  if (gap > cfg.max_gap) return false;
  if (check_velocity) {
    const BBox& former_last = a_first_in_time ? a_last : b_last;
    const BBox& latter_first = a_first_in_time ? b_first : a_first;
    if (center_distance(former_last, latter_first) > cfg.v_max * static_cast<double>(gap)) return false;
  }
  return true;
}

inline bool physical_constraints_ok(const Tracklet& a, const Tracklet& b, const TrackerConfig& cfg) {
  return physical_constraints_ok({a.start_frame(), a.end_frame()}, a.first_bbox(), a.last_bbox(),
                                 {b.start_frame(), b.end_frame()}, b.first_bbox(), b.last_bbox(), cfg);
}

// ---------------------------------------------------------------------------
// Tracklet-to-detection distance
// ---------------------------------------------------------------------------

/// Appearance distance between a tracklet and a detection: the smallest of the
/// current, same-orientation, and cluster distances, plus the temporal
/// invalid distance when both sides are occluded. Spatially implausible pairs
/// are forbidden.
inline DistanceMatrix compute_distance_matrix(std::span<const Tracklet> tracklets,
                                              std::span<const DetectionObservation> dets,
                                              const TrackerConfig& cfg) {
  DistanceMatrix m(tracklets.size(), dets.size());
  for (std::size_t i = 0; i < tracklets.size(); ++i) {
    const Tracklet& t = tracklets[i];
    const FusedTrackingFeature& F = t.fused;
    for (std::size_t j = 0; j < dets.size(); ++j) {
      const DetectionObservation& det = dets[j];
      if (!spatial_gate(t, det, cfg)) continue;
      double d = dist_current_to_det(F, det.embedding);
      d = std::min(d, dist_orientation_to_det(F.orientation_bank, det));
      d = std::min(d, dist_cluster_to_det(F.cluster_set, det.embedding));
      if (det.occlusion == OcclusionStatus::Invalid) d = std::min(d, dist_invalid_to_det(F, det.embedding));
      m.set(i, j, d);
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Merging
// ---------------------------------------------------------------------------

/// Absorbs `donor` into `keeper`. Observation lists must not share frames.
inline void merge_into(Tracklet& keeper, Tracklet&& donor, const TrackerConfig& cfg, std::int64_t current_frame) {
  const bool donor_is_recent = donor.end_frame() > keeper.end_frame();
  std::vector<TrackObservation> merged;
  merged.reserve(keeper.observations.size() + donor.observations.size());
  std::merge(std::make_move_iterator(keeper.observations.begin()), std::make_move_iterator(keeper.observations.end()),
             std::make_move_iterator(donor.observations.begin()), std::make_move_iterator(donor.observations.end()),
             std::back_inserter(merged),
             [](const TrackObservation& a, const TrackObservation& b) { return a.frame < b.frame; });
  for (std::size_t i = 1; i < merged.size(); ++i) {
    if (merged[i].frame == merged[i - 1].frame) throw ContractViolation("merge would overlap frames");
  }
  keeper.observations = std::move(merged);
  if (donor_is_recent) {
    keeper.phase = donor.phase;
    keeper.miss_count = donor.miss_count;
  }
  keeper.ever_confirmed = keeper.ever_confirmed || donor.ever_confirmed;
  keeper.fused = replay_fused(keeper.observations, cfg, current_frame);
}

// ---------------------------------------------------------------------------
// Per-camera tracker
// ---------------------------------------------------------------------------

struct SctStats {
  std::int64_t frames = 0;
  std::int64_t rectify_merges = 0;
  std::int64_t cluster_passes = 0;
  std::int64_t cluster_merges = 0;
};

/// Single-camera tracker. Feed frames in increasing order with step(); rows
/// are emitted whenever a clustering window closes and by finish().
class CameraTracker {
 public:
  explicit CameraTracker(int camera_id, TrackerConfig cfg = {}, OrientationClassifier classifier = {})
      : camera_id_(camera_id), cfg_(cfg), classifier_(std::move(classifier)) {
    cfg_.validate();
  }

  std::vector<TrackRow> step(std::int64_t frame, std::vector<DetectionObservation> dets) {
    if (started_ && frame <= current_frame_) {
      throw SequencingError("frame " + std::to_string(frame) + " is not after " + std::to_string(current_frame_));
    }
    for (const auto& d : dets) {
      if (d.frame != frame) throw SequencingError("detection frame does not match step frame");
      if (d.camera_id != camera_id_) throw ContractViolation("detection from another camera");
      if (d.embedding.size() != static_cast<std::size_t>(cfg_.feature_dim)) {
        throw DimensionError("embedding has " + std::to_string(d.embedding.size()) + " dims, expected " +
                             std::to_string(cfg_.feature_dim));
      }
    }
    std::vector<TrackRow> rows;
    if (started_) {
      for (std::int64_t f = current_frame_ + 1; f < frame; ++f) append(rows, process_frame(f, {}));
    }
    append(rows, process_frame(frame, std::move(dets)));
    return rows;
  }

  /// Final clustering pass and emission of everything not yet emitted.
  std::vector<TrackRow> finish() {
    if (!started_ || last_emitted_ >= current_frame_) return {};
    cluster_tracklets();
    return emit_window();
  }

  // Rectify step, exposed for tests.
  void rectify() {
    std::vector<std::size_t> invisible, confirmed;
    for (std::size_t i = 0; i < live_.size(); ++i) {
      if (live_[i].phase == TrackingPhase::Invisible) invisible.push_back(i);
      if (live_[i].phase == TrackingPhase::Confirmed && live_[i].length() >= static_cast<std::size_t>(cfg_.l_rectify))
        confirmed.push_back(i);
    }
    if (invisible.empty() || confirmed.empty()) return;

    DistanceMatrix m(invisible.size(), confirmed.size());
    for (std::size_t r = 0; r < invisible.size(); ++r) {
      const Tracklet& a = live_[invisible[r]];
      for (std::size_t c = 0; c < confirmed.size(); ++c) {
        const Tracklet& b = live_[confirmed[c]];
        if (!physical_constraints_ok(a, b, cfg_)) continue;
        m.set(r, c, tracklet_pair_distance(a.fused, b.fused, PairMode::Rectify));
      }
    }
    const auto pairs = greedy_associate(m, cfg_.theta_rectify);
    if (pairs.empty()) return;

    std::vector<char> drop(live_.size(), 0);
    for (auto [r, c] : pairs) {
      Tracklet& keeper = live_[invisible[r]];
      Tracklet& donor = live_[confirmed[c]];
      aliases_[donor.id] = keeper.id;
      merge_into(keeper, std::move(donor), cfg_, current_frame_);
      keeper.set_phase_state({TrackingPhase::Confirmed, keeper.miss_count});
      drop[confirmed[c]] = 1;
      ++stats_.rectify_merges;
    }
    erase_marked(drop);
  }

  /// Greedy merge of live tracklets using the averaged/orientation distance.
  void cluster_tracklets() {
    ++stats_.cluster_passes;
    const std::size_t n = live_.size();
    if (n < 2) return;

    struct Candidate {
      double cost;
      std::size_t a;
      std::size_t b;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!physical_constraints_ok(live_[i], live_[j], cfg_)) continue;
        const double d = tracklet_pair_distance(live_[i].fused, live_[j].fused, PairMode::Cluster);
        if (!is_forbidden(d) && d <= cfg_.theta_cluster) candidates.push_back({d, i, j});
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
      return std::tie(x.cost, x.a, x.b) < std::tie(y.cost, y.a, y.b);
    });

    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
      while (parent[i] != i) i = parent[i] = parent[parent[i]];
      return i;
    };
    std::vector<char> drop(n, 0);
    for (const auto& cand : candidates) {
      std::size_t ra = find(cand.a);
      std::size_t rb = find(cand.b);
      if (ra == rb) continue;
      if (!physical_constraints_ok(live_[ra], live_[rb], cfg_)) continue;
      // The earlier tracklet keeps its id.
      if (std::tie(live_[rb].observations.front().frame, live_[rb].id) <
          std::tie(live_[ra].observations.front().frame, live_[ra].id)) {
        std::swap(ra, rb);
      }
      aliases_[live_[rb].id] = live_[ra].id;
      merge_into(live_[ra], std::move(live_[rb]), cfg_, current_frame_);
      parent[rb] = ra;
      drop[rb] = 1;
      ++stats_.cluster_merges;
    }
    erase_marked(drop);
  }

  Tracklet init_tracklet(const DetectionObservation& det) {
    Tracklet t;
    t.id = next_id_++;
    t.camera_id = camera_id_;
    t.set_phase_state(
        {det.occlusion == OcclusionStatus::Valid ? TrackingPhase::Confirmed : TrackingPhase::Tentative, 0});
    t.observations.push_back(TrackObservation::from(det));
    update_on_match(t.fused, det, cfg_);
    return t;
  }

  std::int64_t resolve_id(std::int64_t id) const {
    for (auto it = aliases_.find(id); it != aliases_.end(); it = aliases_.find(id)) id = it->second;
    return id;
  }

  int camera_id() const { return camera_id_; }
  const TrackerConfig& config() const { return cfg_; }
  std::int64_t current_frame() const { return current_frame_; }
  const std::vector<Tracklet>& live() const { return live_; }
  std::vector<Tracklet>& live_mutable() { return live_; }
  const std::vector<Tracklet>& finished() const { return finished_; }
  const std::map<std::int64_t, std::int64_t>& aliases() const { return aliases_; }
  const SctStats& stats() const { return stats_; }

  /// Number of frames processed before a clustering window closes.
  void set_k_interval(std::int64_t k) {
    if (k <= 0) throw ConfigError("k_interval must be positive");
    cfg_.k_interval = k;
  }

 private:
  static void append(std::vector<TrackRow>& dst, std::vector<TrackRow>&& src) {
    dst.insert(dst.end(), std::make_move_iterator(src.begin()), std::make_move_iterator(src.end()));
  }

  void erase_marked(const std::vector<char>& drop) {
    std::vector<Tracklet> kept;
    kept.reserve(live_.size());
    for (std::size_t i = 0; i < live_.size(); ++i) {
      if (!drop[i]) kept.push_back(std::move(live_[i]));
    }
    live_ = std::move(kept);
  }

  std::vector<TrackRow> process_frame(std::int64_t frame, std::vector<DetectionObservation> dets) {
    if (!started_) first_frame_ = frame;
    started_ = true;
    current_frame_ = frame;
    ++stats_.frames;

    for (auto& t : live_) expire_invalid(t.fused, frame);
    for (auto& d : dets) estimate_state(d, cfg_, classifier_);

    const DistanceMatrix m = compute_distance_matrix(live_, dets, cfg_);
    const AssignmentResult res = hungarian(m);

    for (auto [r, c] : res.matched_pairs) {
      Tracklet& t = live_[r];
      const DetectionObservation& d = dets[c];
      t.observations.push_back(TrackObservation::from(d));
      update_on_match(t.fused, d, cfg_);
      expire_invalid(t.fused, frame);
      phase_on_match(t, d.occlusion, cfg_);
    }
    for (std::size_t r : res.unmatched_rows) phase_on_miss(live_[r], cfg_);
    for (std::size_t c : res.unmatched_cols) live_.push_back(init_tracklet(dets[c]));

    retire_disappeared();
    rectify();

    if ((frame - first_frame_ + 1) % cfg_.k_interval == 0) {
      cluster_tracklets();
      return emit_window();
    }
    return {};
  }

  void retire_disappeared() {
    std::vector<char> drop(live_.size(), 0);
    for (std::size_t i = 0; i < live_.size(); ++i) {
      if (live_[i].phase == TrackingPhase::Disappeared) {
        drop[i] = 1;
        finished_.push_back(std::move(live_[i]));
      }
    }
    erase_marked(drop);
  }

  // Rows for observations in (last_emitted_, current_frame_] of every
  // tracklet that ever reached Confirmed.
  std::vector<TrackRow> emit_window() {
    std::vector<TrackRow> rows;
    auto collect = [&](const Tracklet& t) {
      if (!t.ever_confirmed) return;
      for (const auto& o : t.observations) {
        if (o.frame > last_emitted_ && o.frame <= current_frame_) rows.push_back({camera_id_, o.frame, t.id, o.bbox});
      }
    };
    for (const auto& t : finished_) collect(t);
    for (const auto& t : live_) collect(t);
    std::sort(rows.begin(), rows.end(), track_row_less);
    last_emitted_ = current_frame_;
    return rows;
  }

  int camera_id_;
  TrackerConfig cfg_;
  OrientationClassifier classifier_;
  std::vector<Tracklet> live_;
  std::vector<Tracklet> finished_;
  std::map<std::int64_t, std::int64_t> aliases_;
  std::int64_t next_id_ = 1;
  std::int64_t first_frame_ = 0;
  std::int64_t current_frame_ = 0;
  std::int64_t last_emitted_ = std::numeric_limits<std::int64_t>::min();
  bool started_ = false;
  SctStats stats_;
};

/// Runs a whole camera sequence. Frames [first, last] are stepped even when
/// they carry no detections.
inline std::vector<TrackRow> run_camera(int camera_id, std::vector<DetectionObservation> dets, std::int64_t first,
                                        std::int64_t last, const TrackerConfig& cfg,
                                        const OrientationClassifier& classifier = {}, bool offline = false) {
  CameraTracker tracker(camera_id, cfg, classifier);
  if (offline) tracker.set_k_interval(std::max<std::int64_t>(1, last - first + 1));
  std::stable_sort(dets.begin(), dets.end(),
                   [](const DetectionObservation& a, const DetectionObservation& b) { return a.frame < b.frame; });
  std::vector<TrackRow> rows;
  auto it = dets.begin();
  for (std::int64_t f = first; f <= last; ++f) {
    std::vector<DetectionObservation> frame_dets;
    while (it != dets.end() && it->frame == f) frame_dets.push_back(std::move(*it++));
    auto emitted = tracker.step(f, std::move(frame_dets));
    rows.insert(rows.end(), emitted.begin(), emitted.end());
  }
  auto tail = tracker.finish();
  rows.insert(rows.end(), tail.begin(), tail.end());
  std::sort(rows.begin(), rows.end(), track_row_less);
  return rows;
}

}  // namespace samtrack
