// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "samtrack/core.hpp"

namespace samtrack {

/// One online cluster: running-mean center plus member count.
using FeatureCluster = RunningMean;

/// Online cluster-based feature. At most n_c clusters; members are assigned to
/// the nearest center at insertion time and never reassigned.
struct ClusterSet {
  std::vector<FeatureCluster> clusters;

  std::size_t size() const { return clusters.size(); }
  bool empty() const { return clusters.empty(); }

  friend bool operator==(const ClusterSet&, const ClusterSet&) = default;
};

/// Mean of valid features per orientation class.
struct OrientationBank {
  std::array<std::optional<RunningMean>, kOrientationCount> slots;

  const std::optional<RunningMean>& slot(Orientation o) const { return slots[static_cast<std::size_t>(o)]; }
  std::optional<RunningMean>& slot(Orientation o) { return slots[static_cast<std::size_t>(o)]; }

  friend bool operator==(const OrientationBank&, const OrientationBank&) = default;
};

struct InvalidFeature {
  ReIDFeature feature;
  std::int64_t frame = 0;

  friend bool operator==(const InvalidFeature&, const InvalidFeature&) = default;
};

/// Five-part appearance model of a tracklet.
struct FusedTrackingFeature {
  std::optional<ReIDFeature> current;
  OrientationBank orientation_bank;
  ClusterSet cluster_set;
  std::optional<InvalidFeature> invalid;
  std::optional<RunningMean> avg;

  friend bool operator==(const FusedTrackingFeature&, const FusedTrackingFeature&) = default;
};

// ---------------------------------------------------------------------------
// Updates
// ---------------------------------------------------------------------------

inline void update_cluster(ClusterSet& set, const ReIDFeature& f_d, OcclusionStatus status, int n_c) {
  if (n_c < 1) throw ConfigError("update_cluster: n_c must be >= 1");
  if (status == OcclusionStatus::Invalid) return;
  for (const auto& c : set.clusters) require_same_dim(c.mean, f_d);
  if (set.clusters.size() < static_cast<std::size_t>(n_c)) {
    set.clusters.push_back(RunningMean::of(f_d));
    return;
  }
  std::size_t k = 0;
  double best = kForbidden;
  for (std::size_t i = 0; i < set.clusters.size(); ++i) {
    const double d = euclidean_distance(set.clusters[i].mean, f_d);
    if (d < best) {
      best = d;
      k = i;
    }
  }
  set.clusters[k].add(f_d);
}

/// Folds a matched detection into the fused feature. Valid detections update
/// every long-term part and clear the invalid slot; invalid detections only
/// replace the invalid slot.
inline void update_on_match(FusedTrackingFeature& F, const ReIDFeature& embedding, OcclusionStatus status,
                            Orientation orientation, std::int64_t frame, const TrackerConfig& cfg) {
  if (status == OcclusionStatus::Invalid) {
    if (cfg.use_invalid) F.invalid = InvalidFeature{embedding, frame};
    return;
  }
  F.current = embedding;
  if (cfg.use_orientation) {
    auto& slot = F.orientation_bank.slot(orientation);
    if (slot) {
      slot->add(embedding);
    } else {
      slot = RunningMean::of(embedding);
    }
  }
  if (cfg.use_cluster) update_cluster(F.cluster_set, embedding, status, cfg.n_c);
  if (F.avg) {
    F.avg->add(embedding);
  } else {
    F.avg = RunningMean::of(embedding);
  }
  F.invalid.reset();
}

inline void update_on_match(FusedTrackingFeature& F, const DetectionObservation& det, const TrackerConfig& cfg) {
  update_on_match(F, det.embedding, det.occlusion, det.orientation, det.frame, cfg);
}

/// The invalid slot only survives into the frame right after it was set.
inline void expire_invalid(FusedTrackingFeature& F, std::int64_t current_frame) {
  if (F.invalid && F.invalid->frame < current_frame - 1) F.invalid.reset();
}

// ---------------------------------------------------------------------------
// Distances. Absent parts yield kForbidden.
// ---------------------------------------------------------------------------

inline double dist_current_to_det(const FusedTrackingFeature& F, const ReIDFeature& f_det) {
  return F.current ? euclidean_distance(*F.current, f_det) : kForbidden;
}

inline double dist_orientation_to_det(const OrientationBank& bank, const ReIDFeature& f_det, Orientation o) {
  const auto& slot = bank.slot(o);
  return slot ? euclidean_distance(slot->mean, f_det) : kForbidden;
}

inline double dist_orientation_to_det(const OrientationBank& bank, const DetectionObservation& det) {
  return dist_orientation_to_det(bank, det.embedding, det.orientation);
}

inline double dist_orientation_banks(const OrientationBank& a, const OrientationBank& b) {
  double best = kForbidden;
  for (Orientation o : kAllOrientations) {
    const auto& sa = a.slot(o);
    const auto& sb = b.slot(o);
    if (sa && sb) best = std::min(best, euclidean_distance(sa->mean, sb->mean));
  }
  return best;
}

inline double dist_cluster_sets(const ClusterSet& a, const ClusterSet& b) {
  double best = kForbidden;
  for (const auto& ca : a.clusters) {
    for (const auto& cb : b.clusters) best = std::min(best, euclidean_distance(ca.mean, cb.mean));
  }
  return best;
}

inline double dist_cluster_to_det(const ClusterSet& set, const ReIDFeature& f_det) {
  double best = kForbidden;
  for (const auto& c : set.clusters) best = std::min(best, euclidean_distance(c.mean, f_det));
  return best;
}

inline double dist_invalid_to_det(const FusedTrackingFeature& F, const ReIDFeature& f_det) {
  return F.invalid ? euclidean_distance(F.invalid->feature, f_det) : kForbidden;
}

enum class PairMode : std::uint8_t {
  Rectify,  // cluster centers
  Cluster,  // min(avg, orientation)
};

inline double tracklet_pair_distance(const FusedTrackingFeature& a, const FusedTrackingFeature& b, PairMode mode) {
  if (mode == PairMode::Rectify) return dist_cluster_sets(a.cluster_set, b.cluster_set);
  const double d_avg = (a.avg && b.avg) ? euclidean_distance(a.avg->mean, b.avg->mean) : kForbidden;
  return std::min(d_avg, dist_orientation_banks(a.orientation_bank, b.orientation_bank));
}

}  // namespace samtrack
