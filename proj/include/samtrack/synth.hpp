// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "samtrack/core.hpp"

namespace samtrack::synth {

/// Axis-aligned world rectangle seen by one camera, mapped onto an image.
struct CameraView {
  int camera_id = 1;
  double x0 = 0.0, y0 = 0.0, x1 = 10.0, y1 = 6.0;  // meters
  int width = 1280;
  int height = 720;
};

enum class WalkPattern : std::uint8_t {
  RandomWalk,  // free walk, reflecting at the world border
  Lanes,       // each agent confined to its own horizontal lane
  Traverse,    // lanes, always heading towards +x
};

/// Agent with a fixed start and constant velocity; replaces the random agents
/// when any are given.
struct ScriptedAgent {
  double x = 0.0, y = 0.0;    // meters
  double vx = 0.0, vy = 0.0;  // meters per second
};

struct ScenarioSpec {
  int num_identities = 5;
  std::int64_t frames = 600;
  double frame_rate = 30.0;
  double world_w = 10.0;
  double world_h = 6.0;
  std::vector<CameraView> cameras{CameraView{}};

  // Walk model.
  WalkPattern pattern = WalkPattern::RandomWalk;
  double speed_min = 0.8;  // m/s
  double speed_max = 1.4;
  double turn_rate = 0.8;      // heading noise, rad/s
  double start_x_max = -1.0;   // Traverse: starts drawn in [0.3, start_x_max]; < 0 means whole world
  std::vector<ScriptedAgent> scripted;

  // Occlusion model: an agent within occlusion_radius of a nearer agent is
  // occluded. All but `occluded_visible_max` keypoints drop to confidence
  // U(0, occluded_conf_max).
  double occlusion_radius = 0.6;  // m
  double occluded_conf_max = 0.25;
  int occluded_visible_max = 5;
  double occluded_miss_rate = 0.0;  // extra miss probability while occluded

  // Embedding model. Norms, not per-component sigmas: noise vectors are
  // drawn with per-component sigma = value / sqrt(dim).
  int feature_dim = 128;
  double base_scale = 50.0;         // identity base vectors lie on this sphere
  double identity_spread = 1.0;     // 1: mutually near-orthogonal bases; smaller: look-alike identities
  double orientation_scale = 10.0;  // per-orientation offset, mutually orthogonal
  double valid_noise = 3.0;
  double invalid_corruption = 12.0;  // persistent per occlusion event
  double occluder_mix = 0.35;        // pull of an occluded embedding towards the occluder

  // Detector model.
  double miss_rate = 0.0;
  double fp_rate = 0.0;  // false positives per camera per frame
  double bbox_jitter = 1.0;  // px

  std::uint64_t seed = 1;

  void validate() const {
    auto rate = [](double v, const char* n) {
      if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(n) + " must be in [0,1]");
    };
    auto nonneg = [](double v, const char* n) {
      if (!(v >= 0.0)) throw std::invalid_argument(std::string(n) + " must be >= 0");
    };
    rate(miss_rate, "miss_rate");
    rate(fp_rate, "fp_rate");
    rate(occluded_miss_rate, "occluded_miss_rate");
    rate(identity_spread, "identity_spread");
    rate(occluder_mix, "occluder_mix");
    rate(occluded_conf_max, "occluded_conf_max");
    nonneg(valid_noise, "valid_noise");
    nonneg(invalid_corruption, "invalid_corruption");
    nonneg(bbox_jitter, "bbox_jitter");
    nonneg(orientation_scale, "orientation_scale");
    nonneg(base_scale, "base_scale");
    if (frame_rate <= 0.0) throw std::invalid_argument("frame_rate must be positive");
    if (speed_min < 0.0 || speed_max < speed_min) throw std::invalid_argument("bad speed range");
    if (feature_dim <= 4) throw std::invalid_argument("feature_dim must exceed 4");
    if (cameras.empty()) throw std::invalid_argument("at least one camera");
  }
};

/// Generator-side labels for one emitted detection.
struct DetectionTruth {
  std::int64_t identity = 0;  // 0 for false positives
  Orientation orientation = Orientation::Front;
  OcclusionStatus occlusion = OcclusionStatus::Valid;
};

struct Scenario {
  std::vector<TrackRow> gt;
  std::vector<DetectionObservation> dets;
  std::vector<DetectionTruth> truth;  // parallel to dets
};

// ---------------------------------------------------------------------------
// Pose synthesis
// ---------------------------------------------------------------------------

namespace detail {

// Canonical frontal skeleton in box-normalized coordinates. The person's left
// side is on the image right.
inline constexpr std::array<std::array<double, 2>, 17> kFrontSkeleton = {{
    {0.50, 0.08}, {0.54, 0.06}, {0.46, 0.06}, {0.58, 0.08}, {0.42, 0.08}, {0.68, 0.22},
    {0.32, 0.22}, {0.72, 0.38}, {0.28, 0.38}, {0.72, 0.52}, {0.28, 0.52}, {0.62, 0.55},
    {0.38, 0.55}, {0.62, 0.75}, {0.38, 0.75}, {0.62, 0.95}, {0.38, 0.95},
}};

inline bool is_right_side(std::size_t i) { return i != 0 && i % 2 == 0; }
inline bool is_left_side(std::size_t i) { return i % 2 == 1; }

}  // namespace detail

/// Keypoints for a person of the given facing inside `box`. Occluded poses keep
/// at most `visible_max` confident keypoints.
template <class Rng>
PoseKeypoints synthesize_pose(const BBox& box, Orientation o, bool occluded, const ScenarioSpec& spec, Rng& rng) {
  std::uniform_real_distribution<double> vis(0.6, 0.95);
  std::uniform_real_distribution<double> hid(0.0, 0.2);
  std::uniform_real_distribution<double> drop(0.0, spec.occluded_conf_max);
  std::normal_distribution<double> jitter(0.0, 1.0);

  PoseKeypoints pose;
  for (std::size_t i = 0; i < PoseKeypoints::kCount; ++i) {
    double u = detail::kFrontSkeleton[i][0];
    const double v = detail::kFrontSkeleton[i][1];
    bool visible = true;
    switch (o) {
      case Orientation::Front:
        break;
      case Orientation::Back:
        u = 1.0 - u;
        if (i <= 2) visible = false;  // face
        break;
      case Orientation::Left:
        u = 0.5 + 0.25 * (u - 0.5);
        visible = !detail::is_right_side(i);
        break;
      case Orientation::Right:
        u = 0.5 + 0.25 * (u - 0.5);
        visible = !detail::is_left_side(i);
        break;
    }
    Keypoint& kp = pose[i];
    kp.x = box.x + u * box.w + jitter(rng);
    kp.y = box.y + v * box.h + jitter(rng);
    kp.confidence = visible ? vis(rng) : hid(rng);
  }
  if (occluded) {
    // Upper-body keypoints survive longest; keep a prefix of them.
    std::uniform_int_distribution<int> keep(0, std::max(0, spec.occluded_visible_max));
    const int k = keep(rng);
    int kept = 0;
    for (std::size_t i = 0; i < PoseKeypoints::kCount; ++i) {
      if (pose[i].confidence > 0.5 && kept < k) {
        ++kept;
        continue;
      }
      pose[i].confidence = std::min(pose[i].confidence, drop(rng));
    }
  }
  return pose;
}

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

namespace detail {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline void scale_to(Vec& v, double norm) {
  const double n = std::sqrt(dot(v, v));
  for (double& x : v) x *= norm / n;
}

template <class Rng>
Vec gaussian(std::size_t dim, double sigma, Rng& rng) {
  std::normal_distribution<double> n(0.0, sigma);
  Vec v(dim);
  for (double& x : v) x = n(rng);
  return v;
}

// Removes the components of v along the (orthonormal) basis.
inline void orthogonalize(Vec& v, const std::vector<Vec>& basis) {
  for (const Vec& b : basis) {
    const double p = dot(v, b);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= p * b[i];
  }
}

}  // namespace detail

/// Identity base vectors and shared orientation offsets.
struct EmbeddingModel {
  std::vector<detail::Vec> bases;                          // per identity
  std::array<detail::Vec, kOrientationCount> orientation;  // shared offsets

  template <class Rng>
  static EmbeddingModel make(const ScenarioSpec& spec, Rng& rng) {
    const auto dim = static_cast<std::size_t>(spec.feature_dim);
    EmbeddingModel m;
    std::vector<detail::Vec> basis;

    // Orthonormal orientation directions, drawn first.
    for (std::size_t o = 0; o < kOrientationCount; ++o) {
      detail::Vec v = detail::gaussian(dim, 1.0, rng);
      detail::orthogonalize(v, basis);
      detail::scale_to(v, 1.0);
      basis.push_back(v);
      m.orientation[o] = v;
      for (double& x : m.orientation[o]) x *= spec.orientation_scale;
    }
    detail::Vec anchor = detail::gaussian(dim, 1.0, rng);
    detail::orthogonalize(anchor, basis);
    detail::scale_to(anchor, 1.0);
    basis.push_back(anchor);

    const double s = spec.identity_spread;
    const double c = std::sqrt(std::max(0.0, 1.0 - s * s));
    for (int i = 0; i < spec.num_identities; ++i) {
      detail::Vec g = detail::gaussian(dim, 1.0, rng);
      detail::orthogonalize(g, basis);
      detail::scale_to(g, 1.0);
      detail::Vec b(dim);
      for (std::size_t k = 0; k < dim; ++k) b[k] = c * anchor[k] + s * g[k];
      detail::scale_to(b, spec.base_scale);
      m.bases.push_back(std::move(b));
    }
    return m;
  }

  detail::Vec clean(std::size_t identity_index, Orientation o) const {
    detail::Vec v = bases[identity_index];
    const auto& off = orientation[static_cast<std::size_t>(o)];
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += off[k];
    return v;
  }
};

// ---------------------------------------------------------------------------
// Scenario generation
// ---------------------------------------------------------------------------

namespace detail {

struct Agent {
  double x = 0.0, y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
  double lane_lo = 0.0, lane_hi = 0.0;
  Orientation orientation = Orientation::Front;
  bool occluded_prev = false;
  Vec corruption;
};

// Image y grows with world y, so +y walks towards the camera.
inline Orientation heading_to_orientation(double vx, double vy) {
  if (std::abs(vx) >= std::abs(vy)) return vx >= 0.0 ? Orientation::Right : Orientation::Left;
  return vy >= 0.0 ? Orientation::Front : Orientation::Back;
}

inline bool in_view(const CameraView& cam, double x, double y) {
  return x >= cam.x0 && x <= cam.x1 && y >= cam.y0 && y <= cam.y1;
}

// Foot point maps into the lower 80% of the image; nearer people are taller.
inline BBox project(const CameraView& cam, double x, double y) {
  const double fx = (x - cam.x0) / (cam.x1 - cam.x0);
  const double fy = (y - cam.y0) / (cam.y1 - cam.y0);
  const double u = fx * cam.width;
  const double v = cam.height * (0.2 + 0.8 * fy);
  const double h = cam.height * (0.25 + 0.25 * fy);
  const double w = 0.4 * h;
  return {u - 0.5 * w, v - h, w, h};
}

}  // namespace detail

/// Deterministic scenario from a spec. GT rows are emitted for every visible
/// agent; detections may be missed, jittered, corrupted by occlusion, or
/// spurious.
inline Scenario generate_scenario(const ScenarioSpec& spec) {
  spec.validate();
  Scenario out;
  const int n = spec.scripted.empty() ? spec.num_identities : static_cast<int>(spec.scripted.size());
  if (n <= 0 || spec.frames <= 0) return out;

  std::mt19937_64 rng(spec.seed);
  ScenarioSpec eff = spec;
  eff.num_identities = n;
  const EmbeddingModel model = EmbeddingModel::make(eff, rng);
  const auto dim = static_cast<std::size_t>(spec.feature_dim);
  const double dt = 1.0 / spec.frame_rate;
  const double noise_sigma = spec.valid_noise / std::sqrt(static_cast<double>(dim));

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> stdn(0.0, 1.0);

  std::vector<detail::Agent> agents(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    detail::Agent& a = agents[static_cast<std::size_t>(i)];
    if (!spec.scripted.empty()) {
      const ScriptedAgent& s = spec.scripted[static_cast<std::size_t>(i)];
      a.x = s.x;
      a.y = s.y;
      a.speed = std::hypot(s.vx, s.vy);
      a.heading = std::atan2(s.vy, s.vx);
      a.lane_lo = 0.0;
      a.lane_hi = spec.world_h;
      continue;
    }
    if (spec.pattern == WalkPattern::RandomWalk) {
      a.lane_lo = 0.0;
      a.lane_hi = spec.world_h;
    } else {
      const double lane = spec.world_h / n;
      a.lane_lo = lane * i + 0.1 * lane;
      a.lane_hi = lane * (i + 1) - 0.1 * lane;
    }
    const double x_hi = (spec.pattern == WalkPattern::Traverse && spec.start_x_max > 0.0) ? spec.start_x_max
                                                                                             : spec.world_w - 0.3;
    a.x = 0.3 + unit(rng) * (x_hi - 0.3);
    a.y = a.lane_lo + unit(rng) * (a.lane_hi - a.lane_lo);
    a.speed = spec.speed_min + unit(rng) * (spec.speed_max - spec.speed_min);
    a.heading = spec.pattern == WalkPattern::Traverse ? 0.0 : unit(rng) * 2.0 * std::numbers::pi;
  }

  for (std::int64_t frame = 0; frame < spec.frames; ++frame) {
    // Move.
    if (frame > 0) {
      for (auto& a : agents) {
        if (spec.scripted.empty()) {
          a.heading += stdn(rng) * spec.turn_rate * std::sqrt(dt);
          if (spec.pattern == WalkPattern::Traverse) a.heading = std::clamp(a.heading, -0.6, 0.6);
        }
        double vx = a.speed * std::cos(a.heading);
        double vy = a.speed * std::sin(a.heading);
        a.x += vx * dt;
        a.y += vy * dt;
        if (spec.scripted.empty()) {
          if (spec.pattern != WalkPattern::Traverse && (a.x < 0.0 || a.x > spec.world_w)) {
            vx = -vx;
            a.x = std::clamp(a.x, 0.0, spec.world_w);
          }
          if (a.y < a.lane_lo || a.y > a.lane_hi) {
            vy = -vy;
            a.y = std::clamp(a.y, a.lane_lo, a.lane_hi);
          }
          a.heading = std::atan2(vy, vx);
        }
      }
    }
    for (auto& a : agents) a.orientation = detail::heading_to_orientation(std::cos(a.heading), std::sin(a.heading));

    for (const CameraView& cam : spec.cameras) {
      std::vector<std::size_t> visible;
      for (std::size_t i = 0; i < agents.size(); ++i) {
        if (detail::in_view(cam, agents[i].x, agents[i].y)) visible.push_back(i);
      }

      for (std::size_t i : visible) {
        detail::Agent& a = agents[i];
        const BBox box = detail::project(cam, a.x, a.y);
        out.gt.push_back({cam.camera_id, frame, static_cast<std::int64_t>(i) + 1, box});

        // Nearest agent that stands closer to the camera within the radius.
        std::ptrdiff_t occluder = -1;
        double best = spec.occlusion_radius;
        for (std::size_t j : visible) {
          if (j == i || agents[j].y <= a.y) continue;
          const double d = std::hypot(agents[j].x - a.x, agents[j].y - a.y);
          if (d < best) {
            best = d;
            occluder = static_cast<std::ptrdiff_t>(j);
          }
        }
        const bool occluded = occluder >= 0;
        if (occluded && !a.occluded_prev) {
          a.corruption = detail::gaussian(dim, 1.0, rng);
          detail::scale_to(a.corruption, spec.invalid_corruption);
        }
        a.occluded_prev = occluded;

        // The miss draws happen unconditionally to keep the random stream
        // independent of the outcome.
        const bool missed = unit(rng) < spec.miss_rate;
        const bool occl_missed = unit(rng) < spec.occluded_miss_rate;
        if (missed || (occluded && occl_missed)) continue;

        DetectionObservation det;
        det.camera_id = cam.camera_id;
        det.frame = frame;
        det.bbox = {box.x + stdn(rng) * spec.bbox_jitter, box.y + stdn(rng) * spec.bbox_jitter,
                    std::max(1.0, box.w + stdn(rng) * spec.bbox_jitter),
                    std::max(1.0, box.h + stdn(rng) * spec.bbox_jitter)};
        det.det_confidence = 0.7 + 0.3 * unit(rng);
        det.pose = synthesize_pose(det.bbox, a.orientation, occluded, spec, rng);

        detail::Vec emb = model.clean(i, a.orientation);
        if (occluded) {
          const auto& other = agents[static_cast<std::size_t>(occluder)];
          const detail::Vec occ = model.clean(static_cast<std::size_t>(occluder), other.orientation);
          for (std::size_t k = 0; k < dim; ++k) {
            emb[k] += spec.occluder_mix * (occ[k] - emb[k]) + a.corruption[k];
          }
        }
        for (double& x : emb) x += stdn(rng) * noise_sigma;
        det.embedding = ReIDFeature(std::move(emb));

        out.dets.push_back(std::move(det));
        out.truth.push_back({static_cast<std::int64_t>(i) + 1, a.orientation,
                             occluded ? OcclusionStatus::Invalid : OcclusionStatus::Valid});
      }

      if (unit(rng) < spec.fp_rate) {
        DetectionObservation det;
        det.camera_id = cam.camera_id;
        det.frame = frame;
        const double h = cam.height * (0.15 + 0.3 * unit(rng));
        const double w = 0.4 * h;
        det.bbox = {unit(rng) * (cam.width - w), unit(rng) * (cam.height - h), w, h};
        det.det_confidence = 0.5 + 0.2 * unit(rng);
        ScenarioSpec fp_pose = spec;
        fp_pose.occluded_visible_max = 2;
        det.pose = synthesize_pose(det.bbox, Orientation::Front, true, fp_pose, rng);
        detail::Vec emb = detail::gaussian(dim, 1.0, rng);
        detail::scale_to(emb, spec.base_scale);
        det.embedding = ReIDFeature(std::move(emb));
        out.dets.push_back(std::move(det));
        out.truth.push_back({0, Orientation::Front, OcclusionStatus::Invalid});
      }
    }
  }
  std::sort(out.gt.begin(), out.gt.end(), track_row_less);
  return out;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

/// Five people in separate lanes of one camera; no crossings.
inline ScenarioSpec preset_easy_single_cam() {
  ScenarioSpec s;
  s.num_identities = 5;
  s.frames = 600;
  s.world_w = 10.0;
  s.world_h = 6.0;
  s.cameras = {CameraView{1, 0.0, 0.0, 10.0, 6.0, 1280, 720}};
  s.pattern = WalkPattern::Lanes;
  s.turn_rate = 0.6;
  s.occlusion_radius = 0.2;  // narrower than the gap between lanes
  s.miss_rate = 0.02;
  s.fp_rate = 0.0;
  return s;
}

/// Ten look-alike people milling about a small floor, turning often and
/// crossing repeatedly. Occlusions corrupt embeddings heavily.
inline ScenarioSpec preset_occlusion_heavy() {
  ScenarioSpec s;
  s.num_identities = 10;
  s.frames = 900;
  s.world_w = 6.0;
  s.world_h = 5.0;
  s.cameras = {CameraView{1, 0.0, 0.0, 8.0, 6.0, 1280, 720}};  // view wider than the floor
  s.pattern = WalkPattern::RandomWalk;
  s.turn_rate = 3.0;
  s.occlusion_radius = 0.9;
  s.identity_spread = 0.15;
  s.orientation_scale = 16.0;
  s.invalid_corruption = 30.0;
  s.miss_rate = 0.03;
  s.occluded_miss_rate = 0.1;
  s.fp_rate = 0.02;
  return s;
}

/// People walk through camera 1, cross an unobserved gap, then enter camera 2.
inline ScenarioSpec preset_two_camera_handoff() {
  ScenarioSpec s;
  s.num_identities = 6;
  s.frames = 450;
  s.world_w = 26.0;
  s.world_h = 6.0;
  s.cameras = {CameraView{1, 0.0, 0.0, 10.0, 6.0, 1280, 720}, CameraView{2, 14.0, 0.0, 26.0, 6.0, 1280, 720}};
  s.pattern = WalkPattern::Traverse;
  s.start_x_max = 3.5;
  s.speed_min = 1.0;
  s.speed_max = 1.4;
  s.turn_rate = 0.3;
  s.miss_rate = 0.02;
  return s;
}

inline std::map<std::string, ScenarioSpec> scenario_presets() {
  return {{"easy_single_cam", preset_easy_single_cam()},
          {"occlusion_heavy", preset_occlusion_heavy()},
          {"two_camera_handoff", preset_two_camera_handoff()}};
}

inline ScenarioSpec preset(const std::string& name) {
  auto all = scenario_presets();
  auto it = all.find(name);
  if (it == all.end()) throw std::invalid_argument("unknown preset: " + name);
  return it->second;
}

}  // namespace samtrack::synth
