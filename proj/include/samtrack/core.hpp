// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace samtrack {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SequencingError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Cost value meaning "this pairing may never be chosen".
inline constexpr double kForbidden = std::numeric_limits<double>::infinity();

inline bool is_forbidden(double cost) { return cost == kForbidden; }

// ---------------------------------------------------------------------------
// Appearance embedding
// ---------------------------------------------------------------------------

/// Re-identification embedding. Components are always finite.
class ReIDFeature {
 public:
  ReIDFeature() = default;

  explicit ReIDFeature(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_) {
      if (!std::isfinite(v)) throw DimensionError("ReIDFeature: non-finite component");
    }
  }

  static ReIDFeature zeros(std::size_t dim) { return ReIDFeature(std::vector<double>(dim, 0.0)); }

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::span<const double> values() const { return values_; }
  const std::vector<double>& vector() const { return values_; }

  double operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const ReIDFeature&, const ReIDFeature&) = default;

 private:
  friend struct RunningMean;
  std::vector<double> values_;
};

inline void require_same_dim(const ReIDFeature& a, const ReIDFeature& b) {
  if (a.size() != b.size()) {
    throw DimensionError("feature dimension mismatch: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
}

inline double euclidean_distance(const ReIDFeature& a, const ReIDFeature& b) {
  require_same_dim(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

/// Incremental arithmetic mean over features, kept as (mean, count).
struct RunningMean {
  ReIDFeature mean;
  std::int64_t count = 0;

  static RunningMean of(const ReIDFeature& first) { return RunningMean{first, 1}; }

  // mean <- (mean * count + f) / (count + 1)
  void add(const ReIDFeature& f) {
    if (count == 0) {
      mean = f;
      count = 1;
      return;
    }
    require_same_dim(mean, f);
    const double n = static_cast<double>(count);
    for (std::size_t i = 0; i < f.size(); ++i) {
      mean.values_[i] = (mean.values_[i] * n + f[i]) / (n + 1.0);
    }
    ++count;
  }

  friend bool operator==(const RunningMean&, const RunningMean&) = default;
};

// ---------------------------------------------------------------------------
// Pose and state
// ---------------------------------------------------------------------------

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double confidence = 0.0;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

/// COCO-17 keypoint layout.
struct PoseKeypoints {
  static constexpr std::size_t kCount = 17;

  enum Index : std::size_t {
    kNose = 0,
    kLeftEye = 1,
    kRightEye = 2,
    kLeftEar = 3,
    kRightEar = 4,
    kLeftShoulder = 5,
    kRightShoulder = 6,
    kLeftElbow = 7,
    kRightElbow = 8,
    kLeftWrist = 9,
    kRightWrist = 10,
    kLeftHip = 11,
    kRightHip = 12,
    kLeftKnee = 13,
    kRightKnee = 14,
    kLeftAnkle = 15,
    kRightAnkle = 16,
  };

  std::array<Keypoint, kCount> points{};

  const Keypoint& operator[](std::size_t i) const { return points[i]; }
  Keypoint& operator[](std::size_t i) { return points[i]; }

  friend bool operator==(const PoseKeypoints&, const PoseKeypoints&) = default;
};

/// Fixed class order; also the output order of the orientation network.
enum class Orientation : std::uint8_t { Front = 0, Back = 1, Left = 2, Right = 3 };
inline constexpr std::size_t kOrientationCount = 4;

inline constexpr std::array<Orientation, kOrientationCount> kAllOrientations = {
    Orientation::Front, Orientation::Back, Orientation::Left, Orientation::Right};

inline const char* to_string(Orientation o) {
  switch (o) {
    case Orientation::Front: return "front";
    case Orientation::Back: return "back";
    case Orientation::Left: return "left";
    case Orientation::Right: return "right";
  }
  return "?";
}

enum class OcclusionStatus : std::uint8_t { Valid, Invalid };

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

struct BBox {
  double x = 0.0;  // left
  double y = 0.0;  // top
  double w = 0.0;
  double h = 0.0;

  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }
  double area() const { return w * h; }
  bool valid() const { return w > 0.0 && h > 0.0; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

inline double center_distance(const BBox& a, const BBox& b) {
  return std::hypot(a.cx() - b.cx(), a.cy() - b.cy());
}

inline double iou(const BBox& a, const BBox& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

// ---------------------------------------------------------------------------
// Detections
// ---------------------------------------------------------------------------

struct DetectionObservation {
  int camera_id = 0;
  std::int64_t frame = 0;
  BBox bbox;
  double det_confidence = 1.0;
  PoseKeypoints pose;
  ReIDFeature embedding;
  // Filled in by state estimation.
  OcclusionStatus occlusion = OcclusionStatus::Invalid;
  Orientation orientation = Orientation::Front;
};

/// One identity-labelled box in one frame of one camera.
struct TrackRow {
  int camera_id = 0;
  std::int64_t frame = 0;
  std::int64_t identity = 0;
  BBox bbox;

  friend bool operator==(const TrackRow&, const TrackRow&) = default;
};

inline bool track_row_less(const TrackRow& a, const TrackRow& b) {
  if (a.camera_id != b.camera_id) return a.camera_id < b.camera_id;
  if (a.frame != b.frame) return a.frame < b.frame;
  return a.identity < b.identity;
}

// ---------------------------------------------------------------------------
// Distance matrix
// ---------------------------------------------------------------------------

/// Dense row-major cost table. Entries are finite and non-negative, or kForbidden.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(std::size_t rows, std::size_t cols, double fill = kForbidden)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  static DistanceMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.front().size();
    DistanceMatrix m(r, c);
    for (std::size_t i = 0; i < r; ++i) {
      if (rows[i].size() != c) throw DimensionError("DistanceMatrix: ragged rows");
      for (std::size_t j = 0; j < c; ++j) m.set(i, j, rows[i][j]);
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  void set(std::size_t r, std::size_t c, double v) {
    if (!(v >= 0.0)) throw std::invalid_argument("DistanceMatrix: entries must be >= 0 or forbidden");
    values_[r * cols_ + c] = v;
  }

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * cols_, cols_);
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class OrientationMode : std::uint8_t { Geometric, Mlp };

struct TrackerConfig {
  double gamma_valid = 0.3;
  int theta_valid = 7;
  int mu_m = 10;
  int mu_d = 300;
  std::int64_t k_interval = 600;
  int n_c = 4;
  int l_rectify = 30;
  double theta_rectify = 20.0;
  double theta_cluster = 30.0;
  double theta_mct = 40.0;
  double v_max = 20.0;
  std::int64_t max_gap = 1800;
  int feature_dim = 128;

  // Sub-feature switches of the fused tracking feature (ablation knobs).
  bool use_orientation = true;
  bool use_cluster = true;
  bool use_invalid = true;

  // Apply the image-plane velocity rule between cameras in MCT.
  bool mct_velocity_gate = false;

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
    };
    positive(gamma_valid, "gamma_valid");
    positive(theta_valid, "theta_valid");
    positive(mu_m, "mu_m");
    positive(mu_d, "mu_d");
    positive(static_cast<double>(k_interval), "k_interval");
    positive(n_c, "n_c");
    positive(l_rectify, "l_rectify");
    positive(theta_rectify, "theta_rectify");
    positive(theta_cluster, "theta_cluster");
    positive(theta_mct, "theta_mct");
    positive(v_max, "v_max");
    positive(static_cast<double>(max_gap), "max_gap");
    positive(feature_dim, "feature_dim");
    if (theta_valid >= static_cast<int>(PoseKeypoints::kCount)) {
      throw ConfigError("theta_valid must be < 17");
    }
  }
};

}  // namespace samtrack
