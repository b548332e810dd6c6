// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "samtrack/core.hpp"

namespace samtrack {

/// Number of keypoints whose confidence is strictly above gamma_valid.
inline int count_valid_keypoints(const PoseKeypoints& pose, double gamma_valid) {
  int n = 0;
  for (const auto& kp : pose.points) {
    if (kp.confidence > gamma_valid) ++n;
  }
  return n;
}

inline OcclusionStatus estimate_occlusion(const PoseKeypoints& pose, const TrackerConfig& cfg) {
  return count_valid_keypoints(pose, cfg.gamma_valid) > cfg.theta_valid ? OcclusionStatus::Valid
                                                                        : OcclusionStatus::Invalid;
}

// ---------------------------------------------------------------------------
// Orientation network input
// ---------------------------------------------------------------------------

inline constexpr std::size_t kOrientationInputDim = 14;
using OrientationInput = std::array<double, kOrientationInputDim>;

/// [x, y, c] for left/right shoulder and left/right hip (positions normalized
/// to the box), followed by the two ear confidences.
inline OrientationInput build_orientation_input(const PoseKeypoints& pose, const BBox& bbox) {
  if (!bbox.valid()) throw GeometryError("build_orientation_input: bbox has zero extent");
  OrientationInput in{};
  std::size_t k = 0;
  for (std::size_t idx : {PoseKeypoints::kLeftShoulder, PoseKeypoints::kRightShoulder,
                          PoseKeypoints::kLeftHip, PoseKeypoints::kRightHip}) {
    const Keypoint& p = pose[idx];
    in[k++] = (p.x - bbox.x) / bbox.w;
    in[k++] = (p.y - bbox.y) / bbox.h;
    in[k++] = p.confidence;
  }
  in[k++] = pose[PoseKeypoints::kLeftEar].confidence;
  in[k++] = pose[PoseKeypoints::kRightEar].confidence;
  return in;
}

// ---------------------------------------------------------------------------
// Orientation MLP (14 -> 128 -> 64 -> 128 -> 64 -> 4)
// ---------------------------------------------------------------------------

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out

  DenseLayer() = default;
  DenseLayer(std::size_t in_dim, std::size_t out_dim)
      : in(in_dim), out(out_dim), weights(in_dim * out_dim, 0.0), bias(out_dim, 0.0) {}

  double& w(std::size_t row, std::size_t col) { return weights[row * in + col]; }
  double w(std::size_t row, std::size_t col) const { return weights[row * in + col]; }
};

struct MlpWeights {
  static constexpr std::array<std::size_t, 6> kShape = {14, 128, 64, 128, 64, 4};
  static constexpr std::size_t kLayers = kShape.size() - 1;

  std::array<DenseLayer, kLayers> layers;

  static MlpWeights zeros() {
    MlpWeights m;
    for (std::size_t l = 0; l < kLayers; ++l) m.layers[l] = DenseLayer(kShape[l], kShape[l + 1]);
    return m;
  }

  void validate() const {
    for (std::size_t l = 0; l < kLayers; ++l) {
      const DenseLayer& layer = layers[l];
      if (layer.in != kShape[l] || layer.out != kShape[l + 1] ||
          layer.weights.size() != layer.in * layer.out || layer.bias.size() != layer.out) {
        throw DimensionError("MlpWeights: layer " + std::to_string(l + 1) + " has wrong shape");
      }
      for (double v : layer.weights)
        if (!std::isfinite(v)) throw DimensionError("MlpWeights: non-finite weight");
      for (double v : layer.bias)
        if (!std::isfinite(v)) throw DimensionError("MlpWeights: non-finite bias");
    }
  }
};

/// Raw logits in [Front, Back, Left, Right] order. ReLU after layers 1-4.
inline std::array<double, kOrientationCount> orientation_logits(std::span<const double> input,
                                                                const MlpWeights& weights) {
  if (input.size() != kOrientationInputDim) {
    throw DimensionError("orientation MLP expects 14 inputs, got " + std::to_string(input.size()));
  }
  weights.validate();
  std::vector<double> act(input.begin(), input.end());
  std::vector<double> next;
  for (std::size_t l = 0; l < MlpWeights::kLayers; ++l) {
    const DenseLayer& layer = weights.layers[l];
    next.assign(layer.out, 0.0);
    for (std::size_t r = 0; r < layer.out; ++r) {
      double acc = layer.bias[r];
      const double* row = layer.weights.data() + r * layer.in;
      for (std::size_t c = 0; c < layer.in; ++c) acc += row[c] * act[c];
      next[r] = (l + 1 < MlpWeights::kLayers) ? std::max(0.0, acc) : acc;
    }
    act.swap(next);
  }
  return {act[0], act[1], act[2], act[3]};
}

/// Argmax over logits; ties go to the lowest index.
inline Orientation argmax_orientation(const std::array<double, kOrientationCount>& logits) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return static_cast<Orientation>(best);
}

inline Orientation classify_orientation_mlp(std::span<const double> input, const MlpWeights& weights) {
  return argmax_orientation(orientation_logits(input, weights));
}

// ---------------------------------------------------------------------------
// Geometric fallback classifier
// ---------------------------------------------------------------------------

/// Rule-based facing estimate. Left shoulder (or hip) to the right of its
/// partner in the image means the person faces the camera.
inline Orientation classify_orientation_geometric(const PoseKeypoints& pose, double gamma_valid) {
  auto visible = [&](std::size_t i) { return pose[i].confidence > gamma_valid; };

  auto by_pair = [&](std::size_t left, std::size_t right, Orientation& out) {
    if (!visible(left) || !visible(right)) return false;
    if (pose[left].x > pose[right].x) {
      out = Orientation::Front;
      return true;
    }
    if (pose[left].x < pose[right].x) {
      out = Orientation::Back;
      return true;
    }
    return false;
  };

  Orientation o = Orientation::Front;
  if (by_pair(PoseKeypoints::kLeftShoulder, PoseKeypoints::kRightShoulder, o)) return o;
  if (by_pair(PoseKeypoints::kLeftHip, PoseKeypoints::kRightHip, o)) return o;
  const bool le = visible(PoseKeypoints::kLeftEar);
  const bool re = visible(PoseKeypoints::kRightEar);
  if (le && !re) return Orientation::Left;
  if (re && !le) return Orientation::Right;
  return Orientation::Front;
}

/// Selects which orientation path to run. Holds the weights when in MLP mode.
class OrientationClassifier {
 public:
  OrientationClassifier() = default;
  explicit OrientationClassifier(MlpWeights weights)
      : weights_(std::make_shared<const MlpWeights>(std::move(weights))) {
    weights_->validate();
  }

  OrientationMode mode() const { return weights_ ? OrientationMode::Mlp : OrientationMode::Geometric; }

  Orientation classify(const PoseKeypoints& pose, const BBox& bbox, double gamma_valid) const {
    if (!weights_) return classify_orientation_geometric(pose, gamma_valid);
    const OrientationInput in = build_orientation_input(pose, bbox);
    return classify_orientation_mlp(in, *weights_);
  }

 private:
  std::shared_ptr<const MlpWeights> weights_;
};

/// Step 2 of the per-frame pipeline: derive occlusion status and orientation.
inline void estimate_state(DetectionObservation& det, const TrackerConfig& cfg,
                           const OrientationClassifier& classifier) {
  det.occlusion = estimate_occlusion(det.pose, cfg);
  det.orientation = classifier.classify(det.pose, det.bbox, cfg.gamma_valid);
}

// ---------------------------------------------------------------------------
// Weight file
//
//   mlp 14 128 64 128 64 4
//   layer <in> <out>
//   <out> rows of <in> weights
//   one row of <out> biases
//   ... repeated per layer
// ---------------------------------------------------------------------------

namespace detail {

inline void write_double(std::ostream& os, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  os.write(buf, res.ptr - buf);
}

inline std::vector<double> parse_number_line(const std::string& line, std::size_t line_no) {
  std::vector<double> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) {
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": not a number: '" + tok + "'");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace detail

inline void write_mlp_weights(std::ostream& os, const MlpWeights& weights) {
  weights.validate();
  os << "mlp";
  for (std::size_t d : MlpWeights::kShape) os << ' ' << d;
  os << '\n';
  for (const DenseLayer& layer : weights.layers) {
    os << "layer " << layer.in << ' ' << layer.out << '\n';
    for (std::size_t r = 0; r < layer.out; ++r) {
      for (std::size_t c = 0; c < layer.in; ++c) {
        if (c) os << ' ';
        detail::write_double(os, layer.w(r, c));
      }
      os << '\n';
    }
    for (std::size_t r = 0; r < layer.out; ++r) {
      if (r) os << ' ';
      detail::write_double(os, layer.bias[r]);
    }
    os << '\n';
  }
}

inline MlpWeights read_mlp_weights(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> std::string {
    while (std::getline(is, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return line;
    }
    throw ParseError("weight file truncated after line " + std::to_string(line_no));
  };

  {
    std::istringstream header(next_line());
    std::string tag;
    header >> tag;
    if (tag != "mlp") throw ParseError("weight file: expected 'mlp' header");
    for (std::size_t d : MlpWeights::kShape) {
      std::size_t got = 0;
      if (!(header >> got) || got != d) throw DimensionError("weight file: header shape mismatch");
    }
    std::size_t extra = 0;
    if (header >> extra) throw DimensionError("weight file: header shape mismatch");
  }

  MlpWeights weights = MlpWeights::zeros();
  for (std::size_t l = 0; l < MlpWeights::kLayers; ++l) {
    DenseLayer& layer = weights.layers[l];
    std::istringstream lh(next_line());
    std::string tag;
    std::size_t in = 0, out = 0;
    if (!(lh >> tag >> in >> out) || tag != "layer") {
      throw ParseError("line " + std::to_string(line_no) + ": expected 'layer <in> <out>'");
    }
    if (in != layer.in || out != layer.out) {
      throw DimensionError("weight file: layer " + std::to_string(l + 1) + " declared " +
                           std::to_string(in) + "x" + std::to_string(out) + ", expected " +
                           std::to_string(layer.in) + "x" + std::to_string(layer.out));
    }
    for (std::size_t r = 0; r < out; ++r) {
      auto row = detail::parse_number_line(next_line(), line_no);
      if (row.size() != in) {
        throw DimensionError("line " + std::to_string(line_no) + ": expected " + std::to_string(in) +
                             " weights, got " + std::to_string(row.size()));
      }
      std::copy(row.begin(), row.end(), layer.weights.begin() + static_cast<std::ptrdiff_t>(r * in));
    }
    auto bias = detail::parse_number_line(next_line(), line_no);
    if (bias.size() != out) {
      throw DimensionError("line " + std::to_string(line_no) + ": expected " + std::to_string(out) +
                           " biases, got " + std::to_string(bias.size()));
    }
    layer.bias = std::move(bias);
  }
  weights.validate();
  return weights;
}

inline MlpWeights load_mlp_weights(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open weight file: " + path);
  return read_mlp_weights(is);
}

}  // namespace samtrack
