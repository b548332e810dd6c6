// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "samtrack/core.hpp"
#include "samtrack/synth.hpp"

namespace samtrack::io {

namespace fs = std::filesystem;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes `content` to a sibling temp file and renames it over `path`, so a
/// failed run never leaves a partial file behind.
inline void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + tmp.string());
    os << content;
    os.flush();
    if (!os) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

inline std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Detections: one JSON object per line
//   {"camera":1,"frame":5,"bbox":[x,y,w,h],"conf":0.9,
//    "keypoints":[51 floats],"embedding":[feature_dim floats]}
// ---------------------------------------------------------------------------

inline nlohmann::json detection_to_json(const DetectionObservation& d) {
  nlohmann::json kp = nlohmann::json::array();
  for (const auto& p : d.pose.points) {
    kp.push_back(p.x);
    kp.push_back(p.y);
    kp.push_back(p.confidence);
  }
  return {{"camera", d.camera_id},
          {"frame", d.frame},
          {"bbox", {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h}},
          {"conf", d.det_confidence},
          {"keypoints", std::move(kp)},
          {"embedding", d.embedding.vector()}};
}

inline std::string format_detections(const std::vector<DetectionObservation>& dets) {
  std::string out;
  for (const auto& d : dets) {
    out += detection_to_json(d).dump();
    out += '\n';
  }
  return out;
}

inline DetectionObservation detection_from_json(const nlohmann::json& j, std::size_t line_no,
                                                std::optional<std::size_t> feature_dim) {
  const std::string where = "line " + std::to_string(line_no) + ": ";
  DetectionObservation d;
  try {
    d.camera_id = j.at("camera").get<int>();
    d.frame = j.at("frame").get<std::int64_t>();
    const auto& bb = j.at("bbox");
    if (!bb.is_array() || bb.size() != 4) throw DimensionError(where + "bbox must have 4 values");
    d.bbox = {bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(), bb[3].get<double>()};
    d.det_confidence = j.at("conf").get<double>();
    const auto& kp = j.at("keypoints");
    if (!kp.is_array() || kp.size() != 3 * PoseKeypoints::kCount) {
      throw DimensionError(where + "keypoints must have arity 51, got " + std::to_string(kp.size()));
    }
    for (std::size_t i = 0; i < PoseKeypoints::kCount; ++i) {
      d.pose[i] = {kp[3 * i].get<double>(), kp[3 * i + 1].get<double>(), kp[3 * i + 2].get<double>()};
    }
    auto emb = j.at("embedding").get<std::vector<double>>();
    if (feature_dim && emb.size() != *feature_dim) {
      throw DimensionError(where + "embedding must have arity " + std::to_string(*feature_dim) + ", got " +
                           std::to_string(emb.size()));
    }
    d.embedding = ReIDFeature(std::move(emb));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + e.what());
  }
  if (d.frame < 0) throw ParseError(where + "negative frame");
  return d;
}

/// Parses detections and sorts them stably by (camera, frame).
inline std::vector<DetectionObservation> parse_detections_text(const std::string& text,
                                                               std::optional<std::size_t> feature_dim = {}) {
  std::vector<DetectionObservation> out;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(detection_from_json(j, line_no, feature_dim));
  }
  std::stable_sort(out.begin(), out.end(), [](const DetectionObservation& a, const DetectionObservation& b) {
    return std::tie(a.camera_id, a.frame) < std::tie(b.camera_id, b.frame);
  });
  return out;
}

inline std::vector<DetectionObservation> parse_detections(const fs::path& path,
                                                          std::optional<std::size_t> feature_dim = {}) {
  return parse_detections_text(read_file(path), feature_dim);
}

inline void write_detections(const fs::path& path, const std::vector<DetectionObservation>& dets) {
  write_file_atomic(path, format_detections(dets));
}

// ---------------------------------------------------------------------------
// Track rows
//   per camera:  frame,id,x,y,w,h,conf,-1,-1,-1
//   multi-camera: camera,frame,id,x,y,w,h
// ---------------------------------------------------------------------------

inline std::string format_camera_rows(const std::vector<TrackRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += std::to_string(r.frame) + ',' + std::to_string(r.identity) + ',' + format_double(r.bbox.x) + ',' +
           format_double(r.bbox.y) + ',' + format_double(r.bbox.w) + ',' + format_double(r.bbox.h) +
           ",1,-1,-1,-1\n";
  }
  return out;
}

inline std::string format_global_rows(const std::vector<TrackRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += std::to_string(r.camera_id) + ',' + std::to_string(r.frame) + ',' + std::to_string(r.identity) + ',' +
           format_double(r.bbox.x) + ',' + format_double(r.bbox.y) + ',' + format_double(r.bbox.w) + ',' +
           format_double(r.bbox.h) + '\n';
  }
  return out;
}

inline fs::path camera_file_name(int camera_id) { return "cam" + std::to_string(camera_id) + ".txt"; }

/// Writes one per-camera file per camera present in `rows` into `dir`.
inline std::vector<fs::path> write_track_rows(const fs::path& dir, const std::vector<TrackRow>& rows,
                                              const std::vector<int>& cameras = {}) {
  std::map<int, std::vector<TrackRow>> per_cam;
  for (int c : cameras) per_cam[c];
  for (const auto& r : rows) per_cam[r.camera_id].push_back(r);
  std::vector<fs::path> written;
  for (auto& [cam, cam_rows] : per_cam) {
    std::sort(cam_rows.begin(), cam_rows.end(), track_row_less);
    const fs::path p = dir / camera_file_name(cam);
    write_file_atomic(p, format_camera_rows(cam_rows));
    written.push_back(p);
  }
  return written;
}

inline void write_global_rows(const fs::path& path, std::vector<TrackRow> rows) {
  std::sort(rows.begin(), rows.end(), track_row_less);
  write_file_atomic(path, format_global_rows(rows));
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r' && ch != ' ' && ch != '\t') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

template <class T>
T parse_num(const std::string& tok, std::size_t line_no) {
  T v{};
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw ParseError("line " + std::to_string(line_no) + ": bad number '" + tok + "'");
  }
  return v;
}

}  // namespace detail

/// Reads either row format. Per-camera (10-column) rows take `camera_id`.
inline std::vector<TrackRow> parse_track_rows_text(const std::string& text, int camera_id = 1) {
  std::vector<TrackRow> out;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = detail::split_csv(line);
    TrackRow r;
    if (f.size() == 7) {
      r.camera_id = detail::parse_num<int>(f[0], line_no);
      r.frame = detail::parse_num<std::int64_t>(f[1], line_no);
      r.identity = detail::parse_num<std::int64_t>(f[2], line_no);
      r.bbox = {detail::parse_num<double>(f[3], line_no), detail::parse_num<double>(f[4], line_no),
                detail::parse_num<double>(f[5], line_no), detail::parse_num<double>(f[6], line_no)};
    } else if (f.size() == 10) {
      r.camera_id = camera_id;
      r.frame = detail::parse_num<std::int64_t>(f[0], line_no);
      r.identity = detail::parse_num<std::int64_t>(f[1], line_no);
      r.bbox = {detail::parse_num<double>(f[2], line_no), detail::parse_num<double>(f[3], line_no),
                detail::parse_num<double>(f[4], line_no), detail::parse_num<double>(f[5], line_no)};
    } else {
      throw ParseError("line " + std::to_string(line_no) + ": expected 7 or 10 columns, got " +
                       std::to_string(f.size()));
    }
    out.push_back(r);
  }
  return out;
}

/// Camera id from a file name like "cam3.txt"; 1 when there is none.
inline int camera_from_filename(const fs::path& path) {
  static const std::regex re(R"(cam(\d+))");
  std::smatch m;
  const std::string stem = path.stem().string();
  if (std::regex_search(stem, m, re)) return std::stoi(m[1].str());
  return 1;
}

inline std::vector<TrackRow> read_track_rows(const fs::path& path) {
  return parse_track_rows_text(read_file(path), camera_from_filename(path));
}

// ---------------------------------------------------------------------------
// Config: flat "key = value" lines, '#' starts a comment
// ---------------------------------------------------------------------------

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline TrackerConfig parse_config_text(const std::string& text) {
  TrackerConfig cfg;
  std::istringstream is(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));

    auto as_double = [&]() { return detail::parse_num<double>(val, line_no); };
    auto as_int = [&]() { return detail::parse_num<int>(val, line_no); };
    auto as_i64 = [&]() { return detail::parse_num<std::int64_t>(val, line_no); };
    auto as_bool = [&]() {
      if (val == "true" || val == "1") return true;
      if (val == "false" || val == "0") return false;
      throw ParseError("config line " + std::to_string(line_no) + ": expected true/false for " + key);
    };

    if (key == "gamma_valid") cfg.gamma_valid = as_double();
    else if (key == "theta_valid") cfg.theta_valid = as_int();
    else if (key == "mu_m") cfg.mu_m = as_int();
    else if (key == "mu_d") cfg.mu_d = as_int();
    else if (key == "k_interval") cfg.k_interval = as_i64();
    else if (key == "n_c") cfg.n_c = as_int();
    else if (key == "l_rectify") cfg.l_rectify = as_int();
    else if (key == "theta_rectify") cfg.theta_rectify = as_double();
    else if (key == "theta_cluster") cfg.theta_cluster = as_double();
    else if (key == "theta_mct") cfg.theta_mct = as_double();
    else if (key == "v_max") cfg.v_max = as_double();
    else if (key == "max_gap") cfg.max_gap = as_i64();
    else if (key == "feature_dim") cfg.feature_dim = as_int();
    else if (key == "use_orientation") cfg.use_orientation = as_bool();
    else if (key == "use_cluster") cfg.use_cluster = as_bool();
    else if (key == "use_invalid") cfg.use_invalid = as_bool();
    else if (key == "mct_velocity_gate") cfg.mct_velocity_gate = as_bool();
    else throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

/// Missing path means all defaults.
inline TrackerConfig load_config(const std::optional<fs::path>& path) {
  if (!path) return TrackerConfig{};
  return parse_config_text(read_file(*path));
}

inline std::string format_config(const TrackerConfig& c) {
  auto b = [](bool v) { return v ? "true" : "false"; };
  std::ostringstream os;
  os << "gamma_valid = " << format_double(c.gamma_valid) << '\n'
     << "theta_valid = " << c.theta_valid << '\n'
     << "mu_m = " << c.mu_m << '\n'
     << "mu_d = " << c.mu_d << '\n'
     << "k_interval = " << c.k_interval << '\n'
     << "n_c = " << c.n_c << '\n'
     << "l_rectify = " << c.l_rectify << '\n'
     << "theta_rectify = " << format_double(c.theta_rectify) << '\n'
     << "theta_cluster = " << format_double(c.theta_cluster) << '\n'
     << "theta_mct = " << format_double(c.theta_mct) << '\n'
     << "v_max = " << format_double(c.v_max) << '\n'
     << "max_gap = " << c.max_gap << '\n'
     << "feature_dim = " << c.feature_dim << '\n'
     << "use_orientation = " << b(c.use_orientation) << '\n'
     << "use_cluster = " << b(c.use_cluster) << '\n'
     << "use_invalid = " << b(c.use_invalid) << '\n'
     << "mct_velocity_gate = " << b(c.mct_velocity_gate) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Scenario spec (JSON); absent keys keep the defaults
// ---------------------------------------------------------------------------

inline synth::ScenarioSpec scenario_from_json(const nlohmann::json& j, synth::ScenarioSpec s = {}) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  try {
    get("num_identities", s.num_identities);
    get("frames", s.frames);
    get("frame_rate", s.frame_rate);
    get("world_w", s.world_w);
    get("world_h", s.world_h);
    get("speed_min", s.speed_min);
    get("speed_max", s.speed_max);
    get("turn_rate", s.turn_rate);
    get("start_x_max", s.start_x_max);
    get("occlusion_radius", s.occlusion_radius);
    get("occluded_conf_max", s.occluded_conf_max);
    get("occluded_visible_max", s.occluded_visible_max);
    get("occluded_miss_rate", s.occluded_miss_rate);
    get("feature_dim", s.feature_dim);
    get("base_scale", s.base_scale);
    get("identity_spread", s.identity_spread);
    get("orientation_scale", s.orientation_scale);
    get("valid_noise", s.valid_noise);
    get("invalid_corruption", s.invalid_corruption);
    get("occluder_mix", s.occluder_mix);
    get("miss_rate", s.miss_rate);
    get("fp_rate", s.fp_rate);
    get("bbox_jitter", s.bbox_jitter);
    get("seed", s.seed);
    if (j.contains("pattern")) {
      const auto p = j.at("pattern").get<std::string>();
      if (p == "random_walk") s.pattern = synth::WalkPattern::RandomWalk;
      else if (p == "lanes") s.pattern = synth::WalkPattern::Lanes;
      else if (p == "traverse") s.pattern = synth::WalkPattern::Traverse;
      else throw ParseError("unknown walk pattern: " + p);
    }
    if (j.contains("cameras")) {
      s.cameras.clear();
      for (const auto& c : j.at("cameras")) {
        synth::CameraView v;
        v.camera_id = c.at("id").get<int>();
        const auto r = c.at("rect").get<std::vector<double>>();
        if (r.size() != 4) throw ParseError("camera rect needs 4 values");
        v.x0 = r[0];
        v.y0 = r[1];
        v.x1 = r[2];
        v.y1 = r[3];
        if (c.contains("width")) v.width = c.at("width").get<int>();
        if (c.contains("height")) v.height = c.at("height").get<int>();
        s.cameras.push_back(v);
      }
    }
    if (j.contains("scripted")) {
      s.scripted.clear();
      for (const auto& a : j.at("scripted")) {
        const auto v = a.get<std::vector<double>>();
        if (v.size() != 4) throw ParseError("scripted agent needs [x, y, vx, vy]");
        s.scripted.push_back({v[0], v[1], v[2], v[3]});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scenario spec: ") + e.what());
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

/// What a CLI run consumed and how. The output location is deliberately not
/// serialized: the manifest is written into it, and identical runs into
/// different directories must produce identical files.
struct RunManifest {
  std::string command;
  std::vector<fs::path> inputs;
  std::optional<fs::path> config;
  fs::path output;
  bool offline = false;
  std::int64_t k_interval = 0;
  std::vector<int> cameras;
  std::optional<std::uint64_t> seed;

  std::string mode() const { return offline ? "offline" : "online"; }

  /// Throws IoError naming the first referenced file that does not exist.
  void check_inputs() const {
    for (const auto& p : inputs) {
      if (!fs::is_regular_file(p)) throw IoError("input does not exist: " + p.string());
    }
    if (config && !fs::is_regular_file(*config)) throw IoError("config does not exist: " + config->string());
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["inputs"] = nlohmann::json::array();
    for (const auto& p : inputs) j["inputs"].push_back(p.generic_string());
    j["config"] = config ? nlohmann::json(config->generic_string()) : nlohmann::json(nullptr);
    j["mode"] = mode();
    j["k_interval"] = k_interval;
    j["cameras"] = cameras;
    j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
    return j;
  }
};

inline void write_manifest(const fs::path& path, const RunManifest& m) {
  write_file_atomic(path, m.to_json().dump(2) + "\n");
}

}  // namespace samtrack::io
