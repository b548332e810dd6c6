// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "samtrack/core.hpp"
#include "samtrack/evaluation.hpp"
#include "samtrack/io.hpp"
#include "samtrack/mct.hpp"
#include "samtrack/sct.hpp"
#include "samtrack/state_estimation.hpp"
#include "samtrack/synth.hpp"

namespace samtrack {

struct SctOutput {
  std::map<int, std::vector<TrackRow>> per_camera;
  std::map<int, SctStats> stats;

  std::vector<TrackRow> all_rows() const {
    std::vector<TrackRow> rows;
    for (const auto& [cam, r] : per_camera) rows.insert(rows.end(), r.begin(), r.end());
    std::sort(rows.begin(), rows.end(), track_row_less);
    return rows;
  }
};

/// Runs one tracker per camera over frames [first, last], cameras in
/// parallel. Cameras with no detections still appear (with no rows) when
/// listed in `cameras`.
inline SctOutput run_sct(const std::vector<DetectionObservation>& dets, std::int64_t first, std::int64_t last,
                         const TrackerConfig& cfg, const OrientationClassifier& classifier, bool offline,
                         const std::vector<int>& cameras = {}) {
  std::map<int, std::vector<DetectionObservation>> by_cam;
  for (int c : cameras) by_cam[c];
  for (const auto& d : dets) by_cam[d.camera_id].push_back(d);

  struct CamResult {
    std::vector<TrackRow> rows;
    SctStats stats;
  };
  std::map<int, std::future<CamResult>> jobs;
  for (auto& [cam, cam_dets] : by_cam) {
    jobs.emplace(cam, std::async(std::launch::async, [&, cam = cam, d = std::move(cam_dets)]() mutable {
                   CameraTracker tracker(cam, cfg, classifier);
                   if (offline) tracker.set_k_interval(std::max<std::int64_t>(1, last - first + 1));
                   std::stable_sort(d.begin(), d.end(), [](const auto& a, const auto& b) { return a.frame < b.frame; });
                   CamResult res;
                   auto it = d.begin();
                   for (std::int64_t f = first; f <= last; ++f) {
                     std::vector<DetectionObservation> frame_dets;
                     while (it != d.end() && it->frame == f) frame_dets.push_back(std::move(*it++));
                     auto rows = tracker.step(f, std::move(frame_dets));
                     res.rows.insert(res.rows.end(), rows.begin(), rows.end());
                   }
                   auto tail = tracker.finish();
                   res.rows.insert(res.rows.end(), tail.begin(), tail.end());
                   std::sort(res.rows.begin(), res.rows.end(), track_row_less);
                   res.stats = tracker.stats();
                   return res;
                 }));
  }
  SctOutput out;
  for (auto& [cam, job] : jobs) {
    CamResult r = job.get();
    out.per_camera[cam] = std::move(r.rows);
    out.stats[cam] = r.stats;
  }
  return out;
}

/// Frame range covered by a detection list; {0, -1} when empty.
inline std::pair<std::int64_t, std::int64_t> frame_range(const std::vector<DetectionObservation>& dets) {
  if (dets.empty()) return {0, -1};
  std::int64_t lo = dets.front().frame, hi = dets.front().frame;
  for (const auto& d : dets) {
    lo = std::min(lo, d.frame);
    hi = std::max(hi, d.frame);
  }
  return {lo, hi};
}

struct PipelineOptions {
  synth::ScenarioSpec spec;
  TrackerConfig cfg;
  OrientationClassifier classifier;
  bool offline = false;
  std::optional<std::filesystem::path> out_dir;
};

struct PipelineResult {
  synth::Scenario scenario;
  SctOutput sct;
  std::vector<TrackRow> global;
  MctResult mct;
  EvalReport report;
  double link_recall = 1.0;
};

inline nlohmann::json report_json(const PipelineResult& r) {
  const auto& id = r.report.id;
  const auto& cl = r.report.clear;
  nlohmann::json sct = nlohmann::json::object();
  for (const auto& [cam, s] : r.sct.stats) {
    sct[std::to_string(cam)] = {{"frames", s.frames},
                                {"rectify_merges", s.rectify_merges},
                                {"cluster_passes", s.cluster_passes},
                                {"cluster_merges", s.cluster_merges}};
  }
  return {{"idf1", id.idf1},       {"idp", id.idp},
          {"idr", id.idr},         {"idtp", id.idtp},
          {"idfp", id.idfp},       {"idfn", id.idfn},
          {"mota", cl.mota},       {"ids", cl.ids},
          {"fp", cl.fp},           {"fn", cl.fn},
          {"gt", cl.gt_total},     {"iou_threshold", r.report.iou_threshold},
          {"cross_camera_link_recall", r.link_recall},
          {"trajectories", r.mct.trajectories.size()},
          {"mct_merges", r.mct.accepted_costs.size()},
          {"sct", std::move(sct)}};
}

/// Writes every pipeline artefact under `dir`:
///   detections.jsonl, gt.csv, sct/cam<k>.txt, global.csv, report.txt, report.json
inline void write_pipeline_outputs(const std::filesystem::path& dir, const PipelineResult& r,
                                   const TrackerConfig& cfg) {
  std::vector<int> cams;
  for (const auto& [cam, _] : r.sct.per_camera) cams.push_back(cam);
  io::write_detections(dir / "detections.jsonl", r.scenario.dets);
  io::write_global_rows(dir / "gt.csv", r.scenario.gt);
  io::write_track_rows(dir / "sct", r.sct.all_rows(), cams);
  io::write_global_rows(dir / "global.csv", r.global);
  io::write_file_atomic(dir / "config.txt", io::format_config(cfg));
  io::write_file_atomic(dir / "report.txt", r.report.to_text());
  io::write_file_atomic(dir / "report.json", report_json(r).dump(2) + "\n");
}

/// synth -> per-camera SCT -> MCT -> evaluation.
inline PipelineResult run_pipeline(const PipelineOptions& opt) {
  opt.cfg.validate();
  if (static_cast<int>(opt.spec.feature_dim) != opt.cfg.feature_dim) {
    throw ConfigError("scenario feature_dim " + std::to_string(opt.spec.feature_dim) +
                      " differs from tracker feature_dim " + std::to_string(opt.cfg.feature_dim));
  }
  PipelineResult r;
  r.scenario = synth::generate_scenario(opt.spec);
  std::vector<int> cams;
  for (const auto& c : opt.spec.cameras) cams.push_back(c.camera_id);
  r.sct = run_sct(r.scenario.dets, 0, opt.spec.frames - 1, opt.cfg, opt.classifier, opt.offline, cams);
  r.mct = associate_mct(build_trajectories(r.sct.all_rows(), r.scenario.dets, opt.cfg, opt.classifier), opt.cfg);
  r.global = global_rows(r.mct.trajectories);
  r.report = evaluate(r.scenario.gt, r.global);
  r.link_recall = cross_camera_link_recall(r.scenario.gt, r.global);
  if (opt.out_dir) write_pipeline_outputs(*opt.out_dir, r, opt.cfg);
  return r;
}

}  // namespace samtrack
