// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "samtrack/evaluation.hpp"
#include "samtrack/io.hpp"
#include "samtrack/mct.hpp"
#include "samtrack/pipeline.hpp"
#include "samtrack/state_estimation.hpp"
#include "samtrack/synth.hpp"

namespace samtrack {

namespace detail {

inline OrientationClassifier make_classifier(const std::string& spec) {
  if (spec.empty() || spec == "geometric") return {};
  if (spec.rfind("mlp:", 0) == 0) return OrientationClassifier(load_mlp_weights(spec.substr(4)));
  throw ConfigError("--orientation must be 'geometric' or 'mlp:<weightfile>', got '" + spec + "'");
}

inline synth::ScenarioSpec resolve_scenario(const std::string& preset, const std::string& spec_path,
                                            std::optional<std::uint64_t> seed) {
  synth::ScenarioSpec s = preset.empty() ? synth::ScenarioSpec{} : synth::preset(preset);
  if (!spec_path.empty()) s = io::scenario_from_json(nlohmann::json::parse(io::read_file(spec_path)), s);
  if (seed) s.seed = *seed;
  s.validate();
  return s;
}

inline void log_config(std::ostream& log, const TrackerConfig& cfg, bool offline, const std::string& orientation) {
  log << "# effective config\n" << io::format_config(cfg);
  log << "offline = " << (offline ? "true" : "false") << '\n';
  log << "orientation = " << (orientation.empty() ? "geometric" : orientation) << '\n';
}

inline io::RunManifest make_manifest(std::string command, std::vector<std::filesystem::path> inputs,
                                     const std::string& config_path, const std::string& out_path, bool offline,
                                     const TrackerConfig& cfg) {
  io::RunManifest m;
  m.command = std::move(command);
  m.inputs = std::move(inputs);
  if (!config_path.empty()) m.config = config_path;
  m.output = out_path;
  m.offline = offline;
  m.k_interval = cfg.k_interval;
  m.check_inputs();
  return m;
}

inline void log_manifest(std::ostream& log, const io::RunManifest& m) {
  log << "# run manifest\n" << m.to_json().dump() << '\n';
}

}  // namespace detail

/// Command-line entry point. Returns the process exit code: 0 on success, 2
/// on usage errors, 1 on any other failure.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"samtrack: state-aware multi-camera multi-target tracker"};
  app.require_subcommand(1);
  app.fallthrough(false);

  std::string config_path, out_path, preset, spec_path, orientation, detections_path, gt_path, pred_path;
  std::vector<std::string> track_paths;
  std::optional<std::uint64_t> seed;
  bool offline = false, as_json = false;
  double iou_thr = 0.5;

  auto add_tracker_opts = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value tracker config file")->check(CLI::ExistingFile);
    sub->add_option("--orientation", orientation, "geometric | mlp:<weightfile>");
  };

  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic scenario (detections + GT)");
  synth_cmd->add_option("--preset", preset, "named scenario preset");
  synth_cmd->add_option("--spec", spec_path, "scenario JSON (overrides preset fields)")->check(CLI::ExistingFile);
  synth_cmd->add_option("--seed", seed, "random seed");
  synth_cmd->add_option("--out", out_path, "output directory")->required();

  CLI::App* sct_cmd = app.add_subcommand("sct", "single-camera tracking");
  sct_cmd->add_option("--detections", detections_path, "detections (JSON lines)")->required()->check(CLI::ExistingFile);
  sct_cmd->add_option("--out", out_path, "output directory for cam<k>.txt")->required();
  sct_cmd->add_flag("--offline", offline, "one clustering pass over the whole sequence");
  add_tracker_opts(sct_cmd);

  CLI::App* mct_cmd = app.add_subcommand("mct", "cross-camera association");
  mct_cmd->add_option("--tracks", track_paths, "per-camera track files")->required()->check(CLI::ExistingFile);
  mct_cmd->add_option("--detections", detections_path, "original detections")->required()->check(CLI::ExistingFile);
  mct_cmd->add_option("--out", out_path, "output file for global tracks")->required();
  add_tracker_opts(mct_cmd);

  CLI::App* eval_cmd = app.add_subcommand("eval", "score tracks against ground truth");
  eval_cmd->add_option("--gt", gt_path, "ground-truth rows")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--pred", pred_path, "predicted rows")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--iou", iou_thr, "IoU threshold")->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_flag("--json", as_json, "print JSON instead of text");

  CLI::App* pipe_cmd = app.add_subcommand("pipeline", "synth -> sct -> mct -> eval");
  pipe_cmd->add_option("--preset", preset, "named scenario preset");
  pipe_cmd->add_option("--spec", spec_path, "scenario JSON (overrides preset fields)")->check(CLI::ExistingFile);
  pipe_cmd->add_option("--seed", seed, "random seed");
  pipe_cmd->add_option("--out", out_path, "output directory")->required();
  pipe_cmd->add_flag("--offline", offline, "one clustering pass over the whole sequence");
  add_tracker_opts(pipe_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*synth_cmd) {
      const auto spec = detail::resolve_scenario(preset, spec_path, seed);
      auto m = detail::make_manifest("synth", {}, {}, out_path, false, TrackerConfig{});
      if (!spec_path.empty()) m.inputs.push_back(spec_path);
      for (const auto& c : spec.cameras) m.cameras.push_back(c.camera_id);
      m.seed = spec.seed;
      m.check_inputs();
      detail::log_manifest(err, m);
      const auto sc = synth::generate_scenario(spec);
      const std::filesystem::path dir = out_path;
      io::write_detections(dir / "detections.jsonl", sc.dets);
      io::write_global_rows(dir / "gt.csv", sc.gt);
      io::write_manifest(dir / "manifest.json", m);
      err << "synth: " << sc.dets.size() << " detections, " << sc.gt.size() << " gt rows, seed " << spec.seed << '\n';
      return 0;
    }

    const TrackerConfig cfg = io::load_config(config_path.empty() ? std::nullopt
                                                                  : std::optional<std::filesystem::path>(config_path));

    if (*sct_cmd) {
      detail::log_config(err, cfg, offline, orientation);
      auto m = detail::make_manifest("sct", {detections_path}, config_path, out_path, offline, cfg);
      const auto classifier = detail::make_classifier(orientation);
      const auto dets = io::parse_detections(detections_path, static_cast<std::size_t>(cfg.feature_dim));
      const auto [first, last] = frame_range(dets);
      const SctOutput res = run_sct(dets, first, last, cfg, classifier, offline);
      for (const auto& [cam, _] : res.per_camera) m.cameras.push_back(cam);
      detail::log_manifest(err, m);
      io::write_track_rows(out_path, res.all_rows(), m.cameras);
      io::write_manifest(std::filesystem::path(out_path) / "manifest.json", m);
      for (const auto& [cam, s] : res.stats) {
        err << "sct: camera " << cam << ": " << res.per_camera.at(cam).size() << " rows, " << s.cluster_passes
            << " clustering passes, " << s.rectify_merges << " rectify merges, " << s.cluster_merges
            << " cluster merges\n";
      }
      return 0;
    }

    if (*mct_cmd) {
      detail::log_config(err, cfg, false, orientation);
      std::vector<std::filesystem::path> inputs(track_paths.begin(), track_paths.end());
      inputs.push_back(detections_path);
      auto m = detail::make_manifest("mct", inputs, config_path, out_path, false, cfg);
      const auto classifier = detail::make_classifier(orientation);
      std::vector<TrackRow> rows;
      for (const auto& p : track_paths) {
        auto r = io::read_track_rows(p);
        rows.insert(rows.end(), r.begin(), r.end());
      }
      std::set<int> cams;
      for (const auto& r : rows) cams.insert(r.camera_id);
      m.cameras.assign(cams.begin(), cams.end());
      detail::log_manifest(err, m);
      const auto dets = io::parse_detections(detections_path, static_cast<std::size_t>(cfg.feature_dim));
      const MctResult res = associate_mct(build_trajectories(rows, dets, cfg, classifier), cfg);
      io::write_global_rows(out_path, global_rows(res.trajectories));
      err << "mct: " << res.trajectories.size() << " trajectories after " << res.accepted_costs.size()
          << " merges\n";
      return 0;
    }

    if (*eval_cmd) {
      detail::log_manifest(err, detail::make_manifest("eval", {gt_path, pred_path}, {}, {}, false, TrackerConfig{}));
      const auto gt = io::read_track_rows(gt_path);
      const auto pred = io::read_track_rows(pred_path);
      const EvalReport rep = evaluate(gt, pred, iou_thr);
      if (as_json) {
        PipelineResult pr;
        pr.report = rep;
        pr.link_recall = cross_camera_link_recall(gt, pred, iou_thr);
        nlohmann::json j = report_json(pr);
        j.erase("sct");
        j.erase("trajectories");
        j.erase("mct_merges");
        out << j.dump(2) << '\n';
      } else {
        out << rep.to_text();
      }
      return 0;
    }

    if (*pipe_cmd) {
      detail::log_config(err, cfg, offline, orientation);
      PipelineOptions opt;
      opt.spec = detail::resolve_scenario(preset.empty() ? "easy_single_cam" : preset, spec_path, seed);
      opt.cfg = cfg;
      opt.classifier = detail::make_classifier(orientation);
      opt.offline = offline;
      opt.out_dir = std::filesystem::path(out_path);
      auto m = detail::make_manifest("pipeline", {}, config_path, out_path, offline, cfg);
      if (!spec_path.empty()) m.inputs.push_back(spec_path);
      for (const auto& c : opt.spec.cameras) m.cameras.push_back(c.camera_id);
      m.seed = opt.spec.seed;
      detail::log_manifest(err, m);
      const PipelineResult r = run_pipeline(opt);
      io::write_manifest(*opt.out_dir / "manifest.json", m);
      out << r.report.to_text();
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace samtrack
