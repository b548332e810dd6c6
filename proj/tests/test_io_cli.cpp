// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <set>
#include <tuple>

#include "samtrack/cli.hpp"
#include "samtrack/io.hpp"

using namespace samtrack;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("samtrack_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary);
  os << s;
}

int run_cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "samtrack");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

DetectionObservation sample_det(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> n(0.0, 10.0);
  DetectionObservation d;
  d.camera_id = 1 + static_cast<int>(rng() % 3);
  d.frame = static_cast<std::int64_t>(rng() % 100);
  d.bbox = {n(rng), n(rng), 10.0 + std::abs(n(rng)), 20.0 + std::abs(n(rng))};
  d.det_confidence = 0.123456789012345678;
  for (auto& k : d.pose.points) k = {n(rng), n(rng), std::abs(n(rng)) / 30.0};
  std::vector<double> e(static_cast<std::size_t>(dim));
  for (auto& x : e) x = n(rng);
  d.embedding = ReIDFeature(e);
  return d;
}

}  // namespace

// --- detections ---------------------------------------------------------------

TEST(Detections, EmptyFileIsEmpty) { EXPECT_TRUE(io::parse_detections_text("").empty()); }

TEST(Detections, RoundTripIsBitwiseAndSorted) {
  std::mt19937_64 rng(4);
  std::vector<DetectionObservation> dets;
  for (int i = 0; i < 50; ++i) dets.push_back(sample_det(rng, 16));
  const auto back = io::parse_detections_text(io::format_detections(dets), 16);
  auto sorted = dets;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return std::tie(a.camera_id, a.frame) < std::tie(b.camera_id, b.frame);
  });
  ASSERT_EQ(back.size(), sorted.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].camera_id, sorted[i].camera_id);
    EXPECT_EQ(back[i].frame, sorted[i].frame);
    EXPECT_EQ(back[i].bbox.x, sorted[i].bbox.x);
    EXPECT_EQ(back[i].bbox.h, sorted[i].bbox.h);
    EXPECT_EQ(back[i].det_confidence, sorted[i].det_confidence);
    EXPECT_EQ(back[i].pose, sorted[i].pose);
    EXPECT_EQ(back[i].embedding, sorted[i].embedding);
  }
}

TEST(Detections, KeypointArityError) {
  std::mt19937_64 rng(1);
  auto j = io::detection_to_json(sample_det(rng, 4));
  j["keypoints"].erase(j["keypoints"].size() - 1);
  try {
    io::parse_detections_text(j.dump() + "\n");
    FAIL() << "expected a dimension error";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("51"), std::string::npos);
  }
}

TEST(Detections, EmbeddingArityError) {
  std::mt19937_64 rng(1);
  EXPECT_THROW(io::parse_detections_text(io::format_detections({sample_det(rng, 4)}), 8), DimensionError);
}

TEST(Detections, MalformedLineNamesLineNumber) {
  std::mt19937_64 rng(1);
  const std::string good = io::format_detections({sample_det(rng, 4)});
  try {
    io::parse_detections_text(good + "{not json\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(io::parse_detections_text("{\"camera\": 1}\n"), ParseError);
}

// --- track rows ---------------------------------------------------------------

TEST(TrackRows, CameraLineFormat) {
  EXPECT_EQ(io::format_camera_rows({{1, 5, 3, {10, 20, 30, 40}}}), "5,3,10,20,30,40,1,-1,-1,-1\n");
  EXPECT_EQ(io::format_global_rows({{2, 5, 3, {10, 20, 30, 40.5}}}), "2,5,3,10,20,30,40.5\n");
  EXPECT_EQ(io::format_camera_rows({}), "");
}

TEST(TrackRows, RoundTripThousandRows) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 100.0);
  std::vector<TrackRow> rows;
  std::set<std::tuple<int, std::int64_t, std::int64_t>> keys;
  while (rows.size() < 1000) {
    // (camera, frame, id) is unique in a track file.
    TrackRow r{1 + static_cast<int>(rng() % 3), static_cast<std::int64_t>(rng() % 500),
               static_cast<std::int64_t>(rng() % 40), {n(rng), n(rng), std::abs(n(rng)), std::abs(n(rng))}};
    if (keys.insert({r.camera_id, r.frame, r.identity}).second) rows.push_back(r);
  }
  std::sort(rows.begin(), rows.end(), track_row_less);
  EXPECT_EQ(io::parse_track_rows_text(io::format_global_rows(rows)), rows);

  const fs::path dir = scratch("rows");
  const auto files = io::write_track_rows(dir, rows);
  std::vector<TrackRow> back;
  for (const auto& f : files) {
    auto r = io::read_track_rows(f);
    back.insert(back.end(), r.begin(), r.end());
  }
  std::sort(back.begin(), back.end(), track_row_less);
  EXPECT_EQ(back, rows);
}

TEST(TrackRows, BadColumnsRejected) {
  EXPECT_THROW(io::parse_track_rows_text("1,2,3\n"), ParseError);
  EXPECT_THROW(io::parse_track_rows_text("1,2,x,4,5,6,7\n"), ParseError);
}

TEST(TrackRows, UnwritablePathThrows) {
  const fs::path dir = scratch("unwritable");
  write_text(dir / "file", "x");
  EXPECT_THROW(io::write_file_atomic(dir / "file" / "child.txt", "y"), io::IoError);
}

// --- config ---------------------------------------------------------------------

TEST(Config, EmptyIsDefaults) {
  const auto c = io::parse_config_text("");
  const TrackerConfig d;
  EXPECT_EQ(c.gamma_valid, d.gamma_valid);
  EXPECT_EQ(c.theta_valid, 7);
  EXPECT_EQ(c.mu_m, 10);
  EXPECT_EQ(c.mu_d, 300);
  EXPECT_EQ(c.theta_rectify, 20.0);
  EXPECT_EQ(c.theta_cluster, 30.0);
  EXPECT_EQ(c.theta_mct, 40.0);
  EXPECT_EQ(c.n_c, 4);
  EXPECT_EQ(c.k_interval, 600);
  EXPECT_EQ(io::load_config(std::nullopt).mu_d, 300);
}

TEST(Config, SingleOverride) {
  const auto c = io::parse_config_text("# comment\ntheta_mct = 55   # trailing\n");
  EXPECT_EQ(c.theta_mct, 55.0);
  EXPECT_EQ(c.theta_cluster, 30.0);
}

TEST(Config, TypoIsAnError) { EXPECT_THROW(io::parse_config_text("thta_mct = 55\n"), ConfigError); }

TEST(Config, NonNumericIsParseError) {
  EXPECT_THROW(io::parse_config_text("theta_mct = lots\n"), ParseError);
  EXPECT_THROW(io::parse_config_text("use_cluster = maybe\n"), ParseError);
}

TEST(Config, FormatRoundTrips) {
  TrackerConfig c;
  c.theta_mct = 12.5;
  c.use_invalid = false;
  c.max_gap = 77;
  const auto back = io::parse_config_text(io::format_config(c));
  EXPECT_EQ(io::format_config(back), io::format_config(c));
}

// --- cli ------------------------------------------------------------------------

TEST(Cli, UnknownSubcommandAndFlagExitTwo) {
  std::string err;
  EXPECT_EQ(run_cli({"frobnicate"}, nullptr, &err), 2);
  EXPECT_NE(err.find("Usage"), std::string::npos);
  EXPECT_EQ(run_cli({"eval", "--bogus"}), 2);
  EXPECT_EQ(run_cli({}), 2);
}

TEST(Cli, EvalOfIdenticalFilesIsPerfect) {
  const fs::path dir = scratch("eval");
  io::write_global_rows(dir / "g.csv", {{1, 1, 1, {0, 0, 10, 10}}, {1, 2, 1, {1, 0, 10, 10}}});
  std::string out;
  ASSERT_EQ(run_cli({"eval", "--gt", (dir / "g.csv").string(), "--pred", (dir / "g.csv").string()}, &out), 0);
  EXPECT_NE(out.find("IDF1  1.0000"), std::string::npos);
  ASSERT_EQ(run_cli({"eval", "--gt", (dir / "g.csv").string(), "--pred", (dir / "g.csv").string(), "--json"}, &out),
            0);
  EXPECT_EQ(nlohmann::json::parse(out).at("idf1").get<double>(), 1.0);
}

TEST(Cli, MissingInputFailsWithoutOutput) {
  const fs::path dir = scratch("missing");
  EXPECT_NE(run_cli({"sct", "--detections", (dir / "nope.jsonl").string(), "--out", (dir / "o").string()}), 0);
  EXPECT_FALSE(fs::exists(dir / "o"));
}

TEST(Cli, BadConfigFailsWithoutPartialFiles) {
  const fs::path dir = scratch("badcfg");
  write_text(dir / "cfg.txt", "thta_mct = 5\n");
  std::string err;
  EXPECT_EQ(run_cli({"pipeline", "--preset", "easy_single_cam", "--config", (dir / "cfg.txt").string(), "--out",
                     (dir / "out").string()},
                    nullptr, &err),
            1);
  EXPECT_NE(err.find("thta_mct"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Cli, StagesChainThroughFiles) {
  const fs::path dir = scratch("chain");
  std::string err;
  ASSERT_EQ(run_cli({"synth", "--preset", "two_camera_handoff", "--seed", "3", "--out", (dir / "s").string()}), 0);
  ASSERT_EQ(run_cli({"sct", "--detections", (dir / "s" / "detections.jsonl").string(), "--out",
                     (dir / "t").string()},
                    nullptr, &err),
            0);
  EXPECT_NE(err.find("theta_mct = 40"), std::string::npos);  // effective config is logged
  ASSERT_TRUE(fs::exists(dir / "t" / "cam1.txt"));
  ASSERT_TRUE(fs::exists(dir / "t" / "cam2.txt"));
  ASSERT_EQ(run_cli({"mct", "--tracks", (dir / "t" / "cam1.txt").string(), (dir / "t" / "cam2.txt").string(),
                     "--detections", (dir / "s" / "detections.jsonl").string(), "--out",
                     (dir / "global.csv").string()}),
            0);
  std::string out;
  ASSERT_EQ(run_cli({"eval", "--gt", (dir / "s" / "gt.csv").string(), "--pred", (dir / "global.csv").string(),
                     "--json"},
                    &out),
            0);
  const auto j = nlohmann::json::parse(out);
  EXPECT_GE(j.at("idf1").get<double>(), 0.9);
  EXPECT_GE(j.at("cross_camera_link_recall").get<double>(), 0.9);
}

TEST(Cli, OfflineSctClustersOnce) {
  const fs::path dir = scratch("offline");
  ASSERT_EQ(run_cli({"synth", "--preset", "easy_single_cam", "--out", (dir / "s").string()}), 0);
  std::string err;
  ASSERT_EQ(run_cli({"sct", "--offline", "--detections", (dir / "s" / "detections.jsonl").string(), "--out",
                     (dir / "t").string()},
                    nullptr, &err),
            0);
  EXPECT_NE(err.find("1 clustering passes"), std::string::npos) << err;
}

TEST(Cli, OrientationSpecValidated) {
  const fs::path dir = scratch("orient");
  EXPECT_EQ(run_cli({"pipeline", "--orientation", "sideways", "--out", (dir / "o").string()}), 1);
  EXPECT_EQ(run_cli({"pipeline", "--orientation", "mlp:/nonexistent/w.txt", "--out", (dir / "o").string()}), 1);
  std::ofstream w(dir / "w.txt");
  write_mlp_weights(w, MlpWeights::zeros());
  w.close();
  EXPECT_EQ(run_cli({"pipeline", "--orientation", "mlp:" + (dir / "w.txt").string(), "--out", (dir / "o").string()}),
            0);
}

TEST(Cli, PipelineTwiceIsByteIdentical) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  ASSERT_EQ(run_cli({"pipeline", "--preset", "easy_single_cam", "--seed", "7", "--out", a.string()}), 0);
  ASSERT_EQ(run_cli({"pipeline", "--preset", "easy_single_cam", "--seed", "7", "--out", b.string()}), 0);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(e.path(), a);
    EXPECT_EQ(io::read_file(e.path()), io::read_file(b / rel)) << rel;
  }
  EXPECT_GE(files, 6u);
}

TEST(Cli, BinaryRuns) {
  const std::string cmd = std::string(SAMTRACK_CLI_PATH) + " --help > /dev/null";
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  const std::string bad = std::string(SAMTRACK_CLI_PATH) + " nonsense > /dev/null 2>&1";
  const int rc = std::system(bad.c_str());
  EXPECT_EQ(WEXITSTATUS(rc), 2);
}

// --- run manifest -----------------------------------------------------------------

TEST(Manifest, MissingInputIsReported) {
  io::RunManifest m;
  m.inputs = {scratch("manifest") / "absent.jsonl"};
  try {
    m.check_inputs();
    FAIL() << "expected an I/O error";
  } catch (const io::IoError& e) {
    EXPECT_NE(std::string(e.what()).find("absent.jsonl"), std::string::npos);
  }
}

TEST(Manifest, JsonCarriesModeSeedAndCamerasButNotOutput) {
  io::RunManifest m;
  m.command = "sct";
  m.output = "/somewhere/else";
  m.offline = true;
  m.cameras = {1, 2};
  m.seed = 7;
  const auto j = m.to_json();
  EXPECT_EQ(j.at("mode"), "offline");
  EXPECT_EQ(j.at("seed"), 7);
  EXPECT_EQ(j.at("cameras"), (std::vector<int>{1, 2}));
  EXPECT_EQ(j.dump().find("somewhere"), std::string::npos);
}

TEST(Manifest, PipelineWritesManifest) {
  const fs::path dir = scratch("manifest_pipe");
  ASSERT_EQ(run_cli({"pipeline", "--preset", "two_camera_handoff", "--seed", "3", "--offline", "--out",
                     (dir / "out").string()}),
            0);
  const auto j = nlohmann::json::parse(io::read_file(dir / "out" / "manifest.json"));
  EXPECT_EQ(j.at("command"), "pipeline");
  EXPECT_EQ(j.at("mode"), "offline");
  EXPECT_EQ(j.at("seed"), 3);
  EXPECT_EQ(j.at("cameras"), (std::vector<int>{1, 2}));
}
