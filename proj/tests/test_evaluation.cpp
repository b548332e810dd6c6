// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "samtrack/evaluation.hpp"

using namespace samtrack;

namespace {

TrackRow row(int cam, std::int64_t frame, std::int64_t id, double x) { return {cam, frame, id, {x, 0, 10, 10}}; }

// Two people 10 frames long at x = 0 and x = 100.
std::vector<TrackRow> two_tracks() {
  std::vector<TrackRow> out;
  for (std::int64_t f = 1; f <= 10; ++f) {
    out.push_back(row(1, f, 1, 0));
    out.push_back(row(1, f, 2, 100));
  }
  return out;
}

// Prediction swaps the labels from frame 6 on.
std::vector<TrackRow> swapped() {
  std::vector<TrackRow> out;
  for (std::int64_t f = 1; f <= 10; ++f) {
    const bool sw = f >= 6;
    out.push_back(row(1, f, sw ? 2 : 1, 0));
    out.push_back(row(1, f, sw ? 1 : 2, 100));
  }
  return out;
}

std::vector<oracle::Row> to_oracle(const std::vector<TrackRow>& rows) {
  std::vector<oracle::Row> out;
  for (const auto& r : rows) out.push_back({r.camera_id, r.frame, r.identity, r.bbox.x, r.bbox.y, r.bbox.w, r.bbox.h});
  return out;
}

}  // namespace

TEST(IdMeasures, PerfectPrediction) {
  const auto rep = id_measures(two_tracks(), two_tracks());
  EXPECT_EQ(rep.idf1, 1.0);
  EXPECT_EQ(rep.idp, 1.0);
  EXPECT_EQ(rep.idr, 1.0);
}

TEST(IdMeasures, MidwaySwapHalvesIdf1) {
  const auto rep = id_measures(two_tracks(), swapped());
  EXPECT_EQ(rep.idtp, 10);
  EXPECT_EQ(rep.idfp, 10);
  EXPECT_EQ(rep.idfn, 10);
  EXPECT_DOUBLE_EQ(rep.idf1, 0.5);
}

TEST(IdMeasures, HalfCoverageHalvesRecall) {
  std::vector<TrackRow> gt, pred;
  for (std::int64_t f = 1; f <= 10; ++f) {
    gt.push_back(row(1, f, 1, 0));
    if (f <= 5) pred.push_back(row(1, f, 9, 0));
  }
  const auto rep = id_measures(gt, pred);
  EXPECT_DOUBLE_EQ(rep.idr, 0.5);
  EXPECT_DOUBLE_EQ(rep.idp, 1.0);
}

TEST(IdMeasures, EmptyInputsAreWellDefined) {
  EXPECT_EQ(id_measures({}, {}).idf1, 1.0);
  EXPECT_EQ(id_measures(two_tracks(), {}).idf1, 0.0);
  EXPECT_EQ(id_measures({}, two_tracks()).idf1, 0.0);
}

TEST(IdMeasures, MatchesExhaustiveEnumeration) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const int ng = 1 + static_cast<int>(rng() % 4), np = 1 + static_cast<int>(rng() % 4);
    const int frames = 1 + static_cast<int>(rng() % 12);
    std::vector<TrackRow> gt, pred;
    for (int f = 0; f < frames; ++f) {
      for (int g = 0; g < ng; ++g) {
        if (rng() % 5 == 0) continue;
        gt.push_back(row(1, f, g + 1, 50.0 * g));
      }
      for (int p = 0; p < np; ++p) {
        if (rng() % 4 == 0) continue;
        // Sits on a random person's box, shifted a little.
        const double x = 50.0 * static_cast<double>(rng() % static_cast<unsigned>(ng)) + static_cast<double>(rng() % 4);
        pred.push_back(row(1, f, p + 1, x));
      }
    }
    const auto rep = id_measures(gt, pred);
    ASSERT_EQ(rep.idtp, oracle::exhaustive_idtp(to_oracle(gt), to_oracle(pred), 0.5)) << trial;
  }
}

TEST(IdMeasures, SymmetricUnderSwap) {
  const auto a = id_measures(two_tracks(), swapped());
  std::vector<TrackRow> partial = swapped();
  partial.resize(13);
  const auto b = id_measures(two_tracks(), partial);
  const auto c = id_measures(partial, two_tracks());
  EXPECT_DOUBLE_EQ(b.idf1, c.idf1);
  EXPECT_DOUBLE_EQ(b.idp, c.idr);
  EXPECT_DOUBLE_EQ(b.idr, c.idp);
  EXPECT_DOUBLE_EQ(a.idf1, 0.5);
}

TEST(IdMeasures, LabelPermutationInvariant) {
  auto pred = swapped();
  for (auto& r : pred) r.identity = r.identity == 1 ? 77 : 3;
  const auto a = id_measures(two_tracks(), swapped());
  const auto b = id_measures(two_tracks(), pred);
  EXPECT_EQ(a.idtp, b.idtp);
  EXPECT_EQ(clear_metrics(two_tracks(), swapped()).ids, clear_metrics(two_tracks(), pred).ids);
}

TEST(Clear, Perfect) {
  const auto rep = clear_metrics(two_tracks(), two_tracks());
  EXPECT_EQ(rep.mota, 1.0);
  EXPECT_EQ(rep.ids, 0);
}

TEST(Clear, SwapCountsTwoSwitches) { EXPECT_EQ(clear_metrics(two_tracks(), swapped()).ids, 2); }

TEST(Clear, SpuriousBoxes) {
  auto pred = two_tracks();
  for (std::int64_t f = 1; f <= 10; ++f) pred.push_back(row(1, f, 50, 500));
  const auto rep = clear_metrics(two_tracks(), pred);
  EXPECT_EQ(rep.fp, 10);
  EXPECT_EQ(rep.fn, 0);
  EXPECT_EQ(rep.ids, 0);
  EXPECT_DOUBLE_EQ(rep.mota, 0.5);
}

TEST(Clear, CarryOverKeepsPreviousPairing) {
  // Frame 2: the old partner still overlaps, though another box overlaps more.
  std::vector<TrackRow> gt{row(1, 1, 1, 0), row(1, 2, 1, 0)};
  std::vector<TrackRow> pred{row(1, 1, 5, 2), row(1, 2, 5, 2), row(1, 2, 6, 0)};
  const auto rep = clear_metrics(gt, pred);
  EXPECT_EQ(rep.ids, 0);
  EXPECT_EQ(rep.fp, 1);
}

TEST(Clear, CamerasAreIndependent) {
  std::vector<TrackRow> gt{row(1, 1, 1, 0), row(2, 1, 1, 0)};
  std::vector<TrackRow> pred{row(1, 1, 4, 0), row(2, 1, 4, 0)};
  EXPECT_EQ(clear_metrics(gt, pred).matches, 2);
}

TEST(LinkRecall, DominantIdsMustAgree) {
  std::vector<TrackRow> gt, pred;
  for (std::int64_t f = 0; f < 5; ++f) {
    gt.push_back(row(1, f, 1, 0));
    gt.push_back(row(2, f + 10, 1, 0));
    gt.push_back(row(1, f, 2, 100));
    gt.push_back(row(2, f + 10, 2, 100));
    pred.push_back(row(1, f, 7, 0));
    pred.push_back(row(2, f + 10, 7, 0));
    pred.push_back(row(1, f, 8, 100));
    pred.push_back(row(2, f + 10, 9, 100));
  }
  EXPECT_DOUBLE_EQ(cross_camera_link_recall(gt, pred), 0.5);
  EXPECT_DOUBLE_EQ(cross_camera_link_recall(two_tracks(), two_tracks()), 1.0);
}
