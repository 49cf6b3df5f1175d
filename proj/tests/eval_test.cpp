// Copyright 2026 The s2snet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "s2s/eval.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>
#include "gtest/gtest.h"
#include "s2s/errors.hpp"
#include "support/box_oracle.hpp"
#include "support/generators.hpp"

namespace s2s {
namespace {

Box3D Cube(double x, double y = 0.0, double z = 0.0, double yaw = 0.0, double conf = 1.0) {
  return {{x, y, z}, {1.0, 1.0, 1.0}, yaw, ObjectClass::kCar, conf};
}

// Unit cubes offset along x by d have IoU (1 - d) / (1 + d).
double OffsetForIou(double iou) { return (1.0 - iou) / (1.0 + iou); }

TEST(Iou3dTest, UnitCases) {
  EXPECT_DOUBLE_EQ(iou3d(Cube(0), Cube(0)), 1.0);
  EXPECT_EQ(iou3d(Cube(0), Cube(5)), 0.0);
  EXPECT_EQ(iou3d(Cube(0), Cube(0, 0, 1.0)), 0.0);  // touching faces
  EXPECT_NEAR(iou3d(Cube(0), Cube(0.5)), 1.0 / 3.0, 1e-9);
  Box3D square{{1, 2, 0}, {2, 2, 1}, 0.3, ObjectClass::kCar, 1.0};
  Box3D turned = square;
  turned.yaw = normalize_yaw(square.yaw + std::numbers::pi / 2);
  EXPECT_NEAR(iou3d(square, turned), 1.0, 1e-9);
  Box3D tall = Cube(0);
  tall.size.z() = 2.0;
  EXPECT_NEAR(iou3d(Cube(0), tall), 0.5, 1e-12);
}

TEST(Iou3dTest, PolygonClipping) {
  const std::vector<Eigen::Vector2d> a{{0, 0}, {2, 0}, {2, 2}, {0, 2}};
  const std::vector<Eigen::Vector2d> b{{1, 1}, {3, 1}, {3, 3}, {1, 3}};
  const std::vector<Eigen::Vector2d> diamond{{1, -1}, {3, 1}, {1, 3}, {-1, 1}};
  EXPECT_NEAR(convex_intersection_area(a, b), 1.0, 1e-12);
  EXPECT_NEAR(convex_intersection_area(a, a), 4.0, 1e-12);
  EXPECT_NEAR(convex_intersection_area(a, diamond), 4.0, 1e-12);
  const std::vector<Eigen::Vector2d> far{{5, 5}, {6, 5}, {6, 6}, {5, 6}};
  EXPECT_EQ(convex_intersection_area(a, far), 0.0);
}

TEST(Iou3dTest, SymmetryAndInvariances) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> shift(-50.0, 50.0), turn(-3.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    const Box3D a = testing::random_box(rng, 2.0), b = testing::random_box(rng, 2.0);
    const double v = iou3d(a, b);
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
    EXPECT_NEAR(v, iou3d(b, a), 1e-9);
    const Eigen::Vector3d t(shift(rng), shift(rng), shift(rng));
    Box3D at = a, bt = b;
    at.center += t;
    bt.center += t;
    EXPECT_NEAR(v, iou3d(at, bt), 1e-9);
    // Rotate both boxes about the origin by a common yaw.
    const double phi = turn(rng);
    const Eigen::Matrix3d r = Eigen::AngleAxisd(phi, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    Box3D ar = a, br = b;
    ar.center = r * a.center;
    br.center = r * b.center;
    ar.yaw = normalize_yaw(a.yaw + phi);
    br.yaw = normalize_yaw(b.yaw + phi);
    EXPECT_NEAR(v, iou3d(ar, br), 1e-9);
  }
}

TEST(Iou3dTest, AgreesWithMonteCarlo) {
  std::mt19937_64 rng(2);
  int checked = 0;
  while (checked < 20) {
    const Box3D a = testing::random_box(rng, 1.0), b = testing::random_box(rng, 1.0);
    const double exact = iou3d(a, b);
    if (exact < 0.05) continue;
    EXPECT_NEAR(exact, testing::monte_carlo_iou(a, b, 1000000, rng), 0.01);
    ++checked;
  }
}

TEST(FilterRangeTest, ClosedBounds) {
  const std::vector<Box3D> boxes{Cube(150), Cube(0), Cube(140, 40, 1), Cube(140.001, 0, 0),
                                 Cube(-140, -40, -4), Cube(0, 0, -4.01)};
  const auto kept = filter_range(boxes, EvalRange{});
  ASSERT_EQ(kept.size(), 3u);
  EXPECT_EQ(kept[0].center, Eigen::Vector3d(0, 0, 0));
  EXPECT_EQ(kept[1].center, Eigen::Vector3d(140, 40, 1));
  EXPECT_EQ(kept[2].center, Eigen::Vector3d(-140, -40, -4));
  EXPECT_EQ(iou_threshold(ObjectClass::kCar), 0.7);
  EXPECT_EQ(iou_threshold(ObjectClass::kVan), 0.7);
  EXPECT_EQ(iou_threshold(ObjectClass::kPedestrian), 0.5);
  EXPECT_EQ(iou_threshold(ObjectClass::kCyclist), 0.5);
  EXPECT_EQ(iou_threshold(ObjectClass::kMotorbike), 0.5);
}

TEST(TrainingFilterTest, Examples) {
  const GridConfig g = GridConfig::desk();
  PointCloud cloud;
  for (int i = 0; i < 5; ++i) cloud.points.emplace_back(0.01 * i, 0.0, 0.0);
  const Box3D with_points = {{0, 0, 0}, {0.5, 0.5, 0.5}, 0.0, ObjectClass::kCar, 1.0};
  const Box3D empty = {{1, 1, 0}, {0.1, 0.1, 0.1}, 0.0, ObjectClass::kCar, 1.0};
  const Coord c{40, 40, 4};
  const Box3D with_voxel = {voxel_center(c, g), {0.02, 0.02, 0.02}, 0.0, ObjectClass::kCar, 1.0};
  const SparseVoxelGrid shared(g, {c});
  const std::vector<Box3D> gts{with_points, empty, with_voxel};
  const auto kept = filter_boxes_training(gts, cloud, shared);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].center, with_points.center);
  EXPECT_EQ(kept[1].center, with_voxel.center);
  EXPECT_TRUE(filter_boxes_training(gts, PointCloud{}, SparseVoxelGrid(g)).empty());
}

TEST(TrainingFilterTest, MatchesBruteForceOracle) {
  std::mt19937_64 rng(3);
  const GridConfig g = GridConfig::desk();
  const auto shared = testing::random_grid(rng, g, 400);
  PointCloud cloud;
  std::uniform_real_distribution<double> ux(-1.6, 1.6), uz(-0.8, 0.0);
  for (int i = 0; i < 300; ++i) cloud.points.emplace_back(ux(rng), ux(rng), uz(rng));
  std::vector<Box3D> boxes;
  std::uniform_real_distribution<double> dim(0.02, 0.6);
  for (int i = 0; i < 1000; ++i) {
    Box3D b = testing::random_box(rng, 1.6);
    b.center.z() = uz(rng);
    b.size = Eigen::Vector3d(dim(rng), dim(rng), dim(rng));
    boxes.push_back(b);
  }
  std::vector<Box3D> expect;
  for (const auto& b : boxes) {
    bool hit = false;
    for (const auto& p : cloud.points) hit = hit || testing::inside_box(b, p);
    for (const Coord& c : shared.coords()) hit = hit || testing::inside_box(b, voxel_center(c, g));
    if (hit) expect.push_back(b);
  }
  const auto kept = filter_boxes_training(boxes, cloud, shared);
  ASSERT_EQ(kept.size(), expect.size());
  for (std::size_t i = 0; i < kept.size(); ++i) EXPECT_EQ(kept[i].center, expect[i].center);
  EXPECT_GT(expect.size(), 50u);
  EXPECT_LT(expect.size(), 950u);
}

TEST(MatchTest, ThresholdBoundary) {
  const std::vector<Box3D> gt{Cube(0)};
  const std::vector<Box3D> hit{Cube(OffsetForIou(0.71))};
  const std::vector<Box3D> miss{Cube(OffsetForIou(0.69))};
  EXPECT_NEAR(iou3d(hit[0], gt[0]), 0.71, 1e-12);
  EXPECT_TRUE(match_detections(hit, gt, 0.7).detection_tp[0]);
  EXPECT_FALSE(match_detections(miss, gt, 0.7).detection_tp[0]);
  EXPECT_FALSE(match_detections(miss, gt, 0.7).gt_matched[0]);
}

TEST(MatchTest, SingleMatchPerGroundTruth) {
  const std::vector<Box3D> gt{Cube(0)};
  const std::vector<Box3D> dets{Cube(0.01, 0, 0, 0, 0.4), Cube(0.02, 0, 0, 0, 0.9)};
  const auto m = match_detections(dets, gt, 0.7);
  EXPECT_FALSE(m.detection_tp[0]);
  EXPECT_TRUE(m.detection_tp[1]);
  EXPECT_TRUE(m.gt_matched[0]);
}

TEST(MatchTest, PrefersHighestIouThenLowestIndex) {
  const std::vector<Box3D> gts{Cube(0.1), Cube(0.0), Cube(0.0)};
  const std::vector<Box3D> dets{Cube(0.0, 0, 0, 0, 0.9), Cube(0.0, 0, 0, 0, 0.8)};
  const auto m = match_detections(dets, gts, 0.5);
  EXPECT_EQ(m.gt_matched, (std::vector<bool>{false, true, true}));
}

TEST(AveragePrecisionTest, PerfectAndEmpty) {
  const std::vector<Box3D> gts{Cube(0), Cube(5), Cube(10)};
  const auto perfect = average_precision(gts, gts, ObjectClass::kCar, 0.7);
  EXPECT_TRUE(perfect.defined);
  EXPECT_DOUBLE_EQ(perfect.value, 1.0);
  EXPECT_EQ(average_precision({}, gts, ObjectClass::kCar, 0.7).value, 0.0);
  const auto none = average_precision(gts, {}, ObjectClass::kCar, 0.7);
  EXPECT_FALSE(none.defined);
  EXPECT_TRUE(std::isnan(none.value));
  // Other classes are ignored.
  EXPECT_FALSE(average_precision(gts, gts, ObjectClass::kVan, 0.7).defined);
}

TEST(AveragePrecisionTest, HandComputedCurve) {
  // TP at 0.9, FP at 0.8, TP at 0.7 over 2 GTs: precision 1 up to recall 1/2,
  // 2/3 above, so AP = (20 * 1 + 20 * 2/3) / 40.
  const std::vector<Box3D> gts{Cube(0), Cube(10)};
  const std::vector<Box3D> dets{Cube(0, 0, 0, 0, 0.9), Cube(20, 0, 0, 0, 0.8),
                                Cube(10, 0, 0, 0, 0.7)};
  const auto ap = average_precision(dets, gts, ObjectClass::kCar, 0.7);
  EXPECT_NEAR(ap.value, 5.0 / 6.0, 1e-6);
  EXPECT_EQ(ap.num_gt, 2u);
  EXPECT_EQ(ap.num_det, 3u);
  const std::vector<double> precision{1.0, 0.5, 2.0 / 3.0}, recall{0.5, 0.5, 1.0};
  EXPECT_NEAR(interpolated_ap(precision, recall), 5.0 / 6.0, 1e-12);
}

TEST(AveragePrecisionTest, MultiFramePairsById) {
  const std::vector<FrameBoxes> gts{{"a", {Cube(0)}}, {"b", {Cube(0)}}};
  const std::vector<FrameBoxes> dets{{"b", {Cube(0, 0, 0, 0, 0.8)}}, {"c", {Cube(0, 0, 0, 0, 0.9)}}};
  // FP (frame c, 0.9) then TP (frame b): precision 1/2 at recall 1/2.
  const auto ap = average_precision(dets, gts, ObjectClass::kCar, 0.7);
  EXPECT_NEAR(ap.value, 0.25, 1e-12);
}

struct RandomProblem {
  std::vector<Box3D> dets, gts;
};

RandomProblem MakeProblem(std::mt19937_64& rng) {
  RandomProblem p;
  std::normal_distribution<double> jitter(0.0, 0.25);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  for (int i = 0; i < 15; ++i) {
    Box3D g = testing::random_box(rng, 30.0);
    p.gts.push_back(g);
    if (conf(rng) < 0.8) {
      Box3D d = g;
      d.center += Eigen::Vector3d(jitter(rng), jitter(rng), 0.3 * jitter(rng));
      d.confidence = conf(rng);
      p.dets.push_back(d);
    }
  }
  for (int i = 0; i < 5; ++i) {
    Box3D d = testing::random_box(rng, 30.0);
    d.confidence = conf(rng);
    p.dets.push_back(d);
  }
  return p;
}

TEST(AveragePrecisionTest, MonotoneInThreshold) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = MakeProblem(rng);
    double prev = 1.0;
    for (double t = 0.1; t < 0.96; t += 0.05) {
      const double ap = average_precision(p.dets, p.gts, ObjectClass::kCar, t).value;
      EXPECT_LE(ap, prev + 1e-12);
      prev = ap;
    }
  }
}

TEST(AveragePrecisionTest, InvariantToMonotoneConfidenceMaps) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = MakeProblem(rng);
    const double base = average_precision(p.dets, p.gts, ObjectClass::kCar, 0.5).value;
    for (auto f : {+[](double c) { return c * c * c; }, +[](double c) { return 0.2 + 0.5 * c; },
                   +[](double c) { return std::sqrt(c); }}) {
      auto q = p;
      for (auto& d : q.dets) d.confidence = f(d.confidence);
      EXPECT_EQ(average_precision(q.dets, q.gts, ObjectClass::kCar, 0.5).value, base);
    }
  }
}

TEST(BoxJsonlTest, ParseAndFormat) {
  const std::string text =
      R"({"frame": "000001", "boxes": [{"center": [1,2,3], "size": [4,2,1.5], "yaw": 0.5, "label": "Car", "score": 0.25}]})"
      "\n\n"
      R"({"frame": 7, "boxes": []})"
      "\n";
  const auto frames = parse_box_jsonl(text, "dets.jsonl");
  ASSERT_EQ(frames.size(), 2u);
  EXPECT_EQ(frames[0].frame, "000001");
  EXPECT_EQ(frames[1].frame, "7");
  ASSERT_EQ(frames[0].boxes.size(), 1u);
  EXPECT_EQ(frames[0].boxes[0].confidence, 0.25);
  EXPECT_EQ(frames[0].boxes[0].size, Eigen::Vector3d(4, 2, 1.5));
  const auto again = parse_box_jsonl(format_box_jsonl(frames), "again");
  ASSERT_EQ(again.size(), 2u);
  EXPECT_EQ(again[0].boxes[0].center, frames[0].boxes[0].center);
  EXPECT_EQ(again[0].boxes[0].yaw, frames[0].boxes[0].yaw);
}

TEST(BoxJsonlTest, ErrorsNameTheLine) {
  auto message = [](std::string_view text) -> std::string {
    try {
      parse_box_jsonl(text, "d.jsonl");
    } catch (const ParseError& e) {
      return e.what();
    }
    return "";
  };
  EXPECT_EQ(message("{\"frame\": 1, \"boxes\": []}\n{\"frame\": 2}\n"),
            "d.jsonl:2: /boxes: missing field");
  EXPECT_EQ(message("{\"frame\": 1, \"boxes\": [{\"center\": [0,0,0], \"size\": [1,1,1], "
                    "\"yaw\": 0, \"label\": \"Car\", \"score\": 2}]}"),
            "d.jsonl:1: /boxes/0: box: confidence outside [0, 1]");
  EXPECT_EQ(message("{\"frame\": 1,"), "d.jsonl:1:1:13: syntax error");
}

}  // namespace
}  // namespace s2s
