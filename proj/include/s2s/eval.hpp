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

#pragma once

// 3D detection evaluation: rotated-box IoU, greedy matching, 40-point
// interpolated average precision, range and training-time box filters.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "s2s/box.hpp"
#include "s2s/grid.hpp"

namespace s2s {

/// Axis-aligned evaluation volume in the ego frame, closed on every side.
struct EvalRange {
  Eigen::Vector3d min{-140.0, -40.0, -4.0};
  Eigen::Vector3d max{140.0, 40.0, 1.0};

  void validate() const;
  bool contains(const Eigen::Vector3d& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

/// 0.7 for cars and vans, 0.5 for everything else.
double iou_threshold(ObjectClass cls);

/// Footprint intersection by convex clipping times vertical overlap, over
/// the union volume. Degenerate intersections count as zero.
double iou3d(const Box3D& a, const Box3D& b);

/// Area of the intersection of two convex polygons given counter-clockwise.
double convex_intersection_area(std::span<const Eigen::Vector2d> a,
                                std::span<const Eigen::Vector2d> b);

/// Keeps boxes whose center lies inside `range`.
std::vector<Box3D> filter_range(std::span<const Box3D> boxes, const EvalRange& range);

/// Keeps ground truths holding at least one ego point or at least one shared
/// voxel center. Everything must be expressed in one frame.
std::vector<Box3D> filter_boxes_training(std::span<const Box3D> gts, const PointCloud& ego_cloud,
                                         const SparseVoxelGrid& shared);

struct MatchResult {
  std::vector<bool> detection_tp;  // indexed like the input detections
  std::vector<bool> gt_matched;    // indexed like the input ground truths
};

/// Detections are visited by descending confidence (ties keep input order).
/// Each takes the unmatched ground truth of highest IoU >= threshold, lowest
/// index on ties. Labels are not consulted; pass one class at a time.
MatchResult match_detections(std::span<const Box3D> dets, std::span<const Box3D> gts,
                             double iou_threshold);

struct FrameBoxes {
  std::string frame;
  std::vector<Box3D> boxes;
};

struct ApResult {
  double value = 0.0;  // NaN when undefined
  bool defined = false;  // false when there are no ground truths
  std::size_t num_gt = 0;
  std::size_t num_det = 0;
};

inline constexpr int kRecallPoints = 40;

/// Precision interpolated at recall k/40, k = 1..40, averaged.
double interpolated_ap(std::span<const double> precision, std::span<const double> recall);

/// Per-class AP over frames paired by frame id. Boxes of other classes are
/// ignored. Detection frames without a ground-truth frame count as false
/// positives.
ApResult average_precision(std::span<const FrameBoxes> dets, std::span<const FrameBoxes> gts,
                           ObjectClass cls, double iou_threshold);

/// Single-frame convenience overload.
ApResult average_precision(std::span<const Box3D> dets, std::span<const Box3D> gts,
                           ObjectClass cls, double iou_threshold);

/// JSON lines, one frame per line:
///   {"frame": "000001", "boxes": [{"center": [x,y,z], "size": [l,w,h],
///     "yaw": rad, "label": "Car", "score": 0.93}]}
/// `score` is optional and defaults to 1.
std::vector<FrameBoxes> parse_box_jsonl(std::string_view text, const std::string& source);
std::vector<FrameBoxes> load_box_jsonl(const std::string& path);
std::string format_box_jsonl(std::span<const FrameBoxes> frames);

}  // namespace s2s
