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

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "s2s/detail/json_fields.hpp"
#include "s2s/errors.hpp"

namespace s2s {
namespace {

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

double polygon_area(const std::vector<Eigen::Vector2d>& poly) {
  double area = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    area += cross(poly[i], poly[(i + 1) % poly.size()]);
  }
  return 0.5 * area;
}

}  // namespace

void EvalRange::validate() const {
  if (!(min.array() < max.array()).all()) throw ConfigError("eval range: min must be < max");
}

double iou_threshold(ObjectClass cls) {
  return cls == ObjectClass::kCar || cls == ObjectClass::kVan ? 0.7 : 0.5;
}

double convex_intersection_area(std::span<const Eigen::Vector2d> a,
                                std::span<const Eigen::Vector2d> b) {
  // Sutherland-Hodgman: clip `a` by every edge of `b`.
  std::vector<Eigen::Vector2d> poly(a.begin(), a.end());
  for (std::size_t e = 0; e < b.size() && !poly.empty(); ++e) {
    const Eigen::Vector2d& p0 = b[e];
    const Eigen::Vector2d& p1 = b[(e + 1) % b.size()];
    const Eigen::Vector2d edge = p1 - p0;
    auto side = [&](const Eigen::Vector2d& q) { return cross(edge, q - p0); };
    std::vector<Eigen::Vector2d> next;
    next.reserve(poly.size() + 2);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Eigen::Vector2d& cur = poly[i];
      const Eigen::Vector2d& nxt = poly[(i + 1) % poly.size()];
      const double sc = side(cur);
      const double sn = side(nxt);
      if (sc >= 0.0) next.push_back(cur);
      if ((sc >= 0.0) != (sn >= 0.0)) {
        const double t = sc / (sc - sn);
        next.push_back(cur + t * (nxt - cur));
      }
    }
    poly = std::move(next);
  }
  if (poly.size() < 3) return 0.0;
  return std::max(0.0, polygon_area(poly));
}

double iou3d(const Box3D& a, const Box3D& b) {
  const auto ca = a.bev_corners();
  const auto cb = b.bev_corners();
  const double area = convex_intersection_area(ca, cb);
  const double top = std::min(a.center.z() + 0.5 * a.size.z(), b.center.z() + 0.5 * b.size.z());
  const double bottom =
      std::max(a.center.z() - 0.5 * a.size.z(), b.center.z() - 0.5 * b.size.z());
  const double inter = area * std::max(0.0, top - bottom);
  const double uni = a.volume() + b.volume() - inter;
  if (!(uni > 0.0) || !std::isfinite(inter)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<Box3D> filter_range(std::span<const Box3D> boxes, const EvalRange& range) {
  std::vector<Box3D> out;
  std::copy_if(boxes.begin(), boxes.end(), std::back_inserter(out),
               [&](const Box3D& b) { return range.contains(b.center); });
  return out;
}

std::vector<Box3D> filter_boxes_training(std::span<const Box3D> gts, const PointCloud& ego_cloud,
                                         const SparseVoxelGrid& shared) {
  std::vector<Eigen::Vector3d> centers;
  centers.reserve(shared.size());
  for (const Coord& c : shared.coords()) centers.push_back(voxel_center(c, shared.config()));

  std::vector<Box3D> out;
  for (const Box3D& box : gts) {
    const auto inside = [&](const Eigen::Vector3d& p) { return box.contains(p); };
    if (std::any_of(ego_cloud.points.begin(), ego_cloud.points.end(), inside) ||
        std::any_of(centers.begin(), centers.end(), inside)) {
      out.push_back(box);
    }
  }
  return out;
}

MatchResult match_detections(std::span<const Box3D> dets, std::span<const Box3D> gts,
                             double iou_threshold) {
  MatchResult m;
  m.detection_tp.assign(dets.size(), false);
  m.gt_matched.assign(gts.size(), false);
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].confidence > dets[b].confidence;
  });
  for (std::size_t d : order) {
    double best = -1.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (m.gt_matched[g]) continue;
      const double iou = iou3d(dets[d], gts[g]);
      if (iou >= iou_threshold && iou > best) {
        best = iou;
        best_gt = g;
      }
    }
    if (best_gt < gts.size()) {
      m.gt_matched[best_gt] = true;
      m.detection_tp[d] = true;
    }
  }
  return m;
}

double interpolated_ap(std::span<const double> precision, std::span<const double> recall) {
  double sum = 0.0;
  for (int k = 1; k <= kRecallPoints; ++k) {
    const double r = static_cast<double>(k) / kRecallPoints;
    double best = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i) {
      // Small slack so recall 20/40 reached as 1/2 is not lost to rounding.
      if (recall[i] >= r - 1e-12) best = std::max(best, precision[i]);
    }
    sum += best;
  }
  return sum / kRecallPoints;
}

ApResult average_precision(std::span<const FrameBoxes> dets, std::span<const FrameBoxes> gts,
                           ObjectClass cls, double iou_threshold) {
  auto of_class = [&](const std::vector<Box3D>& boxes) {
    std::vector<Box3D> out;
    std::copy_if(boxes.begin(), boxes.end(), std::back_inserter(out),
                 [&](const Box3D& b) { return b.label == cls; });
    return out;
  };

  std::map<std::string, std::vector<Box3D>> gt_by_frame;
  ApResult result;
  for (const auto& f : gts) {
    auto boxes = of_class(f.boxes);
    result.num_gt += boxes.size();
    auto& slot = gt_by_frame[f.frame];
    slot.insert(slot.end(), boxes.begin(), boxes.end());
  }

  struct Scored {
    double confidence;
    bool tp;
  };
  std::vector<Scored> scored;
  std::map<std::string, std::vector<Box3D>> det_by_frame;
  for (const auto& f : dets) {
    auto boxes = of_class(f.boxes);
    auto& slot = det_by_frame[f.frame];
    slot.insert(slot.end(), boxes.begin(), boxes.end());
  }
  for (const auto& [frame, boxes] : det_by_frame) {
    const auto it = gt_by_frame.find(frame);
    const std::vector<Box3D> none;
    const auto& frame_gts = it == gt_by_frame.end() ? none : it->second;
    const MatchResult m = match_detections(boxes, frame_gts, iou_threshold);
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      scored.push_back({boxes[i].confidence, m.detection_tp[i]});
    }
  }
  result.num_det = scored.size();

  if (result.num_gt == 0) {
    result.value = std::numeric_limits<double>::quiet_NaN();
    result.defined = false;
    return result;
  }
  result.defined = true;
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Scored& a, const Scored& b) { return a.confidence > b.confidence; });
  std::vector<double> precision, recall;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    tp += scored[i].tp ? 1 : 0;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(result.num_gt));
  }
  result.value = interpolated_ap(precision, recall);
  return result;
}

ApResult average_precision(std::span<const Box3D> dets, std::span<const Box3D> gts,
                           ObjectClass cls, double iou_threshold) {
  const FrameBoxes d{"0", {dets.begin(), dets.end()}};
  const FrameBoxes g{"0", {gts.begin(), gts.end()}};
  return average_precision(std::span(&d, 1), std::span(&g, 1), cls, iou_threshold);
}

std::vector<FrameBoxes> parse_box_jsonl(std::string_view text, const std::string& source) {
  std::vector<FrameBoxes> frames;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    const detail::JsonContext ctx(source + ":" + std::to_string(lineno));
    const auto doc = ctx.parse(line);
    FrameBoxes f;
    const auto& frame = ctx.require(doc, "", "frame");
    f.frame = frame.is_number_integer() ? std::to_string(frame.get<std::int64_t>())
                                        : ctx.string(frame, "/frame");
    const auto& boxes = ctx.require(doc, "", "boxes");
    if (!boxes.is_array()) ctx.fail("/boxes", "expected an array");
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      const auto& b = boxes[i];
      const std::string path = "/boxes/" + std::to_string(i);
      Box3D box;
      box.center = ctx.vec3(ctx.require(b, path, "center"), path + "/center");
      box.size = ctx.vec3(ctx.require(b, path, "size"), path + "/size");
      box.yaw = normalize_yaw(ctx.number(ctx.require(b, path, "yaw"), path + "/yaw"));
      const std::string label = ctx.string(ctx.require(b, path, "label"), path + "/label");
      const auto cls = parse_class(label);
      if (!cls) ctx.fail(path + "/label", "unknown class '" + label + "'");
      box.label = *cls;
      if (b.contains("score")) box.confidence = ctx.number(b["score"], path + "/score");
      try {
        box.validate();
      } catch (const ConfigError& e) {
        ctx.fail(path, e.what());
      }
      f.boxes.push_back(box);
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

std::vector<FrameBoxes> load_box_jsonl(const std::string& path) {
  return parse_box_jsonl(detail::read_text_file(path), path);
}

std::string format_box_jsonl(std::span<const FrameBoxes> frames) {
  std::string out;
  for (const auto& f : frames) {
    nlohmann::json boxes = nlohmann::json::array();
    for (const auto& b : f.boxes) {
      boxes.push_back({{"center", {b.center.x(), b.center.y(), b.center.z()}},
                       {"size", {b.size.x(), b.size.y(), b.size.z()}},
                       {"yaw", b.yaw},
                       {"label", class_name(b.label)},
                       {"score", b.confidence}});
    }
    out += nlohmann::json{{"frame", f.frame}, {"boxes", boxes}}.dump();
    out += '\n';
  }
  return out;
}

}  // namespace s2s
