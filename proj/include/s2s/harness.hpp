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

// Collective-perception scenario runner: per-vehicle sensing, grid exchange
// through the wire codec, fusion at the ego vehicle, and reporting.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "s2s/eval.hpp"
#include "s2s/grid.hpp"
#include "s2s/lidar.hpp"
#include "s2s/s2snet.hpp"

namespace s2s {

struct SensorAssignment {
  enum class Policy { kFixed, kUniform, kRandom };

  Policy policy = Policy::kUniform;
  std::string sensor = "HDL64";                // kUniform
  std::map<std::string, std::string> per_cav;  // kFixed; falls back to the actor's sensor
  std::uint64_t seed = 0;                      // kRandom

  static SensorAssignment uniform(std::string sensor);
  static SensorAssignment random(std::uint64_t seed);
  static SensorAssignment fixed(std::map<std::string, std::string> per_cav);
};

/// Maps each CAV id to a preset name. The random policy draws uniformly over
/// the three presets in sorted-id order, so the result does not depend on the
/// order of `cav_ids`. Throws ConfigError for an unknown preset or a fixed
/// policy without an entry for some CAV.
std::map<std::string, std::string> assign_sensors(std::span<const std::string> cav_ids,
                                                  const SensorAssignment& policy,
                                                  const Scene* scene = nullptr);

struct Scenario {
  Scene scene;
  std::string ego;
  SensorAssignment assignment;
  GridConfig grid = GridConfig::full_scale();
  EvalRange crop;  // ego frame
  int frames = 1;
  std::uint64_t seed = 0;
  double range_noise_sigma = 0.0;

  void validate() const;
};

/// Scenario JSON:
///   { "scene": {...} | "scene_file": "relative/or/absolute.json",
///     "ego": "cav0",
///     "assignment": {"policy": "uniform", "sensor": "HDL64"}
///                 | {"policy": "random", "seed": 7}
///                 | {"policy": "fixed", "sensors": {"cav0": "HDL64"}},
///     "grid": {"origin": [..], "voxel_size": [..], "extent": [..]} | "full" | "desk",
///     "crop": {"min": [..], "max": [..]},
///     "frames": 1, "seed": 0, "range_noise_sigma": 0.0 }
/// Only `scene`/`scene_file` and `ego` are required. `scene_file` is resolved
/// against `base_dir`.
Scenario parse_scenario(const nlohmann::json& doc, const std::string& source,
                        const std::string& base_dir = ".");
Scenario load_scenario(const std::string& path);

/// Jaccard index |A n B| / |A u B|; 1 when both are empty.
double domain_overlap(const SparseVoxelGrid& a, const SparseVoxelGrid& b);

struct CavReport {
  std::string id;
  std::string sensor;
  std::size_t points = 0;  // after cropping
  std::size_t voxels = 0;
  std::size_t wire_bytes = 0;
};

struct PairOverlap {
  std::string a, b;
  double overlap = 0.0;
};

struct FrameReport {
  int frame = 0;
  std::vector<CavReport> cavs;  // scene actor order
  std::size_t ego_voxels = 0;
  std::size_t collective_voxels = 0;
  std::size_t fused_voxels = 0;  // |ego u collective| at input resolution
  std::vector<PairOverlap> overlaps;
  BevFeatureMap<float> bev;
  double elapsed_ms = 0.0;

  // Populated only when RunOptions::keep_data is set.
  std::map<std::string, PointCloud> clouds;  // ego frame, cropped
  std::map<std::string, SparseVoxelGrid> grids;
};

struct ScenarioReport {
  std::string ego;
  std::map<std::string, std::string> assignment;
  std::vector<FrameReport> frames;
};

struct RunOptions {
  int threads = 1;  // cap on concurrent per-CAV sensing
  bool keep_data = false;
};

/// Per frame: ray-cast every CAV, move points to the ego sensor frame, crop,
/// voxelize, round-trip through the wire codec, merge the senders' grids and
/// run the fused forward pass.
ScenarioReport run_scenario(const Scenario& scenario, const ModelWeights<float>& weights,
                            const RunOptions& options = {});

nlohmann::json report_to_json(const ScenarioReport& report, bool include_timing = false);
/// One row per (frame, CAV).
std::string report_to_csv(const ScenarioReport& report);

/// FNV-1a over the raw float bytes of a BEV map; used as a compact fingerprint
/// in reports.
std::uint64_t bev_checksum(const BevFeatureMap<float>& bev);

}  // namespace s2s
