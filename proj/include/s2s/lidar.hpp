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

// Synthetic LiDAR: uniform-elevation beam fans ray-cast against a ground
// plane (z = 0) and yawed boxes.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Geometry>
#include <json.hpp>

#include "s2s/box.hpp"
#include "s2s/grid.hpp"

namespace s2s {

/// Planar pose: position plus heading about +z.
struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double yaw = 0.0;

  Eigen::Isometry3d transform() const {
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    t.translate(position);
    t.rotate(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()));
    return t;
  }

  friend bool operator==(const Pose&, const Pose&) = default;
};

enum class SensorKind { kRotating, kSolidState };

struct SensorModel {
  std::string name;
  SensorKind kind = SensorKind::kRotating;
  int n_layers = 1;
  double azimuth_fov_deg = 360.0;  // centered on boresight
  double elevation_min_deg = -1.0;
  double elevation_max_deg = 1.0;
  double azimuth_step_deg = 0.2;
  double max_range = 100.0;
  Pose mount;  // relative to the carrying vehicle

  void validate() const;

  /// Layer elevations, evenly spaced over [min, max]. A single layer sits at
  /// the middle of the range.
  std::vector<double> elevation_angles_deg() const;
  /// ceil(fov / step) azimuths starting at -fov / 2.
  std::vector<double> azimuth_angles_deg() const;
  std::size_t ray_count() const;
};

/// HDL64, VLP32 and CUBE, in that order. Elevation limits and ranges follow
/// the public datasheets; beam spacing is uniform.
std::array<SensorModel, 3> sensor_presets();
/// Throws ConfigError for an unknown name.
SensorModel sensor_preset(std::string_view name);

struct SceneBox {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d size = Eigen::Vector3d::Ones();
  double yaw = 0.0;
  ObjectClass label = ObjectClass::kCar;

  Box3D as_box() const { return {center, size, normalize_yaw(yaw), label, 1.0}; }
  friend bool operator==(const SceneBox&, const SceneBox&) = default;
};

/// A connected vehicle. `box` is the index of its own body in Scene::boxes,
/// which its sensor ignores.
struct Actor {
  std::string id;
  Pose pose;
  std::optional<std::size_t> box;
  std::optional<std::string> sensor;

  friend bool operator==(const Actor&, const Actor&) = default;
};

struct Scene {
  std::vector<SceneBox> boxes;
  std::vector<Actor> actors;

  void validate() const;
  /// Throws ConfigError for an unknown id.
  const Actor& actor(std::string_view id) const;

  friend bool operator==(const Scene&, const Scene&) = default;
};

/// Scene JSON:
///   { "boxes":  [{"center": [x,y,z], "size": [l,w,h], "yaw": rad, "label": "Car"}],
///     "actors": [{"id": "cav0", "pose": [x,y,z,yaw], "box": 0, "sensor": "HDL64"}] }
/// `boxes`, `actors`, `yaw`, `box` and `sensor` are optional.
Scene parse_scene(const nlohmann::json& doc, const std::string& source = "scene");
Scene parse_scene_text(std::string_view text, const std::string& source = "scene");
Scene load_scene(const std::string& path);
nlohmann::json scene_to_json(const Scene& scene);

struct CastOptions {
  std::uint64_t seed = 0;
  double range_noise_sigma = 0.0;  // meters, Gaussian
  std::optional<std::size_t> exclude_box;
};

/// One ray per (layer, azimuth) pair; the nearest ground or box hit within
/// max_range becomes a point in the sensor frame. `vehicle_pose` is composed
/// with the sensor's mount pose.
PointCloud cast_rays(const SensorModel& model, const Pose& vehicle_pose, const Scene& scene,
                     const CastOptions& options = {});

/// World pose of a sensor carried at `vehicle_pose`.
inline Eigen::Isometry3d sensor_to_world(const SensorModel& model, const Pose& vehicle_pose) {
  return vehicle_pose.transform() * model.mount.transform();
}

PointCloud transform_cloud(const PointCloud& cloud, const Eigen::Isometry3d& t);

}  // namespace s2s
