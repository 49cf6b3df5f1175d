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

#include "s2s/lidar.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "s2s/detail/json_fields.hpp"
#include "s2s/errors.hpp"

namespace s2s {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kMinHitDistance = 1e-6;

// Entry distance of the ray into a yawed box, if it enters from outside.
std::optional<double> intersect_box(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                                    const SceneBox& box) {
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  const Eigen::Vector3d d0 = origin - box.center;
  const Eigen::Vector3d o(c * d0.x() + s * d0.y(), -s * d0.x() + c * d0.y(), d0.z());
  const Eigen::Vector3d v(c * dir.x() + s * dir.y(), -s * dir.x() + c * dir.y(), dir.z());
  const Eigen::Vector3d half = 0.5 * box.size;

  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(v[a]) < 1e-15) {
      if (std::abs(o[a]) > half[a]) return std::nullopt;
      continue;
    }
    double t0 = (-half[a] - o[a]) / v[a];
    double t1 = (half[a] - o[a]) / v[a];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return std::nullopt;
  }
  if (t_near <= kMinHitDistance) return std::nullopt;  // origin inside or box behind
  return t_near;
}

}  // namespace

void SensorModel::validate() const {
  if (n_layers < 1) throw ConfigError("sensor " + name + ": n_layers must be >= 1");
  if (!(azimuth_fov_deg > 0.0 && azimuth_fov_deg <= 360.0)) {
    throw ConfigError("sensor " + name + ": azimuth fov must lie in (0, 360]");
  }
  if (!(elevation_max_deg > elevation_min_deg) || elevation_min_deg < -90.0 ||
      elevation_max_deg > 90.0) {
    throw ConfigError("sensor " + name + ": elevation fov must be a non-empty range in [-90, 90]");
  }
  if (!(azimuth_step_deg > 0.0)) throw ConfigError("sensor " + name + ": azimuth step must be > 0");
  if (!(max_range > 0.0)) throw ConfigError("sensor " + name + ": max range must be > 0");
}

std::vector<double> SensorModel::elevation_angles_deg() const {
  std::vector<double> out(static_cast<std::size_t>(n_layers));
  if (n_layers == 1) {
    out[0] = 0.5 * (elevation_min_deg + elevation_max_deg);
    return out;
  }
  const double step = (elevation_max_deg - elevation_min_deg) / (n_layers - 1);
  for (int i = 0; i < n_layers; ++i) out[i] = elevation_min_deg + i * step;
  out.back() = elevation_max_deg;
  return out;
}

std::vector<double> SensorModel::azimuth_angles_deg() const {
  const auto n = static_cast<std::size_t>(std::ceil(azimuth_fov_deg / azimuth_step_deg - 1e-9));
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = -0.5 * azimuth_fov_deg + j * azimuth_step_deg;
  return out;
}

std::size_t SensorModel::ray_count() const {
  return static_cast<std::size_t>(n_layers) * azimuth_angles_deg().size();
}

std::array<SensorModel, 3> sensor_presets() {
  const Pose roof{{0.0, 0.0, 1.9}, 0.0};
  SensorModel hdl64{"HDL64", SensorKind::kRotating, 64, 360.0, -24.9, 2.0, 0.2, 120.0, roof};
  SensorModel vlp32{"VLP32", SensorKind::kRotating, 32, 360.0, -25.0, 15.0, 0.2, 200.0, roof};
  SensorModel cube{"CUBE", SensorKind::kSolidState, 52, 70.0, -15.0, 15.0, 0.4, 250.0, roof};
  return {hdl64, vlp32, cube};
}

SensorModel sensor_preset(std::string_view name) {
  for (const auto& m : sensor_presets()) {
    if (m.name == name) return m;
  }
  throw ConfigError("unknown sensor preset '" + std::string(name) + "'");
}

void Scene::validate() const {
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (!(boxes[i].size.array() > 0.0).all()) {
      throw ConfigError("scene: box " + std::to_string(i) + " has non-positive size");
    }
  }
  for (std::size_t i = 0; i < actors.size(); ++i) {
    const Actor& a = actors[i];
    if (a.id.empty()) throw ConfigError("scene: actor " + std::to_string(i) + " has an empty id");
    if (a.box && *a.box >= boxes.size()) {
      throw ConfigError("scene: actor " + a.id + " references missing box " +
                        std::to_string(*a.box));
    }
    if (a.sensor) sensor_preset(*a.sensor);
    for (std::size_t j = 0; j < i; ++j) {
      if (actors[j].id == a.id) throw ConfigError("scene: duplicate actor id " + a.id);
    }
  }
}

const Actor& Scene::actor(std::string_view id) const {
  for (const auto& a : actors) {
    if (a.id == id) return a;
  }
  throw ConfigError("scene: unknown actor '" + std::string(id) + "'");
}

Scene parse_scene(const nlohmann::json& doc, const std::string& source) {
  const detail::JsonContext ctx(source);
  if (!doc.is_object()) ctx.fail("", "expected an object");
  Scene scene;
  if (auto it = doc.find("boxes"); it != doc.end()) {
    if (!it->is_array()) ctx.fail("/boxes", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& b = (*it)[i];
      const std::string path = "/boxes/" + std::to_string(i);
      SceneBox box;
      box.center = ctx.vec3(ctx.require(b, path, "center"), path + "/center");
      box.size = ctx.vec3(ctx.require(b, path, "size"), path + "/size");
      if (!(box.size.array() > 0.0).all()) ctx.fail(path + "/size", "sizes must be > 0");
      if (b.contains("yaw")) box.yaw = ctx.number(b["yaw"], path + "/yaw");
      const std::string label = ctx.string(ctx.require(b, path, "label"), path + "/label");
      const auto cls = parse_class(label);
      if (!cls) ctx.fail(path + "/label", "unknown class '" + label + "'");
      box.label = *cls;
      scene.boxes.push_back(box);
    }
  }
  if (auto it = doc.find("actors"); it != doc.end()) {
    if (!it->is_array()) ctx.fail("/actors", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& a = (*it)[i];
      const std::string path = "/actors/" + std::to_string(i);
      Actor actor;
      actor.id = ctx.string(ctx.require(a, path, "id"), path + "/id");
      if (actor.id.empty()) ctx.fail(path + "/id", "must not be empty");
      const Eigen::Vector4d pose = ctx.vec4(ctx.require(a, path, "pose"), path + "/pose");
      actor.pose = {pose.head<3>(), pose[3]};
      if (a.contains("box")) {
        actor.box = ctx.uint(a["box"], path + "/box");
        if (*actor.box >= scene.boxes.size()) ctx.fail(path + "/box", "no such box");
      }
      if (a.contains("sensor")) {
        actor.sensor = ctx.string(a["sensor"], path + "/sensor");
        try {
          sensor_preset(*actor.sensor);
        } catch (const ConfigError& e) {
          ctx.fail(path + "/sensor", e.what());
        }
      }
      for (const auto& prev : scene.actors) {
        if (prev.id == actor.id) ctx.fail(path + "/id", "duplicate actor id '" + actor.id + "'");
      }
      scene.actors.push_back(std::move(actor));
    }
  }
  return scene;
}

Scene parse_scene_text(std::string_view text, const std::string& source) {
  const detail::JsonContext ctx(source);
  return parse_scene(ctx.parse(text), source);
}

Scene load_scene(const std::string& path) {
  return parse_scene_text(detail::read_text_file(path), path);
}

nlohmann::json scene_to_json(const Scene& scene) {
  nlohmann::json boxes = nlohmann::json::array();
  for (const auto& b : scene.boxes) {
    boxes.push_back({{"center", {b.center.x(), b.center.y(), b.center.z()}},
                     {"size", {b.size.x(), b.size.y(), b.size.z()}},
                     {"yaw", b.yaw},
                     {"label", class_name(b.label)}});
  }
  nlohmann::json actors = nlohmann::json::array();
  for (const auto& a : scene.actors) {
    nlohmann::json j = {
        {"id", a.id},
        {"pose", {a.pose.position.x(), a.pose.position.y(), a.pose.position.z(), a.pose.yaw}}};
    if (a.box) j["box"] = *a.box;
    if (a.sensor) j["sensor"] = *a.sensor;
    actors.push_back(std::move(j));
  }
  return {{"boxes", boxes}, {"actors", actors}};
}

PointCloud cast_rays(const SensorModel& model, const Pose& vehicle_pose, const Scene& scene,
                     const CastOptions& options) {
  model.validate();
  const Eigen::Isometry3d to_world = sensor_to_world(model, vehicle_pose);
  const Eigen::Vector3d origin = to_world.translation();
  const Eigen::Matrix3d rot = to_world.linear();

  std::mt19937_64 engine(options.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  const auto elevations = model.elevation_angles_deg();
  const auto azimuths = model.azimuth_angles_deg();
  PointCloud cloud;
  cloud.points.reserve(model.ray_count() / 2);
  for (double el_deg : elevations) {
    const double el = el_deg * kDeg;
    for (double az_deg : azimuths) {
      const double az = az_deg * kDeg;
      const Eigen::Vector3d local_dir(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                                      std::sin(el));
      const Eigen::Vector3d dir = rot * local_dir;

      double best = std::numeric_limits<double>::infinity();
      if (dir.z() < 0.0 && origin.z() > 0.0) best = -origin.z() / dir.z();
      for (std::size_t b = 0; b < scene.boxes.size(); ++b) {
        if (options.exclude_box && *options.exclude_box == b) continue;
        if (auto t = intersect_box(origin, dir, scene.boxes[b]); t && *t < best) best = *t;
      }
      if (!(best <= model.max_range)) continue;
      double range = best;
      if (options.range_noise_sigma > 0.0) {
        range += options.range_noise_sigma * noise(engine);
        if (!(range > 0.0 && range <= model.max_range)) continue;
      }
      cloud.points.push_back(range * local_dir);
    }
  }
  return cloud;
}

PointCloud transform_cloud(const PointCloud& cloud, const Eigen::Isometry3d& t) {
  PointCloud out;
  out.intensity = cloud.intensity;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(t * p);
  return out;
}

}  // namespace s2s
