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

#include "s2s/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <filesystem>
#include <iomanip>
#include <random>
#include <sstream>
#include <thread>

#include "s2s/detail/json_fields.hpp"
#include "s2s/errors.hpp"
#include "s2s/wire.hpp"

namespace s2s {
namespace {

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a(std::string_view s) {
  return fnv1a(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Noise seed keyed on the CAV id rather than its position in the actor list.
std::uint64_t cav_seed(std::uint64_t scenario_seed, int frame, std::string_view id) {
  return splitmix64(scenario_seed ^ splitmix64(fnv1a(id) + static_cast<std::uint64_t>(frame)));
}

struct CavData {
  PointCloud cloud;
  SparseVoxelGrid grid;
  std::size_t wire_bytes = 0;
};

CavData sense(const Scenario& s, const Actor& actor, const SensorModel& model,
              const Eigen::Isometry3d& world_to_ego, int frame) {
  CastOptions opts;
  opts.seed = cav_seed(s.seed, frame, actor.id);
  opts.range_noise_sigma = s.range_noise_sigma;
  opts.exclude_box = actor.box;
  const PointCloud raw = cast_rays(model, actor.pose, s.scene, opts);
  const PointCloud in_ego = transform_cloud(raw, world_to_ego * sensor_to_world(model, actor.pose));

  CavData out;
  out.cloud.points.reserve(in_ego.size());
  for (const auto& p : in_ego.points) {
    if (s.crop.contains(p)) out.cloud.points.push_back(p);
  }
  const SparseVoxelGrid local = voxelize(out.cloud, s.grid);
  const auto bytes = wire::encode(local);
  out.wire_bytes = bytes.size();
  out.grid = wire::decode(bytes);
  return out;
}

}  // namespace

SensorAssignment SensorAssignment::uniform(std::string sensor) {
  SensorAssignment a;
  a.policy = Policy::kUniform;
  a.sensor = std::move(sensor);
  return a;
}

SensorAssignment SensorAssignment::random(std::uint64_t seed) {
  SensorAssignment a;
  a.policy = Policy::kRandom;
  a.seed = seed;
  return a;
}

SensorAssignment SensorAssignment::fixed(std::map<std::string, std::string> per_cav) {
  SensorAssignment a;
  a.policy = Policy::kFixed;
  a.per_cav = std::move(per_cav);
  return a;
}

std::map<std::string, std::string> assign_sensors(std::span<const std::string> cav_ids,
                                                  const SensorAssignment& policy,
                                                  const Scene* scene) {
  std::vector<std::string> ids(cav_ids.begin(), cav_ids.end());
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw ConfigError("assign_sensors: duplicate CAV id");
  }
  const auto presets = sensor_presets();
  std::map<std::string, std::string> out;
  switch (policy.policy) {
    case SensorAssignment::Policy::kUniform:
      sensor_preset(policy.sensor);
      for (const auto& id : ids) out[id] = policy.sensor;
      break;
    case SensorAssignment::Policy::kFixed:
      for (const auto& id : ids) {
        if (auto it = policy.per_cav.find(id); it != policy.per_cav.end()) {
          out[id] = it->second;
        } else if (scene != nullptr && scene->actor(id).sensor) {
          out[id] = *scene->actor(id).sensor;
        } else {
          throw ConfigError("assign_sensors: no sensor given for CAV '" + id + "'");
        }
        sensor_preset(out[id]);
      }
      break;
    case SensorAssignment::Policy::kRandom: {
      std::mt19937_64 engine(policy.seed);
      // Rejection sampling keeps the draw exactly uniform over the presets.
      const std::uint64_t n = presets.size();
      const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % n;
      for (const auto& id : ids) {
        std::uint64_t x;
        do {
          x = engine();
        } while (x >= limit);
        out[id] = presets[x % n].name;
      }
      break;
    }
  }
  return out;
}

void Scenario::validate() const {
  scene.validate();
  scene.actor(ego);
  grid.validate();
  crop.validate();
  if (frames < 1) throw ConfigError("scenario: frames must be >= 1");
  if (range_noise_sigma < 0.0) throw ConfigError("scenario: negative range noise");
}

Scenario parse_scenario(const nlohmann::json& doc, const std::string& source,
                        const std::string& base_dir) {
  const detail::JsonContext ctx(source);
  if (!doc.is_object()) ctx.fail("", "expected an object");
  Scenario s;
  if (auto it = doc.find("scene"); it != doc.end()) {
    s.scene = parse_scene(*it, source + "#/scene");
  } else if (auto f = doc.find("scene_file"); f != doc.end()) {
    std::filesystem::path p = ctx.string(*f, "/scene_file");
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    s.scene = load_scene(p.string());
  } else {
    ctx.fail("/scene", "missing field (or /scene_file)");
  }
  s.ego = ctx.string(ctx.require(doc, "", "ego"), "/ego");

  if (auto it = doc.find("assignment"); it != doc.end()) {
    const std::string policy = ctx.string(ctx.require(*it, "/assignment", "policy"),
                                          "/assignment/policy");
    if (policy == "uniform") {
      s.assignment = SensorAssignment::uniform(
          ctx.string(ctx.require(*it, "/assignment", "sensor"), "/assignment/sensor"));
    } else if (policy == "random") {
      s.assignment = SensorAssignment::random(
          it->contains("seed") ? ctx.uint((*it)["seed"], "/assignment/seed") : 0);
    } else if (policy == "fixed") {
      std::map<std::string, std::string> per_cav;
      if (it->contains("sensors")) {
        const auto& m = (*it)["sensors"];
        if (!m.is_object()) ctx.fail("/assignment/sensors", "expected an object");
        for (const auto& [k, v] : m.items()) {
          per_cav[k] = ctx.string(v, "/assignment/sensors/" + k);
        }
      }
      s.assignment = SensorAssignment::fixed(std::move(per_cav));
    } else {
      ctx.fail("/assignment/policy", "expected one of uniform, random, fixed");
    }
  }

  if (auto it = doc.find("grid"); it != doc.end()) {
    if (it->is_string()) {
      const std::string name = it->get<std::string>();
      if (name == "full") {
        s.grid = GridConfig::full_scale();
      } else if (name == "desk") {
        s.grid = GridConfig::desk();
      } else {
        ctx.fail("/grid", "expected \"full\", \"desk\" or an object");
      }
    } else {
      const Eigen::Vector3d origin = ctx.vec3(ctx.require(*it, "/grid", "origin"), "/grid/origin");
      const Eigen::Vector3d voxel =
          ctx.vec3(ctx.require(*it, "/grid", "voxel_size"), "/grid/voxel_size");
      const Eigen::Vector3d extent = ctx.vec3(ctx.require(*it, "/grid", "extent"), "/grid/extent");
      try {
        s.grid = GridConfig::from_extent(origin, extent, voxel);
      } catch (const ConfigError& e) {
        ctx.fail("/grid", e.what());
      }
    }
  }
  if (auto it = doc.find("crop"); it != doc.end()) {
    s.crop.min = ctx.vec3(ctx.require(*it, "/crop", "min"), "/crop/min");
    s.crop.max = ctx.vec3(ctx.require(*it, "/crop", "max"), "/crop/max");
  }
  if (doc.contains("frames")) s.frames = static_cast<int>(ctx.uint(doc["frames"], "/frames"));
  if (doc.contains("seed")) s.seed = ctx.uint(doc["seed"], "/seed");
  if (doc.contains("range_noise_sigma")) {
    s.range_noise_sigma = ctx.number(doc["range_noise_sigma"], "/range_noise_sigma");
  }
  try {
    s.validate();
  } catch (const ConfigError& e) {
    ctx.fail("", e.what());
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  const detail::JsonContext ctx(path);
  const auto doc = ctx.parse(detail::read_text_file(path));
  const auto parent = std::filesystem::path(path).parent_path();
  return parse_scenario(doc, path, parent.empty() ? "." : parent.string());
}

double domain_overlap(const SparseVoxelGrid& a, const SparseVoxelGrid& b) {
  if (!(a.config() == b.config())) {
    throw IncompatibleGridError("domain_overlap: grids have different configs");
  }
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  auto ia = a.coords().begin();
  auto ib = b.coords().begin();
  while (ia != a.coords().end() && ib != b.coords().end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  const std::size_t uni = a.size() + b.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

ScenarioReport run_scenario(const Scenario& scenario, const ModelWeights<float>& weights,
                            const RunOptions& options) {
  scenario.validate();
  weights.validate();
  const Scene& scene = scenario.scene;

  std::vector<std::string> ids;
  for (const auto& a : scene.actors) ids.push_back(a.id);
  ScenarioReport report;
  report.ego = scenario.ego;
  report.assignment = assign_sensors(ids, scenario.assignment, &scene);

  const Actor& ego = scene.actor(scenario.ego);
  const SensorModel ego_model = sensor_preset(report.assignment.at(ego.id));
  const Eigen::Isometry3d world_to_ego = sensor_to_world(ego_model, ego.pose).inverse();

  for (int frame = 0; frame < scenario.frames; ++frame) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<CavData> data(scene.actors.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < scene.actors.size(); i = next++) {
        const Actor& a = scene.actors[i];
        data[i] = sense(scenario, a, sensor_preset(report.assignment.at(a.id)), world_to_ego, frame);
      }
    };
    const int n_threads =
        std::clamp(options.threads, 1, static_cast<int>(std::max<std::size_t>(1, data.size())));
    if (n_threads == 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }

    FrameReport fr;
    fr.frame = frame;
    std::vector<SparseVoxelGrid> senders;
    const SparseVoxelGrid* ego_grid = nullptr;
    for (std::size_t i = 0; i < scene.actors.size(); ++i) {
      const Actor& a = scene.actors[i];
      fr.cavs.push_back({a.id, report.assignment.at(a.id), data[i].cloud.size(),
                         data[i].grid.size(), data[i].wire_bytes});
      if (a.id == ego.id) {
        ego_grid = &data[i].grid;
      } else {
        senders.push_back(data[i].grid);
      }
    }
    const SparseVoxelGrid collective =
        senders.empty() ? SparseVoxelGrid(scenario.grid) : merge_grids(senders);
    const std::array<SparseVoxelGrid, 2> both{*ego_grid, collective};
    fr.ego_voxels = ego_grid->size();
    fr.collective_voxels = collective.size();
    fr.fused_voxels = merge_grids(both).size();

    for (std::size_t i = 0; i < data.size(); ++i) {
      for (std::size_t j = i + 1; j < data.size(); ++j) {
        fr.overlaps.push_back({scene.actors[i].id, scene.actors[j].id,
                               domain_overlap(data[i].grid, data[j].grid)});
      }
    }
    fr.bev = forward(*ego_grid, collective, weights);
    fr.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (options.keep_data) {
      for (std::size_t i = 0; i < data.size(); ++i) {
        fr.clouds[scene.actors[i].id] = std::move(data[i].cloud);
        fr.grids[scene.actors[i].id] = std::move(data[i].grid);
      }
    }
    report.frames.push_back(std::move(fr));
  }
  return report;
}

std::uint64_t bev_checksum(const BevFeatureMap<float>& bev) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Eigen::Index i = 0; i < bev.data.rows(); ++i) {
    for (Eigen::Index j = 0; j < bev.data.cols(); ++j) {
      const auto bits = std::bit_cast<std::array<std::uint8_t, 4>>(bev.data(i, j));
      h = fnv1a(bits, h);
    }
  }
  return h;
}

nlohmann::json report_to_json(const ScenarioReport& report, bool include_timing) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : report.frames) {
    nlohmann::json cavs = nlohmann::json::array();
    for (const auto& c : f.cavs) {
      cavs.push_back({{"id", c.id},
                      {"sensor", c.sensor},
                      {"points", c.points},
                      {"voxels", c.voxels},
                      {"wire_bytes", c.wire_bytes}});
    }
    nlohmann::json overlaps = nlohmann::json::array();
    for (const auto& o : f.overlaps) {
      overlaps.push_back({{"a", o.a}, {"b", o.b}, {"overlap", o.overlap}});
    }
    std::ostringstream checksum;
    checksum << std::hex << std::setw(16) << std::setfill('0') << bev_checksum(f.bev);
    const auto nonzero_cells = (f.bev.data.array() != 0.0f).rowwise().any().count();
    nlohmann::json frame = {{"frame", f.frame},
                            {"cavs", cavs},
                            {"ego_voxels", f.ego_voxels},
                            {"collective_voxels", f.collective_voxels},
                            {"fused_voxels", f.fused_voxels},
                            {"overlaps", overlaps},
                            {"bev",
                             {{"nx", f.bev.nx},
                              {"ny", f.bev.ny},
                              {"channels", f.bev.channels()},
                              {"nonzero_cells", nonzero_cells},
                              {"checksum", checksum.str()}}}};
    if (include_timing) frame["elapsed_ms"] = f.elapsed_ms;
    frames.push_back(std::move(frame));
  }
  return {{"ego", report.ego}, {"assignment", report.assignment}, {"frames", frames}};
}

std::string report_to_csv(const ScenarioReport& report) {
  std::ostringstream out;
  out << "frame,cav,sensor,points,voxels,wire_bytes\n";
  for (const auto& f : report.frames) {
    for (const auto& c : f.cavs) {
      out << f.frame << ',' << c.id << ',' << c.sensor << ',' << c.points << ',' << c.voxels
          << ',' << c.wire_bytes << '\n';
    }
  }
  return out.str();
}

}  // namespace s2s
