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

#include "s2s/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "s2s/detail/bytes.hpp"
#include "s2s/errors.hpp"

namespace s2s {

void PointCloud::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) {
      throw ConfigError("point cloud: non-finite coordinate at index " + std::to_string(i));
    }
  }
  if (!intensity.empty() && intensity.size() != points.size()) {
    throw ConfigError("point cloud: intensity list length differs from point count");
  }
}

PointCloud load_xyz(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  PointCloud cloud;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    double x, y, z;
    if (!(ss >> x >> y >> z)) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected `x y z`");
    }
    cloud.points.emplace_back(x, y, z);
  }
  cloud.validate();
  return cloud;
}

void save_xyz(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << std::setprecision(9);
  for (const auto& p : cloud.points) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
}

PointCloud load_raw(const std::string& path) {
  const auto bytes = detail::read_file_bytes(path);
  auto fail = [&](const std::string& what, std::size_t off) -> void {
    throw ParseError(path + ": " + what + " at byte " + std::to_string(off));
  };
  detail::ByteReader reader(std::span<const std::uint8_t>(bytes), fail);
  const std::uint32_t count = reader.u32("point count");
  if (reader.remaining() != static_cast<std::size_t>(count) * 12) {
    fail("payload size does not match point count " + std::to_string(count), reader.offset());
  }
  PointCloud cloud;
  cloud.points.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const float x = reader.f32("x");
    const float y = reader.f32("y");
    const float z = reader.f32("z");
    cloud.points.emplace_back(x, y, z);
  }
  cloud.validate();
  return cloud;
}

void save_raw(const std::string& path, const PointCloud& cloud) {
  detail::ByteWriter w;
  w.reserve(4 + 12 * cloud.size());
  w.u32(static_cast<std::uint32_t>(cloud.size()));
  for (const auto& p : cloud.points) {
    w.f32(static_cast<float>(p.x()));
    w.f32(static_cast<float>(p.y()));
    w.f32(static_cast<float>(p.z()));
  }
  const auto bytes = std::move(w).take();
  detail::write_file_bytes(path, bytes);
}

PointCloud load_cloud(const std::string& path) {
  auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() &&
           path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".xyz") || ends_with(".txt")) return load_xyz(path);
  return load_raw(path);
}

void GridConfig::validate() const {
  if (!origin.allFinite() || !voxel_size.allFinite()) {
    throw ConfigError("grid config: non-finite origin or voxel size");
  }
  if ((voxel_size.array() <= 0.0f).any()) throw ConfigError("grid config: voxel size must be > 0");
  if ((dims.array() < 1).any()) throw ConfigError("grid config: dims must be >= 1");
}

Eigen::Vector3d GridConfig::extent() const {
  return dims.cast<double>().cwiseProduct(voxel_size.cast<double>());
}

GridConfig GridConfig::from_extent(const Eigen::Vector3d& origin, const Eigen::Vector3d& extent,
                                   const Eigen::Vector3d& voxel_size) {
  if ((voxel_size.array() <= 0.0).any() || !voxel_size.allFinite()) {
    throw ConfigError("grid config: voxel size must be > 0");
  }
  if ((extent.array() <= 0.0).any() || !extent.allFinite()) {
    throw ConfigError("grid config: extent must be > 0");
  }
  GridConfig c;
  c.origin = origin.cast<float>();
  c.voxel_size = voxel_size.cast<float>();
  for (int a = 0; a < 3; ++a) {
    const double ratio = extent[a] / voxel_size[a];
    const double nearest = std::round(ratio);
    const double n = std::abs(ratio - nearest) <= 1e-6 * std::max(1.0, nearest) ? nearest
                                                                               : std::ceil(ratio);
    if (n > std::numeric_limits<std::int32_t>::max()) {
      throw ConfigError("grid config: extent / voxel size overflows");
    }
    c.dims[a] = static_cast<int>(n);
  }
  c.validate();
  return c;
}

GridConfig GridConfig::full_scale() {
  return from_extent({-140.0, -40.0, -4.0}, {280.0, 80.0, 4.0}, {0.05, 0.05, 0.10});
}

GridConfig GridConfig::desk() {
  return from_extent({-1.6, -1.6, -0.8}, {64 * 0.05, 64 * 0.05, 8 * 0.10}, {0.05, 0.05, 0.10});
}

Dims grid_dims_check(const GridConfig& config, const Eigen::Vector3d& declared_extent) {
  config.validate();
  const Eigen::Vector3d actual = config.extent();
  for (int a = 0; a < 3; ++a) {
    const double voxel = config.voxel_size[a];
    if (!(std::abs(actual[a] - declared_extent[a]) < voxel)) {
      std::ostringstream msg;
      msg << "grid config: axis " << a << " dims*voxel_size = " << actual[a]
          << " m does not match declared extent " << declared_extent[a] << " m";
      throw ConfigError(msg.str());
    }
  }
  return config.dims;
}

SparseVoxelGrid::SparseVoxelGrid(GridConfig config, std::vector<Coord> coords)
    : config_(std::move(config)), coords_(std::move(coords)) {
  config_.validate();
  for (const Coord& c : coords_) {
    if (!config_.contains(c)) throw RangeError("voxel grid: coordinate outside dims");
  }
  std::sort(coords_.begin(), coords_.end());
  coords_.erase(std::unique(coords_.begin(), coords_.end()), coords_.end());
}

bool SparseVoxelGrid::contains(const Coord& c) const {
  return std::binary_search(coords_.begin(), coords_.end(), c);
}

SparseVoxelGrid voxelize(const PointCloud& cloud, const GridConfig& config, std::size_t* dropped) {
  config.validate();
  const Eigen::Vector3d origin = config.origin.cast<double>();
  const Eigen::Vector3d size = config.voxel_size.cast<double>();
  const Eigen::Vector3d limit = config.dims.cast<double>();
  std::vector<Coord> coords;
  coords.reserve(cloud.size());
  std::size_t outside = 0;
  for (const auto& p : cloud.points) {
    const Eigen::Vector3d q = ((p - origin).array() / size.array()).floor().matrix();
    // NaN compares false and is dropped here as well.
    if (!((q.array() >= 0.0).all() && (q.array() < limit.array()).all())) {
      ++outside;
      continue;
    }
    coords.push_back({static_cast<std::int32_t>(q.x()), static_cast<std::int32_t>(q.y()),
                      static_cast<std::int32_t>(q.z())});
  }
  if (dropped != nullptr) *dropped = outside;
  return SparseVoxelGrid(config, std::move(coords));
}

Eigen::Vector3d voxel_center(const Coord& coord, const GridConfig& config) {
  if (!config.contains(coord)) {
    throw RangeError("voxel_center: coordinate (" + std::to_string(coord.x) + ", " +
                     std::to_string(coord.y) + ", " + std::to_string(coord.z) +
                     ") outside grid dims");
  }
  const Eigen::Vector3d c(coord.x + 0.5, coord.y + 0.5, coord.z + 0.5);
  return config.origin.cast<double>() + c.cwiseProduct(config.voxel_size.cast<double>());
}

SparseVoxelGrid merge_grids(std::span<const SparseVoxelGrid> grids) {
  if (grids.empty()) throw IncompatibleGridError("merge_grids: no grids given");
  std::size_t total = 0;
  for (const auto& g : grids) {
    if (!(g.config() == grids.front().config())) {
      throw IncompatibleGridError("merge_grids: grids have different configs");
    }
    total += g.size();
  }
  std::vector<Coord> all;
  all.reserve(total);
  for (const auto& g : grids) all.insert(all.end(), g.coords().begin(), g.coords().end());
  return SparseVoxelGrid(grids.front().config(), std::move(all));
}

}  // namespace s2s
