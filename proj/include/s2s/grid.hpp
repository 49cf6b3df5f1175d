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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "s2s/coord.hpp"
#include "s2s/sparse_tensor.hpp"

namespace s2s {

/// Sensor-frame 3D points in meters, optionally with intensity in [0, 1].
struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<float> intensity;  // empty or points.size()

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  /// Throws ConfigError if a coordinate is non-finite or the intensity list
  /// has the wrong length.
  void validate() const;
};

/// Plain text, one `x y z` triple per line. Blank lines and `#` comments are
/// skipped.
PointCloud load_xyz(const std::string& path);
void save_xyz(const std::string& path, const PointCloud& cloud);

/// Raw binary: little-endian u32 count, then count x 3 little-endian f32.
PointCloud load_raw(const std::string& path);
void save_raw(const std::string& path, const PointCloud& cloud);

/// Dispatches on extension: `.xyz`/`.txt` as text, anything else as raw.
PointCloud load_cloud(const std::string& path);

/// Geometry of a uniform voxel grid. Values are stored in single precision so
/// a config survives the wire header unchanged.
struct GridConfig {
  Eigen::Vector3f origin = Eigen::Vector3f::Zero();  // minimum corner, meters
  Eigen::Vector3f voxel_size = Eigen::Vector3f::Ones();
  Dims dims = Dims::Ones();

  void validate() const;
  Eigen::Vector3d extent() const;
  bool contains(const Coord& c) const { return in_bounds(c, dims); }

  /// Dims are derived as extent / voxel_size, snapped to the nearest integer
  /// when within 1e-6 of it and rounded up otherwise.
  static GridConfig from_extent(const Eigen::Vector3d& origin,
                                const Eigen::Vector3d& extent,
                                const Eigen::Vector3d& voxel_size);

  /// 280 x 80 x 4 m at 5 x 5 x 10 cm, origin (-140, -40, -4).
  static GridConfig full_scale();
  /// 64 x 64 x 8 voxels at 5 x 5 x 10 cm, centered on the origin in x/y.
  static GridConfig desk();

  friend bool operator==(const GridConfig& a, const GridConfig& b) {
    return a.origin == b.origin && a.voxel_size == b.voxel_size && a.dims == b.dims;
  }
};

/// Returns config.dims after checking that dims * voxel_size matches
/// `declared_extent` to within one voxel on every axis.
Dims grid_dims_check(const GridConfig& config, const Eigen::Vector3d& declared_extent);

/// Coordinate-only occupancy grid. Coordinates are kept sorted and unique.
class SparseVoxelGrid {
 public:
  SparseVoxelGrid() = default;
  /// Sorts and deduplicates `coords`; throws RangeError for a coordinate
  /// outside `config.dims`.
  explicit SparseVoxelGrid(GridConfig config, std::vector<Coord> coords = {});

  const GridConfig& config() const { return config_; }
  std::span<const Coord> coords() const { return coords_; }
  std::size_t size() const { return coords_.size(); }
  bool empty() const { return coords_.empty(); }
  bool contains(const Coord& c) const;

  friend bool operator==(const SparseVoxelGrid&, const SparseVoxelGrid&) = default;

 private:
  GridConfig config_;
  std::vector<Coord> coords_;
};

/// Quantizes every point with floor((p - origin) / voxel_size). Cells are
/// half-open, so points on the upper boundary of the grid fall outside.
/// Points outside the grid are dropped; their number is written to `dropped`
/// when given.
SparseVoxelGrid voxelize(const PointCloud& cloud, const GridConfig& config,
                         std::size_t* dropped = nullptr);

/// origin + (coord + 0.5) * voxel_size. Throws RangeError outside dims.
Eigen::Vector3d voxel_center(const Coord& coord, const GridConfig& config);

/// Set union. All grids must share one config.
SparseVoxelGrid merge_grids(std::span<const SparseVoxelGrid> grids);

/// Width-3 tensor holding each active voxel's center point.
template <typename Scalar = float>
SparseTensor<Scalar> center_features(const SparseVoxelGrid& grid) {
  using Features = typename SparseTensor<Scalar>::FeatureMatrix;
  const auto coords = grid.coords();
  Features features(static_cast<Eigen::Index>(coords.size()), 3);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    features.row(static_cast<Eigen::Index>(i)) =
        voxel_center(coords[i], grid.config()).cast<Scalar>().transpose();
  }
  return SparseTensor<Scalar>(grid.config().dims,
                              std::vector<Coord>(coords.begin(), coords.end()),
                              std::move(features));
}

}  // namespace s2s
