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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>

#include <Eigen/Core>

namespace s2s {

/// Integer voxel coordinate. Ordered lexicographically (x, then y, then z),
/// which is the canonical site order used everywhere.
struct Coord {
  std::int32_t x = 0;
  std::int32_t y = 0;
  std::int32_t z = 0;

  friend auto operator<=>(const Coord&, const Coord&) = default;
  friend bool operator==(const Coord&, const Coord&) = default;
};

struct CoordHash {
  std::size_t operator()(const Coord& c) const noexcept {
    // Large odd multipliers, the usual spatial-hash mix.
    std::uint64_t h = static_cast<std::uint32_t>(c.x) * 73856093ULL;
    h ^= static_cast<std::uint32_t>(c.y) * 19349663ULL;
    h ^= static_cast<std::uint32_t>(c.z) * 83492791ULL;
    h *= 0x9E3779B97F4A7C15ULL;
    return static_cast<std::size_t>(h ^ (h >> 32));
  }
};

/// Spatial extent of a grid or tensor in voxels.
using Dims = Eigen::Vector3i;

inline bool in_bounds(const Coord& c, const Dims& dims) {
  return c.x >= 0 && c.y >= 0 && c.z >= 0 && c.x < dims.x() &&
         c.y < dims.y() && c.z < dims.z();
}

inline Coord operator+(const Coord& a, const Coord& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}

}  // namespace s2s
