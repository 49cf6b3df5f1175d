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

// Coordinate-only grid exchange format. All fields little-endian:
//
//   offset  size  field
//   0       12    origin        3 x f32, meters
//   12      12    voxel_size    3 x f32, meters
//   24      12    dims          3 x u32
//   36      4     count         u32
//   40      6*N   coordinates   N x (u16 x, u16 y, u16 z), sorted x, then y, then z
//
// A message is exactly 40 + 6 * count bytes.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "s2s/grid.hpp"

namespace s2s::wire {

inline constexpr std::size_t kHeaderBytes = 40;
inline constexpr std::size_t kCoordBytes = 6;
inline constexpr std::int32_t kMaxDim = 65535;

constexpr std::size_t message_size(std::size_t count) { return kHeaderBytes + kCoordBytes * count; }

/// Throws EncodingError when any dim exceeds the u16 range.
std::vector<std::uint8_t> encode(const SparseVoxelGrid& grid);

/// Throws MalformedMessageError on truncation, trailing bytes, an invalid
/// header, or a coordinate outside dims.
SparseVoxelGrid decode(std::span<const std::uint8_t> bytes);

void write_grid(const std::string& path, const SparseVoxelGrid& grid);
SparseVoxelGrid read_grid(const std::string& path);

struct BandwidthReport {
  std::size_t raw_bytes = 0;   // 12 bytes (3 x f32) per point
  std::size_t wire_bytes = 0;  // 40 + 6 per voxel
  double reduction = 0.0;      // 1 - wire / raw; NaN for an empty cloud
};

BandwidthReport bandwidth_report(const PointCloud& cloud, const SparseVoxelGrid& grid);

}  // namespace s2s::wire
