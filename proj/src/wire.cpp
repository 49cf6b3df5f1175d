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

#include "s2s/wire.hpp"

#include <cmath>
#include <limits>

#include "s2s/detail/bytes.hpp"
#include "s2s/errors.hpp"

namespace s2s::wire {

std::vector<std::uint8_t> encode(const SparseVoxelGrid& grid) {
  const GridConfig& cfg = grid.config();
  if ((cfg.dims.array() > kMaxDim).any()) {
    throw EncodingError("wire: grid dims exceed the u16 coordinate range");
  }
  detail::ByteWriter w;
  w.reserve(message_size(grid.size()));
  for (int a = 0; a < 3; ++a) w.f32(cfg.origin[a]);
  for (int a = 0; a < 3; ++a) w.f32(cfg.voxel_size[a]);
  for (int a = 0; a < 3; ++a) w.u32(static_cast<std::uint32_t>(cfg.dims[a]));
  w.u32(static_cast<std::uint32_t>(grid.size()));
  // SparseVoxelGrid keeps coords sorted, so the payload is canonical.
  for (const Coord& c : grid.coords()) {
    w.u16(static_cast<std::uint16_t>(c.x));
    w.u16(static_cast<std::uint16_t>(c.y));
    w.u16(static_cast<std::uint16_t>(c.z));
  }
  return std::move(w).take();
}

SparseVoxelGrid decode(std::span<const std::uint8_t> bytes) {
  auto fail = [](const std::string& what, std::size_t offset) -> void {
    throw MalformedMessageError("wire: " + what, offset);
  };
  if (bytes.size() < kHeaderBytes) fail("message shorter than the 40-byte header", bytes.size());
  detail::ByteReader r(bytes, fail);

  GridConfig cfg;
  for (int a = 0; a < 3; ++a) cfg.origin[a] = r.f32("origin");
  for (int a = 0; a < 3; ++a) cfg.voxel_size[a] = r.f32("voxel_size");
  for (int a = 0; a < 3; ++a) {
    const std::size_t at = r.offset();
    const std::uint32_t d = r.u32("dims");
    if (d < 1 || d > static_cast<std::uint32_t>(kMaxDim)) fail("dims out of range", at);
    cfg.dims[a] = static_cast<int>(d);
  }
  if (!cfg.origin.allFinite()) fail("non-finite origin", 0);
  if (!cfg.voxel_size.allFinite() || (cfg.voxel_size.array() <= 0.0f).any()) {
    fail("voxel size must be finite and > 0", 12);
  }
  const std::uint32_t count = r.u32("count");
  const std::size_t expected = static_cast<std::size_t>(count) * kCoordBytes;
  if (r.remaining() < expected) fail("payload truncated for count " + std::to_string(count), r.offset());
  if (r.remaining() > expected) {
    fail("payload longer than count " + std::to_string(count) + " implies", kHeaderBytes + expected);
  }

  std::vector<Coord> coords;
  coords.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t at = r.offset();
    Coord c;
    c.x = r.u16("x");
    c.y = r.u16("y");
    c.z = r.u16("z");
    if (!cfg.contains(c)) fail("coordinate outside dims", at);
    coords.push_back(c);
  }
  SparseVoxelGrid grid(cfg, std::move(coords));
  if (grid.size() != count) fail("duplicate coordinates in payload", kHeaderBytes);
  return grid;
}

void write_grid(const std::string& path, const SparseVoxelGrid& grid) {
  const auto bytes = encode(grid);
  detail::write_file_bytes(path, bytes);
}

SparseVoxelGrid read_grid(const std::string& path) {
  const auto bytes = detail::read_file_bytes(path);
  return decode(bytes);
}

BandwidthReport bandwidth_report(const PointCloud& cloud, const SparseVoxelGrid& grid) {
  BandwidthReport r;
  r.raw_bytes = 12 * cloud.size();
  r.wire_bytes = message_size(grid.size());
  r.reduction = r.raw_bytes == 0 ? std::numeric_limits<double>::quiet_NaN()
                                 : 1.0 - static_cast<double>(r.wire_bytes) /
                                             static_cast<double>(r.raw_bytes);
  return r;
}

}  // namespace s2s::wire
