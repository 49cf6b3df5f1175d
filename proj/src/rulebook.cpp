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

#include <algorithm>
#include <unordered_map>

#include "s2s/sparse_conv.hpp"

namespace s2s {

std::size_t Rulebook::pair_count() const {
  std::size_t n = 0;
  for (const auto& p : pairs) n += p.size();
  return n;
}

Rulebook build_rulebook(std::span<const Coord> coords, const Dims& dims, ConvMode mode,
                        int stride) {
  if (stride != 1 && stride != 2) throw ConfigError("rulebook: stride must be 1 or 2");
  if (mode == ConvMode::kSubmanifold && stride != 1) {
    throw ConfigError("rulebook: submanifold convolution requires stride 1");
  }

  std::unordered_map<Coord, Eigen::Index, CoordHash> index;
  index.reserve(coords.size() * 2);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    index.emplace(coords[i], static_cast<Eigen::Index>(i));
  }

  Rulebook rb;
  if (mode == ConvMode::kSubmanifold) {
    rb.out_dims = dims;
    rb.out_coords.assign(coords.begin(), coords.end());
  } else {
    rb.out_dims = conv_output_dims(dims, stride);
    // Output o sees input o * stride + d - 1, so input p reaches o = (p - d + 1) / stride.
    rb.out_coords.reserve(coords.size() * (stride == 1 ? 27 : 8));
    for (const Coord& p : coords) {
      for (int k = 0; k < kKernelVolume; ++k) {
        const Coord d = kernel_offset(k);
        const int nx = p.x - d.x + kPadding;
        const int ny = p.y - d.y + kPadding;
        const int nz = p.z - d.z + kPadding;
        if (nx < 0 || ny < 0 || nz < 0) continue;
        if (nx % stride != 0 || ny % stride != 0 || nz % stride != 0) continue;
        const Coord o{nx / stride, ny / stride, nz / stride};
        if (in_bounds(o, rb.out_dims)) rb.out_coords.push_back(o);
      }
    }
    std::sort(rb.out_coords.begin(), rb.out_coords.end());
    rb.out_coords.erase(std::unique(rb.out_coords.begin(), rb.out_coords.end()),
                        rb.out_coords.end());
  }

  for (std::size_t j = 0; j < rb.out_coords.size(); ++j) {
    const Coord& o = rb.out_coords[j];
    const Coord base{o.x * stride - kPadding, o.y * stride - kPadding, o.z * stride - kPadding};
    for (int k = 0; k < kKernelVolume; ++k) {
      const auto it = index.find(base + kernel_offset(k));
      if (it != index.end()) rb.pairs[k].emplace_back(it->second, static_cast<Eigen::Index>(j));
    }
  }
  return rb;
}

}  // namespace s2s
