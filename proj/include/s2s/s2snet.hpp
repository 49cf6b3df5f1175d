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

// Dual-backbone fusion network over sparse voxel grids. A local backbone
// consumes the ego grid, a collective backbone the merged grids shared by
// other vehicles. After every block the two streams are fused with scatter
// (element-wise max on shared sites, union elsewhere) and the fused tensor
// feeds the next local block.

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "s2s/errors.hpp"
#include "s2s/grid.hpp"
#include "s2s/sparse_conv.hpp"
#include "s2s/sparse_tensor.hpp"

namespace s2s {

inline constexpr int kNumBlocks = 4;

/// Per-stream channel and stride schedule. A stride-1 leading conv runs in
/// submanifold mode; stride 2 runs as a regular strided sparse conv.
struct ChannelPlan {
  int input_width = 3;
  std::array<int, kNumBlocks> channels{16, 32, 64, 64};
  std::array<int, kNumBlocks> local_strides{1, 2, 2, 2};
  // Differs from local_strides only when the two streams enter at different
  // resolutions and must be brought to a common one.
  std::array<int, kNumBlocks> collective_strides{1, 2, 2, 2};
  int final_channels = 64;

  void validate() const;
  friend bool operator==(const ChannelPlan&, const ChannelPlan&) = default;
};

/// Spatial dims after a full stream of blocks with the given strides.
inline Dims backbone_output_dims(Dims dims, const std::array<int, kNumBlocks>& strides) {
  for (int s : strides) dims = conv_output_dims(dims, s);
  return dims;
}

inline ConvMode leading_conv_mode(int stride) {
  return stride == 1 ? ConvMode::kSubmanifold : ConvMode::kStrided;
}

template <typename Scalar>
struct BlockWeights {
  ConvParams<Scalar> conv;  // strided or unit-stride
  NormParams<Scalar> conv_norm;
  ConvParams<Scalar> subm1;
  NormParams<Scalar> norm1;
  ConvParams<Scalar> subm2;
  NormParams<Scalar> norm2;

  void validate() const {
    conv.validate();
    subm1.validate();
    subm2.validate();
    if (subm1.mode != ConvMode::kSubmanifold || subm2.mode != ConvMode::kSubmanifold) {
      throw ConfigError("block: second and third convs must be submanifold");
    }
    const auto c = conv.out_channels();
    if (conv_norm.channels() != c || subm1.in_channels() != c || subm1.out_channels() != c ||
        norm1.channels() != c || subm2.in_channels() != c || subm2.out_channels() != c ||
        norm2.channels() != c) {
      throw ShapeError("block: inconsistent channel chain");
    }
    conv_norm.validate();
    norm1.validate();
    norm2.validate();
  }

  friend bool operator==(const BlockWeights&, const BlockWeights&) = default;

  /// Identity kernels and unit norms throughout.
  static BlockWeights identity(Eigen::Index channels) {
    BlockWeights b;
    b.conv = ConvParams<Scalar>::identity(channels);
    b.subm1 = ConvParams<Scalar>::identity(channels);
    b.subm2 = ConvParams<Scalar>::identity(channels);
    b.conv_norm = b.norm1 = b.norm2 = NormParams<Scalar>::identity(channels);
    return b;
  }
};

template <typename Scalar>
struct ModelWeights {
  ChannelPlan plan;
  std::array<BlockWeights<Scalar>, kNumBlocks> local_blocks;
  std::array<BlockWeights<Scalar>, kNumBlocks> collective_blocks;
  ConvParams<Scalar> final_conv;  // submanifold, final_channels -> final_channels
  NormParams<Scalar> final_norm;

  /// Checks every layer against `plan`.
  void validate() const {
    plan.validate();
    auto check_stream = [&](const auto& blocks, const auto& strides, const char* name) {
      Eigen::Index width = plan.input_width;
      for (int i = 0; i < kNumBlocks; ++i) {
        const auto& b = blocks[i];
        b.validate();
        if (b.conv.in_channels() != width || b.conv.out_channels() != plan.channels[i] ||
            b.conv.stride != strides[i] || b.conv.mode != leading_conv_mode(strides[i])) {
          throw ShapeError(std::string("weights: ") + name + " block " + std::to_string(i + 1) +
                           " does not match the channel plan");
        }
        width = plan.channels[i];
      }
    };
    check_stream(local_blocks, plan.local_strides, "local");
    check_stream(collective_blocks, plan.collective_strides, "collective");
    final_conv.validate();
    final_norm.validate();
    if (final_conv.mode != ConvMode::kSubmanifold ||
        final_conv.in_channels() != plan.channels.back() ||
        final_conv.out_channels() != plan.final_channels ||
        final_norm.channels() != plan.final_channels) {
      throw ShapeError("weights: final conv does not match the channel plan");
    }
  }

  friend bool operator==(const ModelWeights&, const ModelWeights&) = default;
};

using ModelWeightsf = ModelWeights<float>;

/// Deterministic pseudo-random weights (mt19937_64 stream, He-uniform
/// kernels, near-unit norms).
ModelWeights<float> init_weights(std::uint64_t seed, const ChannelPlan& plan = {});

/// Versioned binary container: "S2SW", u32 version, plan, then every layer's
/// f32 arrays in declaration order. Little-endian.
std::vector<std::uint8_t> serialize_weights(const ModelWeights<float>& weights);
ModelWeights<float> deserialize_weights(std::span<const std::uint8_t> bytes);
void save_weights(const std::string& path, const ModelWeights<float>& weights);
ModelWeights<float> load_weights(const std::string& path);

/// Element-wise max on sites active in both, union with the rest.
template <typename Scalar>
SparseTensor<Scalar> scatter(const SparseTensor<Scalar>& a, const SparseTensor<Scalar>& b) {
  if (a.dims() != b.dims()) throw ShapeError("scatter: tensors have different dims");
  if (a.width() != b.width()) throw ShapeError("scatter: tensors have different feature widths");
  if (b.empty()) return a;
  if (a.empty()) return b;

  using Features = typename SparseTensor<Scalar>::FeatureMatrix;
  const auto ac = a.coords();
  const auto bc = b.coords();
  std::vector<Coord> coords;
  coords.reserve(ac.size() + bc.size());
  Features out(static_cast<Eigen::Index>(ac.size() + bc.size()), a.width());
  std::size_t i = 0, j = 0;
  Eigen::Index n = 0;
  while (i < ac.size() || j < bc.size()) {
    if (j == bc.size() || (i < ac.size() && ac[i] < bc[j])) {
      coords.push_back(ac[i]);
      out.row(n++) = a.features().row(static_cast<Eigen::Index>(i++));
    } else if (i == ac.size() || bc[j] < ac[i]) {
      coords.push_back(bc[j]);
      out.row(n++) = b.features().row(static_cast<Eigen::Index>(j++));
    } else {
      coords.push_back(ac[i]);
      out.row(n++) = a.features()
                         .row(static_cast<Eigen::Index>(i++))
                         .cwiseMax(b.features().row(static_cast<Eigen::Index>(j++)));
    }
  }
  out.conservativeResize(n, Eigen::NoChange);
  return SparseTensor<Scalar>(a.dims(), std::move(coords), std::move(out));
}

/// conv -> BN+ReLU -> submanifold -> BN+ReLU -> submanifold -> BN+ReLU.
template <typename Scalar>
SparseTensor<Scalar> conv_block(const SparseTensor<Scalar>& input,
                                const BlockWeights<Scalar>& weights) {
  auto x = batchnorm_relu(convolve(input, weights.conv), weights.conv_norm);
  x = batchnorm_relu(submanifold_conv(x, weights.subm1), weights.norm1);
  return batchnorm_relu(submanifold_conv(x, weights.subm2), weights.norm2);
}

/// Dense bird's-eye-view map. Row `ix * ny + iy` holds the concatenation of
/// the features at z = 0 .. nz-1 (zeros where inactive).
template <typename Scalar>
struct BevFeatureMap {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  int nx = 0;
  int ny = 0;
  Matrix data;

  Eigen::Index channels() const { return data.cols(); }
  Scalar at(int ix, int iy, Eigen::Index channel) const {
    return data(static_cast<Eigen::Index>(ix) * ny + iy, channel);
  }

  friend bool operator==(const BevFeatureMap& a, const BevFeatureMap& b) {
    return a.nx == b.nx && a.ny == b.ny && a.data.rows() == b.data.rows() &&
           a.data.cols() == b.data.cols() && (a.data.array() == b.data.array()).all();
  }
};

template <typename Scalar>
BevFeatureMap<Scalar> to_bev(const SparseTensor<Scalar>& input) {
  const Dims& d = input.dims();
  const Eigen::Index c = input.width();
  BevFeatureMap<Scalar> bev;
  bev.nx = d.x();
  bev.ny = d.y();
  bev.data = BevFeatureMap<Scalar>::Matrix::Zero(static_cast<Eigen::Index>(d.x()) * d.y(),
                                                 d.z() * c);
  const auto coords = input.coords();
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const Coord& s = coords[i];
    bev.data.row(static_cast<Eigen::Index>(s.x) * d.y() + s.y).segment(s.z * c, c) =
        input.features().row(static_cast<Eigen::Index>(i));
  }
  return bev;
}

void write_bev(const std::string& path, const BevFeatureMap<float>& bev);
BevFeatureMap<float> read_bev(const std::string& path);

/// Every intermediate of one forward pass.
template <typename Scalar>
struct ForwardTrace {
  std::array<SparseTensor<Scalar>, kNumBlocks> local;       // output of local block i
  std::array<SparseTensor<Scalar>, kNumBlocks> collective;  // output of collective block i
  std::array<SparseTensor<Scalar>, kNumBlocks> fused;       // scatter(local[i], collective[i])
  SparseTensor<Scalar> final;
  BevFeatureMap<Scalar> bev;
};

enum class Fusion { kScatter, kNone };

/// Runs both backbones on prepared input tensors. With Fusion::kNone the
/// collective stream is ignored and fused[i] == local[i].
template <typename Scalar>
ForwardTrace<Scalar> forward_trace(const SparseTensor<Scalar>& ego,
                                   const SparseTensor<Scalar>& collective,
                                   const ModelWeights<Scalar>& weights,
                                   Fusion fusion = Fusion::kScatter) {
  weights.validate();
  if (ego.width() != weights.plan.input_width || collective.width() != weights.plan.input_width) {
    throw ShapeError("forward: input feature width does not match the channel plan");
  }
  ForwardTrace<Scalar> t;
  const SparseTensor<Scalar>* local_in = &ego;
  const SparseTensor<Scalar>* collective_in = &collective;
  for (int i = 0; i < kNumBlocks; ++i) {
    t.local[i] = conv_block(*local_in, weights.local_blocks[i]);
    if (fusion == Fusion::kScatter) {
      t.collective[i] = conv_block(*collective_in, weights.collective_blocks[i]);
      if (t.local[i].dims() != t.collective[i].dims()) {
        throw IncompatibleGridError("forward: streams differ in resolution after block " +
                                    std::to_string(i + 1));
      }
      t.fused[i] = scatter(t.local[i], t.collective[i]);
      collective_in = &t.collective[i];
    } else {
      t.fused[i] = t.local[i];
    }
    local_in = &t.fused[i];
  }
  t.final = batchnorm_relu(submanifold_conv(*local_in, weights.final_conv), weights.final_norm);
  t.bev = to_bev(t.final);
  return t;
}

/// Shared grids must have the ego grid's config unless the plan declares
/// distinct collective strides.
template <typename Scalar = float>
BevFeatureMap<Scalar> forward(const SparseVoxelGrid& ego, const SparseVoxelGrid& collective,
                              const ModelWeights<Scalar>& weights) {
  if (weights.plan.local_strides == weights.plan.collective_strides &&
      !(ego.config() == collective.config())) {
    throw IncompatibleGridError("forward: ego and collective grids have different configs");
  }
  return forward_trace(center_features<Scalar>(ego), center_features<Scalar>(collective), weights)
      .bev;
}

/// Local backbone alone, no fusion.
template <typename Scalar = float>
BevFeatureMap<Scalar> forward_local_only(const SparseVoxelGrid& ego,
                                         const ModelWeights<Scalar>& weights) {
  const auto in = center_features<Scalar>(ego);
  return forward_trace(in, in, weights, Fusion::kNone).bev;
}

}  // namespace s2s
