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

// Sparse 3x3x3 convolution: rulebook construction, submanifold and strided
// forward passes, inference-mode batch normalization with ReLU.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "s2s/coord.hpp"
#include "s2s/errors.hpp"
#include "s2s/sparse_tensor.hpp"

namespace s2s {

inline constexpr int kKernelSize = 3;
inline constexpr int kKernelVolume = 27;
inline constexpr int kPadding = 1;

/// Kernel offsets (dx, dy, dz) in {0,1,2}^3 are flattened x-major.
constexpr int kernel_offset_index(int dx, int dy, int dz) { return dx * 9 + dy * 3 + dz; }

constexpr Coord kernel_offset(int k) { return {k / 9, (k / 3) % 3, k % 3}; }

enum class ConvMode { kSubmanifold, kStrided };

/// Output extent along one axis for a 3-wide kernel with padding 1.
constexpr int conv_output_extent(int n, int stride) {
  return (n + 2 * kPadding - kKernelSize) / stride + 1;
}

inline Dims conv_output_dims(const Dims& in, int stride) {
  return {conv_output_extent(in.x(), stride), conv_output_extent(in.y(), stride),
          conv_output_extent(in.z(), stride)};
}

/// Convolution weights. `kernel[k]` is the C_in x C_out matrix applied to the
/// input at `out * stride + kernel_offset(k) - 1`.
template <typename Scalar>
struct ConvParams {
  using KernelMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  std::array<KernelMatrix, kKernelVolume> kernel;
  int stride = 1;
  ConvMode mode = ConvMode::kSubmanifold;

  Eigen::Index in_channels() const { return kernel[0].rows(); }
  Eigen::Index out_channels() const { return kernel[0].cols(); }

  void validate() const {
    if (stride != 1 && stride != 2) throw ConfigError("conv: stride must be 1 or 2");
    if (mode == ConvMode::kSubmanifold && stride != 1) {
      throw ConfigError("conv: submanifold convolution requires stride 1");
    }
    for (const auto& w : kernel) {
      if (w.rows() != in_channels() || w.cols() != out_channels()) {
        throw ShapeError("conv: kernel slices differ in shape");
      }
    }
  }

  static ConvParams zeros(Eigen::Index c_in, Eigen::Index c_out, ConvMode mode, int stride = 1) {
    ConvParams p;
    for (auto& w : p.kernel) w = KernelMatrix::Zero(c_in, c_out);
    p.mode = mode;
    p.stride = stride;
    return p;
  }

  /// Center tap is the identity, every other tap zero.
  static ConvParams identity(Eigen::Index channels, ConvMode mode = ConvMode::kSubmanifold,
                             int stride = 1) {
    ConvParams p = zeros(channels, channels, mode, stride);
    p.kernel[kernel_offset_index(1, 1, 1)].setIdentity();
    return p;
  }

  friend bool operator==(const ConvParams& a, const ConvParams& b) {
    if (a.stride != b.stride || a.mode != b.mode) return false;
    for (int k = 0; k < kKernelVolume; ++k) {
      if (a.kernel[k].rows() != b.kernel[k].rows() || a.kernel[k].cols() != b.kernel[k].cols() ||
          !(a.kernel[k].array() == b.kernel[k].array()).all()) {
        return false;
      }
    }
    return true;
  }
};

/// Per-channel inference batch-norm statistics.
template <typename Scalar>
struct NormParams {
  using Vector = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Vector gamma, beta, running_mean, running_var;
  Scalar epsilon = Scalar(1e-5);

  Eigen::Index channels() const { return gamma.size(); }

  void validate() const {
    const auto c = gamma.size();
    if (beta.size() != c || running_mean.size() != c || running_var.size() != c) {
      throw ShapeError("batchnorm: parameter widths differ");
    }
    if ((running_var < Scalar(0)).any()) throw ConfigError("batchnorm: negative running variance");
  }

  static NormParams identity(Eigen::Index channels) {
    NormParams p;
    p.gamma = Vector::Ones(channels);
    p.beta = Vector::Zero(channels);
    p.running_mean = Vector::Zero(channels);
    p.running_var = Vector::Ones(channels);
    return p;
  }

  friend bool operator==(const NormParams& a, const NormParams& b) {
    auto same = [](const Vector& x, const Vector& y) {
      return x.size() == y.size() && (x == y).all();
    };
    return same(a.gamma, b.gamma) && same(a.beta, b.beta) &&
           same(a.running_mean, b.running_mean) && same(a.running_var, b.running_var) &&
           a.epsilon == b.epsilon;
  }
};

/// Gather/scatter plan for one convolution. For every kernel offset, pairs of
/// (input row, output row) sorted by output row.
struct Rulebook {
  Dims out_dims = Dims::Ones();
  std::vector<Coord> out_coords;
  std::array<std::vector<std::pair<Eigen::Index, Eigen::Index>>, kKernelVolume> pairs;

  std::size_t pair_count() const;
};

/// Submanifold: outputs are exactly the inputs. Strided: outputs are every
/// site of the downsampled grid whose receptive field holds an active input.
Rulebook build_rulebook(std::span<const Coord> coords, const Dims& dims, ConvMode mode,
                        int stride);

template <typename Scalar>
Rulebook build_rulebook(const SparseTensor<Scalar>& input, const ConvParams<Scalar>& params) {
  params.validate();
  return build_rulebook(input.coords(), input.dims(), params.mode, params.stride);
}

/// Applies a prebuilt rulebook. Accumulation is offset-major over sorted
/// pair lists, which makes the result independent of site insertion order.
template <typename Scalar>
SparseTensor<Scalar> apply_rulebook(const SparseTensor<Scalar>& input, const Rulebook& rulebook,
                                    const ConvParams<Scalar>& params) {
  using Features = typename SparseTensor<Scalar>::FeatureMatrix;
  if (params.in_channels() != input.width()) {
    throw ShapeError("conv: input width " + std::to_string(input.width()) +
                     " does not match kernel C_in " + std::to_string(params.in_channels()));
  }
  const auto n_out = static_cast<Eigen::Index>(rulebook.out_coords.size());
  Features out = Features::Zero(n_out, params.out_channels());
  Features gathered;
  for (int k = 0; k < kKernelVolume; ++k) {
    const auto& pairs = rulebook.pairs[k];
    if (pairs.empty()) continue;
    const auto n = static_cast<Eigen::Index>(pairs.size());
    gathered.resize(n, input.width());
    for (Eigen::Index i = 0; i < n; ++i) gathered.row(i) = input.features().row(pairs[i].first);
    const Features contrib = gathered * params.kernel[k];
    for (Eigen::Index i = 0; i < n; ++i) out.row(pairs[i].second) += contrib.row(i);
  }
  return SparseTensor<Scalar>(rulebook.out_dims, rulebook.out_coords, std::move(out));
}

/// Active set is preserved exactly.
template <typename Scalar>
SparseTensor<Scalar> submanifold_conv(const SparseTensor<Scalar>& input,
                                      const ConvParams<Scalar>& params) {
  if (params.mode != ConvMode::kSubmanifold) {
    throw ConfigError("submanifold_conv: params are not in submanifold mode");
  }
  return apply_rulebook(input, build_rulebook(input, params), params);
}

/// Regular (possibly strided) sparse convolution with padding 1.
template <typename Scalar>
SparseTensor<Scalar> sparse_conv(const SparseTensor<Scalar>& input,
                                 const ConvParams<Scalar>& params) {
  if (params.mode != ConvMode::kStrided) {
    throw ConfigError("sparse_conv: params are not in strided mode");
  }
  return apply_rulebook(input, build_rulebook(input, params), params);
}

/// Dispatches on params.mode.
template <typename Scalar>
SparseTensor<Scalar> convolve(const SparseTensor<Scalar>& input, const ConvParams<Scalar>& params) {
  return apply_rulebook(input, build_rulebook(input, params), params);
}

/// y = max(0, gamma * (x - mean) / sqrt(var + eps) + beta), per channel.
template <typename Scalar>
SparseTensor<Scalar> batchnorm_relu(const SparseTensor<Scalar>& input,
                                    const NormParams<Scalar>& params) {
  params.validate();
  if (params.channels() != input.width()) {
    throw ShapeError("batchnorm: width " + std::to_string(input.width()) +
                     " does not match parameters " + std::to_string(params.channels()));
  }
  using Row = Eigen::Array<Scalar, 1, Eigen::Dynamic>;
  const Row scale = (params.gamma / (params.running_var + params.epsilon).sqrt()).transpose();
  const Row mean = params.running_mean.transpose();
  const Row beta = params.beta.transpose();
  typename SparseTensor<Scalar>::FeatureMatrix out =
      (((input.features().array().rowwise() - mean).rowwise() * scale).rowwise() + beta)
          .cwiseMax(Scalar(0))
          .matrix();
  return SparseTensor<Scalar>(input.dims(),
                              std::vector<Coord>(input.coords().begin(), input.coords().end()),
                              std::move(out));
}

}  // namespace s2s
