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

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "s2s/coord.hpp"
#include "s2s/errors.hpp"

namespace s2s {

/// Active voxel sites paired with a fixed-width feature row each. Sites are
/// held in canonical (sorted) order, so two tensors built from the same
/// (coord, feature) pairs are identical whatever the insertion order.
template <typename Scalar>
class SparseTensor {
 public:
  using FeatureMatrix =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  SparseTensor() : dims_(Dims::Ones()) {}

  /// Empty tensor.
  SparseTensor(const Dims& dims, Eigen::Index width)
      : dims_(dims), features_(0, width) {
    check_dims();
  }

  SparseTensor(const Dims& dims, std::vector<Coord> coords, FeatureMatrix features)
      : dims_(dims) {
    check_dims();
    if (static_cast<Eigen::Index>(coords.size()) != features.rows()) {
      throw ShapeError("sparse tensor: coordinate count does not match feature rows");
    }
    for (const Coord& c : coords) {
      if (!in_bounds(c, dims_)) throw RangeError("sparse tensor: coordinate outside dims");
    }
    if (!features.allFinite()) throw ShapeError("sparse tensor: non-finite feature value");

    if (std::is_sorted(coords.begin(), coords.end())) {
      coords_ = std::move(coords);
      features_ = std::move(features);
    } else {
      std::vector<std::size_t> order(coords.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return coords[a] < coords[b]; });
      coords_.reserve(coords.size());
      features_.resize(features.rows(), features.cols());
      for (std::size_t i = 0; i < order.size(); ++i) {
        coords_.push_back(coords[order[i]]);
        features_.row(static_cast<Eigen::Index>(i)) =
            features.row(static_cast<Eigen::Index>(order[i]));
      }
    }
    if (std::adjacent_find(coords_.begin(), coords_.end()) != coords_.end()) {
      throw ShapeError("sparse tensor: duplicate coordinate");
    }
  }

  const Dims& dims() const { return dims_; }
  std::span<const Coord> coords() const { return coords_; }
  const FeatureMatrix& features() const { return features_; }
  Eigen::Index width() const { return features_.cols(); }
  std::size_t size() const { return coords_.size(); }
  bool empty() const { return coords_.empty(); }

  /// Row index of `c`, if active.
  std::optional<Eigen::Index> find(const Coord& c) const {
    auto it = std::lower_bound(coords_.begin(), coords_.end(), c);
    if (it == coords_.end() || *it != c) return std::nullopt;
    return static_cast<Eigen::Index>(it - coords_.begin());
  }

  template <typename Other>
  SparseTensor<Other> cast() const {
    SparseTensor<Other> out(dims_, features_.cols());
    out.coords_ = coords_;
    out.features_ = features_.template cast<Other>();
    return out;
  }

  /// Bitwise equality of dims, active set and features.
  friend bool operator==(const SparseTensor& a, const SparseTensor& b) {
    return a.dims_ == b.dims_ && a.coords_ == b.coords_ &&
           a.features_.rows() == b.features_.rows() &&
           a.features_.cols() == b.features_.cols() &&
           (a.features_.array() == b.features_.array()).all();
  }

 private:
  template <typename>
  friend class SparseTensor;

  void check_dims() const {
    if ((dims_.array() < 1).any()) throw ShapeError("sparse tensor: dims must be >= 1");
  }

  Dims dims_;
  std::vector<Coord> coords_;
  FeatureMatrix features_;
};

using SparseTensorf = SparseTensor<float>;

}  // namespace s2s
