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

#include "s2s/sparse_conv.hpp"

#include <cmath>
#include <algorithm>
#include <numeric>
#include <random>

#include "gtest/gtest.h"
#include "support/dense_oracle.hpp"
#include "support/generators.hpp"

namespace s2s {
namespace {

using testing::DenseVolume;
using testing::densify;
using testing::dense_oracle_conv;
using Features = SparseTensorf::FeatureMatrix;

SparseTensorf Single(const Dims& dims, Coord c, Eigen::RowVectorXf f) {
  Features m = f;
  return SparseTensorf(dims, {c}, m);
}

// Max |sparse - dense| over the sparse output sites; also checks the site
// sets agree with the oracle's `active` mask (or the input mask when
// `same_sites` holds).
double MaxDiffAgainstOracle(const SparseTensorf& sparse, const DenseVolume& dense,
                            const DenseVolume* same_sites) {
  const DenseVolume& mask = same_sites ? *same_sites : dense;
  std::size_t mask_count = 0;
  for (bool a : mask.active) mask_count += a ? 1 : 0;
  EXPECT_EQ(sparse.size(), mask_count);
  double worst = 0.0;
  for (std::size_t i = 0; i < sparse.size(); ++i) {
    const Coord& c = sparse.coords()[i];
    EXPECT_TRUE(mask.active[mask.cell(c.x, c.y, c.z)]);
    for (int ch = 0; ch < dense.channels; ++ch) {
      const double d = std::abs(static_cast<double>(sparse.features()(static_cast<Eigen::Index>(i), ch)) -
                                dense.at(c.x, c.y, c.z, ch));
      worst = std::max(worst, d);
    }
  }
  return worst;
}

TEST(RulebookTest, IsolatedSiteHasOnlyTheCenterPair) {
  const auto t = Single({4, 4, 4}, {2, 2, 2}, Eigen::RowVectorXf::Ones(2));
  const auto rb = build_rulebook(t, ConvParams<float>::identity(2));
  EXPECT_EQ(rb.pair_count(), 1u);
  ASSERT_EQ(rb.pairs[kernel_offset_index(1, 1, 1)].size(), 1u);
  EXPECT_EQ(rb.out_coords, (std::vector<Coord>{{2, 2, 2}}));
}

TEST(RulebookTest, TwoAdjacentSitesHaveFourPairs) {
  Features f(2, 1);
  f << 1, 2;
  const SparseTensorf t({4, 4, 4}, {{0, 0, 0}, {1, 0, 0}}, f);
  const auto rb = build_rulebook(t, ConvParams<float>::identity(1));
  EXPECT_EQ(rb.pair_count(), 4u);
  using Pairs = std::vector<std::pair<Eigen::Index, Eigen::Index>>;
  EXPECT_EQ(rb.pairs[kernel_offset_index(1, 1, 1)], (Pairs{{0, 0}, {1, 1}}));
  // Output (0,0,0) reads its +x neighbor through dx = 2, and (1,0,0) its -x
  // neighbor through dx = 0.
  EXPECT_EQ(rb.pairs[kernel_offset_index(2, 1, 1)], (Pairs{{1, 0}}));
  EXPECT_EQ(rb.pairs[kernel_offset_index(0, 1, 1)], (Pairs{{0, 1}}));
}

TEST(RulebookTest, StridedOutputDims) {
  const SparseTensorf t({64, 64, 8}, 3);
  const auto rb = build_rulebook(t, ConvParams<float>::zeros(3, 4, ConvMode::kStrided, 2));
  EXPECT_EQ(rb.out_dims, Dims(32, 32, 4));
  EXPECT_TRUE(rb.out_coords.empty());
}

TEST(RulebookTest, FullScaleStrideTrajectory) {
  Dims d(5600, 1600, 40);
  d = conv_output_dims(d, 1);
  EXPECT_EQ(d, Dims(5600, 1600, 40));
  d = conv_output_dims(d, 2);
  EXPECT_EQ(d, Dims(2800, 800, 20));
  d = conv_output_dims(d, 2);
  EXPECT_EQ(d, Dims(1400, 400, 10));
  d = conv_output_dims(d, 2);
  EXPECT_EQ(d, Dims(700, 200, 5));
}

TEST(SubmanifoldConvTest, IdentityAndZeroKernels) {
  std::mt19937_64 rng(1);
  const auto x = testing::random_tensor(rng, {6, 6, 6}, 4, 0.3);
  EXPECT_EQ(submanifold_conv(x, ConvParams<float>::identity(4)), x);
  const auto zero = submanifold_conv(x, ConvParams<float>::zeros(4, 5, ConvMode::kSubmanifold));
  EXPECT_TRUE(std::equal(zero.coords().begin(), zero.coords().end(), x.coords().begin(),
                         x.coords().end()));
  EXPECT_TRUE(zero.features().isZero(0.0f));
  EXPECT_EQ(zero.width(), 5);
}

TEST(SubmanifoldConvTest, MatchesDenseOracleOnActiveSites) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const int c_in = 1 + trial % 4, c_out = 1 + (trial * 3) % 5;
    const auto x = testing::random_tensor(rng, {6, 6, 6}, c_in, 0.35);
    const auto p = testing::random_conv(rng, c_in, c_out, ConvMode::kSubmanifold, 1);
    const auto dense_in = densify(x);
    const auto expect = dense_oracle_conv(dense_in, p, 1);
    const auto got = submanifold_conv(x, p);
    EXPECT_LE(MaxDiffAgainstOracle(got, expect, &dense_in), 1e-5);
  }
}

TEST(SubmanifoldConvTest, ChannelMismatchAndModeErrors) {
  const auto x = Single({4, 4, 4}, {0, 0, 0}, Eigen::RowVectorXf::Ones(3));
  EXPECT_THROW(submanifold_conv(x, ConvParams<float>::identity(2)), ShapeError);
  EXPECT_THROW(submanifold_conv(x, ConvParams<float>::identity(3, ConvMode::kStrided, 2)),
               ConfigError);
  EXPECT_THROW(submanifold_conv(x, ConvParams<float>::identity(3, ConvMode::kSubmanifold, 2)),
               ConfigError);
}

TEST(SparseConvTest, CornerSiteReachesOnlyOutputOrigin) {
  std::mt19937_64 rng(3);
  const auto p = testing::random_conv(rng, 2, 3, ConvMode::kStrided, 2);
  Eigen::RowVectorXf f(2);
  f << 0.5f, -2.0f;
  const auto y = sparse_conv(Single({4, 4, 4}, {0, 0, 0}, f), p);
  EXPECT_EQ(y.dims(), Dims(2, 2, 2));
  ASSERT_EQ(y.size(), 1u);
  EXPECT_EQ(y.coords()[0], (Coord{0, 0, 0}));
  // Output (0,0,0) sees input (0,0,0) through tap (1,1,1).
  const Eigen::RowVectorXf expect = f * p.kernel[kernel_offset_index(1, 1, 1)];
  EXPECT_TRUE(y.features().row(0).isApprox(expect, 1e-6f));
}

TEST(SparseConvTest, InteriorSiteFeedsEightOutputs) {
  std::mt19937_64 rng(4);
  const auto p = testing::random_conv(rng, 1, 1, ConvMode::kStrided, 2);
  const auto y = sparse_conv(Single({4, 4, 4}, {1, 1, 1}, Eigen::RowVectorXf::Ones(1)), p);
  ASSERT_EQ(y.size(), 8u);
  // Input 1 = o * 2 + d - 1: o = 0 uses d = 2, o = 1 uses d = 0.
  for (std::size_t i = 0; i < y.size(); ++i) {
    const Coord& o = y.coords()[i];
    const float w = p.kernel[kernel_offset_index(o.x == 0 ? 2 : 0, o.y == 0 ? 2 : 0,
                                                 o.z == 0 ? 2 : 0)](0, 0);
    EXPECT_FLOAT_EQ(y.features()(static_cast<Eigen::Index>(i), 0), w);
  }
}

TEST(SparseConvTest, EmptyInputKeepsDownsampledDims) {
  const SparseTensorf x({6, 6, 6}, 4);
  const auto y = sparse_conv(x, ConvParams<float>::zeros(4, 8, ConvMode::kStrided, 2));
  EXPECT_TRUE(y.empty());
  EXPECT_EQ(y.dims(), Dims(3, 3, 3));
  EXPECT_EQ(y.width(), 8);
}

TEST(SparseConvTest, MatchesDenseOracleWithStrideTwo) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int c_in = 1 + trial % 3, c_out = 2 + trial % 4;
    const auto x = testing::random_tensor(rng, {6, 6, 6}, c_in, 0.1 + 0.02 * trial);
    const auto p = testing::random_conv(rng, c_in, c_out, ConvMode::kStrided, 2);
    const auto expect = dense_oracle_conv(densify(x), p, 2);
    const auto got = sparse_conv(x, p);
    EXPECT_EQ(got.dims(), Dims(expect.nx, expect.ny, expect.nz));
    EXPECT_LE(MaxDiffAgainstOracle(got, expect, nullptr), 1e-5);
  }
}

TEST(SparseConvPropertyTest, SubmanifoldPreservesActiveSet) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = testing::random_tensor(rng, {8, 5, 7}, 3, 0.05 + 0.01 * trial);
    const auto y = submanifold_conv(x, testing::random_conv(rng, 3, 2, ConvMode::kSubmanifold, 1));
    ASSERT_TRUE(std::equal(y.coords().begin(), y.coords().end(), x.coords().begin(),
                           x.coords().end()));
  }
}

TEST(SparseConvPropertyTest, Linearity) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const auto x = testing::random_tensor(rng, {6, 6, 6}, 3, 0.4);
    const auto y = testing::random_features_like(rng, x);
    const float a = 0.7f, b = -1.3f;
    const SparseTensorf mix(x.dims(), {x.coords().begin(), x.coords().end()},
                            a * x.features() + b * y.features());
    for (const auto& p : {testing::random_conv(rng, 3, 4, ConvMode::kSubmanifold, 1),
                          testing::random_conv(rng, 3, 4, ConvMode::kStrided, 2)}) {
      const auto lhs = convolve(mix, p);
      const auto cx = convolve(x, p);
      const auto cy = convolve(y, p);
      const Features rhs = a * cx.features() + b * cy.features();
      EXPECT_LE((lhs.features() - rhs).cwiseAbs().maxCoeff(), 1e-5f);
    }
  }
}

TEST(SparseConvPropertyTest, InsertionOrderDoesNotChangeBits) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = testing::random_tensor(rng, {7, 7, 7}, 3, 0.3);
    std::vector<Eigen::Index> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Coord> coords;
    Features f(x.features().rows(), x.features().cols());
    for (std::size_t i = 0; i < order.size(); ++i) {
      coords.push_back(x.coords()[order[i]]);
      f.row(static_cast<Eigen::Index>(i)) = x.features().row(order[i]);
    }
    const SparseTensorf shuffled(x.dims(), coords, f);
    for (const auto& p : {testing::random_conv(rng, 3, 4, ConvMode::kSubmanifold, 1),
                          testing::random_conv(rng, 3, 4, ConvMode::kStrided, 2)}) {
      EXPECT_EQ(convolve(shuffled, p), convolve(x, p));
    }
  }
}

TEST(BatchNormReluTest, IdentityNormIsRelu) {
  Features f(2, 3);
  f << 1.0f, -2.0f, 0.5f, -0.1f, 3.0f, 0.0f;
  const SparseTensorf x({4, 4, 4}, {{0, 0, 0}, {1, 1, 1}}, f);
  const auto y = batchnorm_relu(x, NormParams<float>::identity(3));
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const float expect = std::max(0.0f, f.data()[i]);
    EXPECT_NEAR(y.features().data()[i], expect, 1e-5f * std::abs(expect));
  }
}

TEST(BatchNormReluTest, NegativeInputsVanish) {
  std::mt19937_64 rng(9);
  auto x = testing::random_tensor(rng, {5, 5, 5}, 4, 0.5);
  const SparseTensorf neg(x.dims(), {x.coords().begin(), x.coords().end()},
                          -x.features().cwiseAbs() - Features::Constant(x.size(), 4, 0.01f));
  const auto y = batchnorm_relu(neg, NormParams<float>::identity(4));
  EXPECT_TRUE(y.features().isZero(0.0f));
  EXPECT_EQ(y.size(), neg.size());
}

TEST(BatchNormReluTest, MatchesScalarFormula) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = testing::random_tensor(rng, {5, 5, 5}, 6, 0.3);
    const auto p = testing::random_norm(rng, 6);
    const auto y = batchnorm_relu(x, p);
    for (Eigen::Index i = 0; i < x.features().rows(); ++i) {
      for (Eigen::Index c = 0; c < 6; ++c) {
        const double v = double(p.gamma[c]) * (double(x.features()(i, c)) - double(p.running_mean[c])) /
                             std::sqrt(double(p.running_var[c]) + 1e-5) +
                         double(p.beta[c]);
        EXPECT_NEAR(y.features()(i, c), std::max(0.0, v), 1e-6);
      }
    }
  }
}

TEST(BatchNormReluTest, WidthMismatchThrows) {
  const auto x = Single({4, 4, 4}, {0, 0, 0}, Eigen::RowVectorXf::Ones(3));
  EXPECT_THROW(batchnorm_relu(x, NormParams<float>::identity(4)), ShapeError);
}

TEST(DenseOracleTest, IdentityKernelLeavesInputUnchanged) {
  std::mt19937_64 rng(11);
  const auto x = densify(testing::random_tensor(rng, {5, 4, 3}, 2, 0.5));
  const auto y = dense_oracle_conv(x, ConvParams<float>::identity(2), 1);
  EXPECT_EQ(y.values, x.values);
}

TEST(DenseOracleTest, DeltaInputPlacesFlippedKernel) {
  std::mt19937_64 rng(12);
  const auto p = testing::random_conv(rng, 1, 1, ConvMode::kSubmanifold, 1);
  DenseVolume delta(5, 5, 5, 1);
  delta.at(2, 2, 2, 0) = 1.0;
  const auto y = dense_oracle_conv(delta, p, 1);
  for (int x = 0; x < 5; ++x) {
    for (int yy = 0; yy < 5; ++yy) {
      for (int z = 0; z < 5; ++z) {
        const int dx = 2 - x + 1, dy = 2 - yy + 1, dz = 2 - z + 1;
        const bool in_kernel = dx >= 0 && dx < 3 && dy >= 0 && dy < 3 && dz >= 0 && dz < 3;
        const double expect = in_kernel ? p.kernel[dx * 9 + dy * 3 + dz](0, 0) : 0.0;
        EXPECT_DOUBLE_EQ(y.at(x, yy, z, 0), expect);
      }
    }
  }
}

}  // namespace
}  // namespace s2s
