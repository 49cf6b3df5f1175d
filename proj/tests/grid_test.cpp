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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <tuple>

#include "gtest/gtest.h"
#include "support/generators.hpp"

namespace s2s {
namespace {

GridConfig MakeConfig(Eigen::Vector3f origin, Eigen::Vector3f voxel, Dims dims) {
  GridConfig c;
  c.origin = origin;
  c.voxel_size = voxel;
  c.dims = dims;
  return c;
}

const GridConfig kSmall = MakeConfig({0, 0, 0}, {0.05f, 0.05f, 0.10f}, {10, 10, 10});

TEST(VoxelizeTest, PointsInFirstVoxelShareOneCoord) {
  PointCloud cloud;
  cloud.points = {{0.02, 0.03, 0.05}, {0.04, 0.01, 0.09}};
  const auto grid = voxelize(cloud, kSmall);
  ASSERT_EQ(grid.size(), 1u);
  EXPECT_EQ(grid.coords()[0], (Coord{0, 0, 0}));
}

TEST(VoxelizeTest, EmptyCloudGivesEmptyGrid) {
  EXPECT_TRUE(voxelize(PointCloud{}, kSmall).empty());
}

TEST(VoxelizeTest, DropsPointsOutsideAndOnUpperBoundary) {
  const auto unit = MakeConfig({0, 0, 0}, {1, 1, 1}, {2, 2, 2});
  PointCloud cloud;
  cloud.points = {{2.0, 0.5, 0.5}, {-0.0001, 0.5, 0.5}, {1.9999, 1.9999, 1.9999}, {0, 0, 0}};
  std::size_t dropped = 0;
  const auto grid = voxelize(cloud, unit, &dropped);
  EXPECT_EQ(dropped, 2u);
  EXPECT_EQ(grid.size(), 2u);
  EXPECT_TRUE(grid.contains({1, 1, 1}));
  EXPECT_TRUE(grid.contains({0, 0, 0}));
}

TEST(VoxelizeTest, RejectsNonPositiveVoxelSize) {
  auto bad = kSmall;
  bad.voxel_size.y() = 0.0f;
  EXPECT_THROW(voxelize(PointCloud{}, bad), ConfigError);
}

TEST(VoxelizeTest, MatchesBruteForceQuantizationAtFullScale) {
  const GridConfig full = GridConfig::full_scale();
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> ux(-140, 140), uy(-40, 40), uz(-4, 0);
  PointCloud cloud;
  for (int i = 0; i < 100000; ++i) cloud.points.emplace_back(ux(rng), uy(rng), uz(rng));

  // Oracle: quantize each point on its own, count distinct triples.
  std::set<std::tuple<long, long, long>> distinct;
  for (const auto& p : cloud.points) {
    const long x = static_cast<long>(std::floor((p.x() - double(full.origin.x())) / double(full.voxel_size.x())));
    const long y = static_cast<long>(std::floor((p.y() - double(full.origin.y())) / double(full.voxel_size.y())));
    const long z = static_cast<long>(std::floor((p.z() - double(full.origin.z())) / double(full.voxel_size.z())));
    if (x >= 0 && y >= 0 && z >= 0 && x < 5600 && y < 1600 && z < 40) distinct.insert({x, y, z});
  }
  const auto grid = voxelize(cloud, full);
  EXPECT_LE(grid.size(), cloud.size());
  EXPECT_EQ(grid.size(), distinct.size());
  for (const Coord& c : grid.coords()) {
    ASSERT_TRUE(distinct.count({c.x, c.y, c.z}));
  }
}

TEST(VoxelCenterTest, HalfVoxelOffsets) {
  const auto cfg = MakeConfig({0, 0, 0}, {0.05f, 0.05f, 0.10f}, {10, 10, 10});
  const double tol = 1e-7;  // voxel sizes are single precision
  EXPECT_TRUE(voxel_center({0, 0, 0}, cfg).isApprox(Eigen::Vector3d(0.025, 0.025, 0.05), tol));
  EXPECT_TRUE(voxel_center({2, 3, 1}, cfg).isApprox(Eigen::Vector3d(0.125, 0.175, 0.15), tol));
  const auto shifted = MakeConfig({-140, -40, -4}, {0.05f, 0.05f, 0.10f}, {5600, 1600, 40});
  const Eigen::Vector3d c = voxel_center({0, 0, 0}, shifted);
  EXPECT_NEAR(c.x(), -139.975, 1e-6);
  EXPECT_NEAR(c.y(), -39.975, 1e-6);
  EXPECT_NEAR(c.z(), -3.95, 1e-6);
}

TEST(VoxelCenterTest, OutOfBoundsThrows) {
  EXPECT_THROW(voxel_center({10, 0, 0}, kSmall), RangeError);
  EXPECT_THROW(voxel_center({0, -1, 0}, kSmall), RangeError);
}

TEST(VoxelGridPropertyTest, VoxelizingCentersIsIdempotent) {
  std::mt19937_64 rng(7);
  for (const auto& cfg : {GridConfig::full_scale(), GridConfig::desk(),
                          MakeConfig({-3.3f, 1.7f, -0.2f}, {0.3f, 0.7f, 0.11f}, {20, 9, 31})}) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto grid = testing::random_grid(rng, cfg, 2000);
      PointCloud centers;
      for (const Coord& c : grid.coords()) centers.points.push_back(voxel_center(c, cfg));
      EXPECT_EQ(voxelize(centers, cfg), grid);
    }
  }
}

TEST(VoxelGridPropertyTest, KeptPointsLieWithinHalfAVoxelOfTheirCenter) {
  std::mt19937_64 rng(8);
  const auto cfg = MakeConfig({-1, -2, -0.5f}, {0.2f, 0.3f, 0.1f}, {10, 10, 10});
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 5000; ++i) {
    const Eigen::Vector3d p(u(rng), u(rng), u(rng));
    PointCloud one;
    one.points = {p};
    const auto g = voxelize(one, cfg);
    if (g.empty()) continue;
    const Eigen::Vector3d d = (p - voxel_center(g.coords()[0], cfg)).cwiseAbs();
    const Eigen::Vector3d half = 0.5 * cfg.voxel_size.cast<double>();
    EXPECT_TRUE(((d - half).array() <= 1e-9).all()) << p.transpose();
  }
}

TEST(MergeGridsTest, UnionAndIdentity) {
  const SparseVoxelGrid a(kSmall, {{0, 0, 0}, {1, 0, 0}});
  const SparseVoxelGrid b(kSmall, {{1, 0, 0}, {2, 0, 0}});
  const std::vector<SparseVoxelGrid> ab{a, b};
  const auto merged = merge_grids(ab);
  EXPECT_EQ(merged.size(), 3u);
  EXPECT_EQ(merged.config(), kSmall);
  const std::vector<SparseVoxelGrid> just_a{a};
  EXPECT_EQ(merge_grids(just_a), a);
}

TEST(MergeGridsTest, MismatchedConfigsThrow) {
  auto other = kSmall;
  other.origin.x() = 1.0f;
  const std::vector<SparseVoxelGrid> grids{SparseVoxelGrid(kSmall), SparseVoxelGrid(other)};
  EXPECT_THROW(merge_grids(grids), IncompatibleGridError);
}

TEST(MergeGridsPropertyTest, MatchesBruteForceUnionUnderPermutation) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SparseVoxelGrid> grids;
    std::set<Coord> oracle;
    const int k = 1 + trial % 5;
    for (int i = 0; i < k; ++i) {
      grids.push_back(testing::random_grid(rng, kSmall, 300));
      for (const Coord& c : grids.back().coords()) oracle.insert(c);
    }
    const auto merged = merge_grids(grids);
    EXPECT_EQ(std::vector<Coord>(merged.coords().begin(), merged.coords().end()),
              std::vector<Coord>(oracle.begin(), oracle.end()));
    std::shuffle(grids.begin(), grids.end(), rng);
    EXPECT_EQ(merge_grids(grids), merged);
    // Idempotence and associativity via nesting.
    const std::vector<SparseVoxelGrid> twice{merged, merged};
    EXPECT_EQ(merge_grids(twice), merged);
    if (grids.size() >= 2) {
      const std::vector<SparseVoxelGrid> head(grids.begin(), grids.begin() + 1);
      const std::vector<SparseVoxelGrid> tail(grids.begin() + 1, grids.end());
      const std::vector<SparseVoxelGrid> nested{merge_grids(head), merge_grids(tail)};
      EXPECT_EQ(merge_grids(nested), merged);
    }
  }
}

TEST(GridDimsCheckTest, FullScaleResolution) {
  EXPECT_EQ(grid_dims_check(GridConfig::full_scale(), {280, 80, 4}), Dims(5600, 1600, 40));
}

TEST(GridDimsCheckTest, UnitAndDeskGrids) {
  const auto unit = GridConfig::from_extent({0, 0, 0}, {1, 1, 1}, {1, 1, 1});
  EXPECT_EQ(grid_dims_check(unit, {1, 1, 1}), Dims(1, 1, 1));
  EXPECT_EQ(grid_dims_check(GridConfig::desk(), {64 * 0.05, 64 * 0.05, 8 * 0.10}), Dims(64, 64, 8));
}

TEST(GridDimsCheckTest, MismatchedExtentThrows) {
  EXPECT_THROW(grid_dims_check(kSmall, {2.0, 0.5, 1.0}), ConfigError);
  EXPECT_THROW(grid_dims_check(kSmall, {0.5, 0.5, 0.5}), ConfigError);
  EXPECT_NO_THROW(grid_dims_check(kSmall, {0.5, 0.5, 1.0}));
}

TEST(SparseVoxelGridTest, RejectsOutOfBoundsAndDeduplicates) {
  EXPECT_THROW(SparseVoxelGrid(kSmall, {{10, 0, 0}}), RangeError);
  const SparseVoxelGrid g(kSmall, {{3, 0, 0}, {1, 0, 0}, {3, 0, 0}});
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g.coords()[0], (Coord{1, 0, 0}));
}

TEST(CenterFeaturesTest, SingleVoxelAndEmpty) {
  const auto unit = MakeConfig({0, 0, 0}, {1, 1, 1}, {4, 4, 4});
  const auto t = center_features(SparseVoxelGrid(unit, {{0, 0, 0}}));
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.width(), 3);
  EXPECT_EQ(t.features().row(0), Eigen::RowVector3f(0.5f, 0.5f, 0.5f));
  const auto e = center_features(SparseVoxelGrid(unit));
  EXPECT_TRUE(e.empty());
  EXPECT_EQ(e.width(), 3);
}

TEST(CenterFeaturesTest, EverySiteCarriesItsVoxelCenter) {
  std::mt19937_64 rng(5);
  const auto grid = testing::random_grid(rng, GridConfig::full_scale(), 5000);
  const auto t = center_features<double>(grid);
  ASSERT_EQ(t.size(), grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(t.coords()[i], grid.coords()[i]);
    const Eigen::Vector3d expect = grid.config().origin.cast<double>() +
        (Eigen::Vector3d(grid.coords()[i].x, grid.coords()[i].y, grid.coords()[i].z).array() + 0.5)
            .matrix()
            .cwiseProduct(grid.config().voxel_size.cast<double>());
    EXPECT_TRUE(t.features().row(static_cast<Eigen::Index>(i)).transpose().isApprox(expect, 1e-12));
  }
}

TEST(PointCloudIoTest, TextAndRawLoaders) {
  const auto dir = std::filesystem::temp_directory_path() / "s2s_grid_io";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "c.xyz");
    f << "# header\n1 2 3\n\n-0.5 0.25 4e-1\n";
  }
  const auto text = load_cloud((dir / "c.xyz").string());
  ASSERT_EQ(text.size(), 2u);
  EXPECT_EQ(text.points[1], Eigen::Vector3d(-0.5, 0.25, 0.4));

  save_raw((dir / "c.bin").string(), text);
  EXPECT_EQ(std::filesystem::file_size(dir / "c.bin"), 4u + 2 * 12);
  const auto raw = load_cloud((dir / "c.bin").string());
  ASSERT_EQ(raw.size(), 2u);
  EXPECT_EQ(raw.points[0], Eigen::Vector3d(1, 2, 3));

  {
    std::ofstream f(dir / "bad.xyz");
    f << "1 2\n";
  }
  EXPECT_THROW(load_cloud((dir / "bad.xyz").string()), ParseError);
  {
    std::ofstream f(dir / "bad.bin", std::ios::binary);
    const unsigned char header[4] = {5, 0, 0, 0};
    f.write(reinterpret_cast<const char*>(header), 4);
  }
  EXPECT_THROW(load_cloud((dir / "bad.bin").string()), ParseError);
}

}  // namespace
}  // namespace s2s
