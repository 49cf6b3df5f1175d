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

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace s2s {

enum class ObjectClass { kCar, kVan, kPedestrian, kCyclist, kMotorbike };

inline constexpr std::array<ObjectClass, 5> kAllClasses = {
    ObjectClass::kCar, ObjectClass::kVan, ObjectClass::kPedestrian, ObjectClass::kCyclist,
    ObjectClass::kMotorbike};

std::string_view class_name(ObjectClass c);
/// Case-sensitive; nullopt for an unknown name.
std::optional<ObjectClass> parse_class(std::string_view name);

/// Maps an angle into (-pi, pi].
inline double normalize_yaw(double yaw) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double y = std::fmod(yaw, kTwoPi);
  if (y <= -std::numbers::pi) y += kTwoPi;
  if (y > std::numbers::pi) y -= kTwoPi;
  return y;
}

/// Yaw-rotated 3D box. `size` is (length along heading, width, height).
struct Box3D {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d size = Eigen::Vector3d::Ones();
  double yaw = 0.0;
  ObjectClass label = ObjectClass::kCar;
  double confidence = 1.0;  // meaningful for detections only

  /// Throws ConfigError for non-positive sizes, yaw outside (-pi, pi] or
  /// confidence outside [0, 1].
  void validate() const;

  /// Closed containment test in the box frame.
  bool contains(const Eigen::Vector3d& p) const {
    const Eigen::Vector2d d = p.head<2>() - center.head<2>();
    const double c = std::cos(yaw), s = std::sin(yaw);
    const double lx = c * d.x() + s * d.y();
    const double ly = -s * d.x() + c * d.y();
    return std::abs(lx) <= 0.5 * size.x() && std::abs(ly) <= 0.5 * size.y() &&
           std::abs(p.z() - center.z()) <= 0.5 * size.z();
  }

  /// Footprint corners, counter-clockwise.
  std::array<Eigen::Vector2d, 4> bev_corners() const;

  double volume() const { return size.prod(); }
};

}  // namespace s2s
