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

#include "s2s/box.hpp"

#include "s2s/errors.hpp"

namespace s2s {

std::string_view class_name(ObjectClass c) {
  switch (c) {
    case ObjectClass::kCar: return "Car";
    case ObjectClass::kVan: return "Van";
    case ObjectClass::kPedestrian: return "Pedestrian";
    case ObjectClass::kCyclist: return "Cyclist";
    case ObjectClass::kMotorbike: return "Motorbike";
  }
  return "Unknown";
}

std::optional<ObjectClass> parse_class(std::string_view name) {
  for (ObjectClass c : kAllClasses) {
    if (class_name(c) == name) return c;
  }
  return std::nullopt;
}

void Box3D::validate() const {
  if (!center.allFinite() || !size.allFinite() || !std::isfinite(yaw)) {
    throw ConfigError("box: non-finite field");
  }
  if ((size.array() <= 0.0).any()) throw ConfigError("box: sizes must be > 0");
  if (!(yaw > -std::numbers::pi && yaw <= std::numbers::pi)) {
    throw ConfigError("box: yaw must lie in (-pi, pi]");
  }
  if (!(confidence >= 0.0 && confidence <= 1.0)) throw ConfigError("box: confidence outside [0, 1]");
}

std::array<Eigen::Vector2d, 4> Box3D::bev_corners() const {
  const double c = std::cos(yaw), s = std::sin(yaw);
  const Eigen::Vector2d ax(c * 0.5 * size.x(), s * 0.5 * size.x());
  const Eigen::Vector2d ay(-s * 0.5 * size.y(), c * 0.5 * size.y());
  const Eigen::Vector2d ctr = center.head<2>();
  return {ctr - ax - ay, ctr + ax - ay, ctr + ax + ay, ctr - ax + ay};
}

}  // namespace s2s
