// Copyright 2026 The atomics Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "atomics/hal/topology.hpp"

#include <cmath>
#include <string>

#include "atomics/core/error.hpp"

namespace atomics::hal {

BenchTopology BenchTopology::defaults() {
  BenchTopology t;
  for (AxisId id : all_axes()) {
    AxisConfig& c = t[id];
    switch (id.tower()) {
      case Tower::LeftFiber:
      case Tower::RightFiber:
      case Tower::ChipletStage:
        c.limits = {-2500.0, 2500.0};
        break;
      case Tower::Microscope:
        c.limits = id.axis() == AxisName::Z ? SoftLimits{-12500.0, 12500.0} : SoftLimits{-25000.0, 25000.0};
        break;
      case Tower::Goniometer:
        c.limits = {0.0, kGoniometerTravelDeg};
        break;
    }
    c.park = 0.0;
  }
  return t;
}

void BenchTopology::validate() const {
  for (AxisId id : all_axes()) {
    const AxisConfig& c = (*this)[id];
    if (!(c.limits.min < c.limits.max))
      throw Error(ErrorCode::MalformedConfig, id.name() + ": soft limit min must be below max");
    if (!c.limits.contains(c.park))
      throw Error(ErrorCode::MalformedConfig, id.name() + ": park position outside soft limits");
  }
  if (std::abs((*this)[axes::tilt].limits.span() - kGoniometerTravelDeg) > 1e-9)
    throw Error(ErrorCode::MalformedConfig, "goniometer travel must span exactly 10 degrees");
}

BenchTopology BenchTopology::from_json(const nlohmann::json& section) {
  BenchTopology t = defaults();
  if (section.is_null()) return t;
  if (!section.is_object() || !section.contains("axes") || !section["axes"].is_array())
    throw Error(ErrorCode::MalformedConfig, "topology.axes must be an array");
  for (const auto& entry : section["axes"]) {
    if (!entry.is_object() || !entry.contains("tower") || !entry.contains("axis"))
      throw Error(ErrorCode::MalformedConfig, "topology axis entries need 'tower' and 'axis'");
    auto tower = parse_tower(entry["tower"].get<std::string>());
    auto axis = parse_axis_name(entry["axis"].get<std::string>());
    if (!tower || !axis)
      throw Error(ErrorCode::MalformedConfig, "unknown axis " + entry["tower"].dump() + "." + entry["axis"].dump());
    auto id = AxisId::make(*tower, *axis);
    if (!id)
      throw Error(ErrorCode::MalformedConfig,
                  std::string(to_string(*tower)) + " has no " + std::string(to_string(*axis)) + " axis");
    AxisConfig& c = t[*id];
    try {
      if (entry.contains("min")) c.limits.min = entry["min"].get<double>();
      if (entry.contains("max")) c.limits.max = entry["max"].get<double>();
      if (entry.contains("park")) c.park = entry["park"].get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedConfig, id->name() + ": " + e.what());
    }
  }
  t.validate();
  return t;
}

}  // namespace atomics::hal
