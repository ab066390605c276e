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

#pragma once

#include <array>

#include <nlohmann/json.hpp>

#include "atomics/hal/axis.hpp"

namespace atomics::hal {

struct AxisConfig {
  SoftLimits limits;
  double park = 0.0;
};

/// Soft limits and park positions for all twelve axes.
class BenchTopology {
 public:
  /// Defaults sized for the simulated bench: ±2.5 mm piezo travel,
  /// ±25 mm microscope travel, 0–10° goniometer.
  static BenchTopology defaults();

  /// Reads the `topology` section of the bench config. Unspecified axes keep
  /// their defaults. Throws MalformedConfig for unknown axis names, invalid
  /// tower/axis combinations, min ≥ max, park outside limits, or a
  /// goniometer span other than 10°.
  static BenchTopology from_json(const nlohmann::json& section);

  const AxisConfig& operator[](AxisId id) const { return axes_[id.index()]; }
  AxisConfig& operator[](AxisId id) { return axes_[id.index()]; }

  void validate() const;

 private:
  std::array<AxisConfig, kAxisCount> axes_{};
};

inline constexpr double kGoniometerTravelDeg = 10.0;

}  // namespace atomics::hal
