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

#include <optional>

#include <nlohmann/json.hpp>

#include "atomics/core/types.hpp"

namespace atomics::align {

/// Controller tuning. Lengths in µm, powers in watts.
struct AlignConfig {
  double dark_floor = 1e-9;
  std::optional<double> first_light_threshold;  // default 10 × dark_floor
  double spiral_pitch = 2.5;
  double spiral_max_radius = 25.0;
  int scan_points = 7;
  double scan_half_range = 3.75;
  double z_scan_half_range = 10.0;
  double lateral_floor = 1.5;   // smallest lateral half range
  double z_floor = 10.0;        // smallest axial half range
  double convergence_tol = 0.05;
  double z_convergence_tol = 1.0;
  int max_iterations = 10;
  double plateau_db = 0.02;  // a round gaining less than this ends fine alignment
  double z_keepout = 3.0;
  double contact_plane = 0.0;  // fiber Z at which the tip touches the facet
  double lock_threshold_db = 1.0;
  int retry_budget = 2;
  double retract = 20.0;
  double preload = 1.0;  // approach distance for backlash-free positioning

  // Vision servo.
  double coarse_target = 3.0;
  double coarse_deadband = 1.0;
  double camera_standoff = 40.0;  // camera sits this far outside the facet
  int coarse_max_iterations = 8;
  double coupler_gate = 50.0;  // widened by 3 sigma of the chip stage uncertainty
  int detection_max_misses = 5;
  double roi_half_width = 110.0;
  double roi_half_height = 70.0;
  Vec2 chip_origin{0.0, 0.0};  // bench position of chip coordinates when the chiplet stage reads 0

  // Approach.
  double approach_step = 5.0;
  double approach_min_step = 0.25;

  int polarization_steps = 12;
  double flat_ratio = 1.05;

  int stability_window = 20;
  double stability_rsd = 0.02;
  int stability_attempts = 3;

  double realign_half_range = 0.75;
  int realign_max_iterations = 4;

  double threshold() const { return first_light_threshold.value_or(10.0 * dark_floor); }

  /// Reads the `align` section; unspecified keys keep their defaults.
  /// Throws MalformedConfig.
  static AlignConfig from_json(const nlohmann::json& section);
  void validate() const;
};

}  // namespace atomics::align
