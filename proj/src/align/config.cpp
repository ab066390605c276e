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

#include "atomics/align/config.hpp"

#include "atomics/core/error.hpp"

namespace atomics::align {

namespace {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

AlignConfig AlignConfig::from_json(const nlohmann::json& j) {
  AlignConfig c;
  if (!j.is_object()) throw Error(ErrorCode::MalformedConfig, "align: expected an object");
  try {
    read(j, "dark_floor", c.dark_floor);
    if (j.contains("first_light_threshold")) c.first_light_threshold = j.at("first_light_threshold").get<double>();
    read(j, "spiral_pitch", c.spiral_pitch);
    read(j, "spiral_max_radius", c.spiral_max_radius);
    read(j, "scan_points", c.scan_points);
    read(j, "scan_half_range", c.scan_half_range);
    read(j, "z_scan_half_range", c.z_scan_half_range);
    read(j, "lateral_floor", c.lateral_floor);
    read(j, "z_floor", c.z_floor);
    read(j, "convergence_tol", c.convergence_tol);
    read(j, "z_convergence_tol", c.z_convergence_tol);
    read(j, "max_iterations", c.max_iterations);
    read(j, "plateau_db", c.plateau_db);
    read(j, "z_keepout", c.z_keepout);
    read(j, "contact_plane", c.contact_plane);
    read(j, "lock_threshold_db", c.lock_threshold_db);
    read(j, "retry_budget", c.retry_budget);
    read(j, "retract", c.retract);
    read(j, "preload", c.preload);
    read(j, "coarse_target", c.coarse_target);
    read(j, "coarse_deadband", c.coarse_deadband);
    read(j, "camera_standoff", c.camera_standoff);
    read(j, "coarse_max_iterations", c.coarse_max_iterations);
    read(j, "coupler_gate", c.coupler_gate);
    read(j, "detection_max_misses", c.detection_max_misses);
    read(j, "roi_half_width", c.roi_half_width);
    read(j, "roi_half_height", c.roi_half_height);
    if (j.contains("chip_origin")) {
      const auto& o = j.at("chip_origin");
      c.chip_origin = {o.at(0).get<double>(), o.at(1).get<double>()};
    }
    read(j, "approach_step", c.approach_step);
    read(j, "approach_min_step", c.approach_min_step);
    read(j, "polarization_steps", c.polarization_steps);
    read(j, "flat_ratio", c.flat_ratio);
    read(j, "stability_window", c.stability_window);
    read(j, "stability_rsd", c.stability_rsd);
    read(j, "stability_attempts", c.stability_attempts);
    read(j, "realign_half_range", c.realign_half_range);
    read(j, "realign_max_iterations", c.realign_max_iterations);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedConfig, std::string("align: ") + e.what());
  }
  c.validate();
  return c;
}

void AlignConfig::validate() const {
  auto positive = [](double v) { return v > 0; };
  const bool ok = positive(dark_floor) && positive(threshold()) && positive(spiral_pitch) &&
                  positive(spiral_max_radius) && scan_points >= 3 && positive(scan_half_range) &&
                  positive(z_scan_half_range) && positive(lateral_floor) && positive(z_floor) &&
                  positive(convergence_tol) && positive(z_convergence_tol) && max_iterations > 0 && plateau_db >= 0 &&
                  positive(z_keepout) && positive(lock_threshold_db) && retry_budget >= 0 && positive(retract) &&
                  positive(preload) && positive(coarse_target) && positive(coarse_deadband) &&
                  coarse_deadband <= coarse_target && positive(camera_standoff) && coarse_max_iterations > 0 &&
                  positive(coupler_gate) && detection_max_misses >= 0 && positive(roi_half_width) &&
                  positive(roi_half_height) && positive(approach_step) && positive(approach_min_step) &&
                  polarization_steps >= 3 && flat_ratio > 1 && stability_window >= 2 && positive(stability_rsd) &&
                  stability_attempts > 0 && positive(realign_half_range) && realign_max_iterations > 0;
  if (!ok) throw Error(ErrorCode::MalformedConfig, "align: parameter out of range");
}

}  // namespace atomics::align
