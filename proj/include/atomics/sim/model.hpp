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
#include <cstdint>

#include <nlohmann/json.hpp>

#include "atomics/core/rng.hpp"
#include "atomics/core/types.hpp"

namespace atomics::sim {

/// Physical parameters of the simulated bench. Lengths in µm, powers in W,
/// angles in degrees, times in s.
struct SimConfig {
  double p_in = 1e-3;          // laser power
  double eta0 = 0.5;           // peak coupling efficiency per facet
  double w0 = 2.5;             // effective capture waist
  double z_r = 20.0;           // effective Rayleigh range
  double eps_pol = 0.05;       // polarization extinction floor
  double theta_opt = 37.0;     // optimal paddle angle
  double p_dark = 1e-9;        // detector dark floor
  double sigma_rel = 0.01;     // relative multiplicative power noise
  double drift_theta = 1.0 / 86400.0;  // OU mean-reversion rate
  // OU diffusion; stationary stddev 2 µm per component.
  double drift_sigma = 2.0 * 0.0048112522432468815;
  double backlash = 0.2;
  double step_noise_rel = 0.02;
  std::uint64_t seed = 1;

  // Bench geometry and timing.
  double working_distance = 8.0;  // optimum sits this far before the facet plane
  double facet_plane_z = 0.0;     // fiber Z (stage coordinates) touching the facet
  double tilt_coupling = 0.1;     // µm of fiber offset per degree of tilt
  double sample_period = 0.1;     // power meter integration time
  double frame_period = 0.05;
  double piezo_speed = 1000.0;    // µm/s
  double scope_speed = 2000.0;    // µm/s
  double settle_time = 0.01;
  double time_accel = 0.0;        // 0 runs unpaced; x > 0 paces to wall time / x

  /// Throws MalformedConfig unless P_in, w0, z_R, P_dark, drift_theta > 0,
  /// eta0 ∈ (0,1], eps_pol ∈ [0,1) and the noise/drift/backlash terms ≥ 0.
  void validate() const;

  double stationary_drift_stddev() const;

  static SimConfig from_json(const nlohmann::json& section);
  nlohmann::json to_json() const;
};

/// Misalignment of one fiber relative to its coupler: lateral (x, y) and
/// axial z, all µm.
using FacetOffset = Vec3;

/// Fraction of light one facet transfers at the given offset: axial
/// Lorentzian times a lateral Gaussian whose width grows with |z|.
double facet_transfer(const FacetOffset& offset, const SimConfig& cfg);

double polarization_factor(double paddle_deg, const SimConfig& cfg);

/// Power at the detector with the other facet ideal. Noise (when `noise` is
/// given) multiplies the signal above the dark floor by (1 + σ_rel·g).
double coupled_power(const FacetOffset& offset, double paddle_deg, const SimConfig& cfg, Rng* noise = nullptr);

/// Fiber-chip-fiber power with both facets.
double coupled_power(const FacetOffset& input, const FacetOffset& output, double paddle_deg, const SimConfig& cfg,
                     Rng* noise = nullptr);

/// Lateral drift of both fiber towers.
struct DriftState {
  std::array<Vec2, 2> offset{};  // [left, right] µm
  double last_update = 0.0;
};

/// Exact Ornstein–Uhlenbeck transition over dt for every component.
DriftState step_drift(const DriftState& state, double dt, const SimConfig& cfg, Rng& rng);

/// Direction memory of one open-loop piezo axis.
struct PiezoAxis {
  int last_direction = 0;
  double slack = 0.0;  // backlash still to be taken up
};

/// Actual displacement for a requested open-loop step: multiplicative step
/// noise, then a backlash deadband that has to be taken up after every
/// direction reversal.
double apply_stage_step(PiezoAxis& axis, double requested, const SimConfig& cfg, Rng& rng);

}  // namespace atomics::sim
