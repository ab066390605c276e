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

#include "atomics/sim/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "atomics/core/error.hpp"

namespace atomics::sim {

void SimConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::MalformedConfig, "sim: " + what); };
  if (!(p_in > 0)) fail("p_in must be > 0");
  if (!(eta0 > 0 && eta0 <= 1)) fail("eta0 must lie in (0, 1]");
  if (!(w0 > 0)) fail("w0 must be > 0");
  if (!(z_r > 0)) fail("z_r must be > 0");
  if (!(eps_pol >= 0 && eps_pol < 1)) fail("eps_pol must lie in [0, 1)");
  if (!(p_dark > 0)) fail("p_dark must be > 0");
  if (!(sigma_rel >= 0)) fail("sigma_rel must be >= 0");
  if (!(drift_theta > 0)) fail("drift_theta must be > 0");
  if (!(drift_sigma >= 0)) fail("drift_sigma must be >= 0");
  if (!(backlash >= 0)) fail("backlash must be >= 0");
  if (!(step_noise_rel >= 0)) fail("step_noise_rel must be >= 0");
  if (!(working_distance > 0)) fail("working_distance must be > 0");
  if (!(sample_period > 0) || !(frame_period > 0)) fail("sample and frame periods must be > 0");
  if (!(piezo_speed > 0) || !(scope_speed > 0)) fail("stage speeds must be > 0");
  if (!(time_accel >= 0)) fail("time_accel must be >= 0");
}

double SimConfig::stationary_drift_stddev() const { return drift_sigma / std::sqrt(2.0 * drift_theta); }

SimConfig SimConfig::from_json(const nlohmann::json& j) {
  SimConfig c;
  if (j.is_null()) return c;
  auto get = [&](const char* key, double& field) {
    if (j.contains(key)) field = j.at(key).get<double>();
  };
  try {
    get("p_in", c.p_in);
    get("eta0", c.eta0);
    get("w0", c.w0);
    get("z_r", c.z_r);
    get("eps_pol", c.eps_pol);
    get("theta_opt", c.theta_opt);
    get("p_dark", c.p_dark);
    get("sigma_rel", c.sigma_rel);
    get("drift_theta", c.drift_theta);
    get("drift_sigma", c.drift_sigma);
    get("backlash", c.backlash);
    get("step_noise_rel", c.step_noise_rel);
    get("working_distance", c.working_distance);
    get("facet_plane_z", c.facet_plane_z);
    get("tilt_coupling", c.tilt_coupling);
    get("sample_period", c.sample_period);
    get("frame_period", c.frame_period);
    get("piezo_speed", c.piezo_speed);
    get("scope_speed", c.scope_speed);
    get("settle_time", c.settle_time);
    get("time_accel", c.time_accel);
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedConfig, std::string("sim: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json SimConfig::to_json() const {
  return {{"p_in", p_in},
          {"eta0", eta0},
          {"w0", w0},
          {"z_r", z_r},
          {"eps_pol", eps_pol},
          {"theta_opt", theta_opt},
          {"p_dark", p_dark},
          {"sigma_rel", sigma_rel},
          {"drift_theta", drift_theta},
          {"drift_sigma", drift_sigma},
          {"backlash", backlash},
          {"step_noise_rel", step_noise_rel},
          {"seed", seed},
          {"working_distance", working_distance},
          {"facet_plane_z", facet_plane_z},
          {"tilt_coupling", tilt_coupling},
          {"sample_period", sample_period},
          {"frame_period", frame_period},
          {"piezo_speed", piezo_speed},
          {"scope_speed", scope_speed},
          {"settle_time", settle_time},
          {"time_accel", time_accel}};
}

double facet_transfer(const FacetOffset& o, const SimConfig& cfg) {
  const double u = o.z / cfg.z_r;
  const double axial = 1.0 / (1.0 + u * u);
  const double w_eff_sq = cfg.w0 * cfg.w0 * (1.0 + u * u);
  return axial * std::exp(-(o.x * o.x + o.y * o.y) / w_eff_sq);
}

double polarization_factor(double paddle_deg, const SimConfig& cfg) {
  const double c = std::cos((paddle_deg - cfg.theta_opt) * std::numbers::pi / 180.0);
  return cfg.eps_pol + (1.0 - cfg.eps_pol) * c * c;
}

namespace {
double with_noise(double signal, const SimConfig& cfg, Rng* noise) {
  if (noise && cfg.sigma_rel > 0) signal *= 1.0 + cfg.sigma_rel * noise->normal();
  return cfg.p_dark + std::max(0.0, signal);
}
}  // namespace

double coupled_power(const FacetOffset& offset, double paddle_deg, const SimConfig& cfg, Rng* noise) {
  const double signal =
      cfg.p_in * cfg.eta0 * cfg.eta0 * polarization_factor(paddle_deg, cfg) * facet_transfer(offset, cfg);
  return with_noise(signal, cfg, noise);
}

double coupled_power(const FacetOffset& input, const FacetOffset& output, double paddle_deg, const SimConfig& cfg,
                     Rng* noise) {
  const double signal = cfg.p_in * cfg.eta0 * cfg.eta0 * polarization_factor(paddle_deg, cfg) *
                        facet_transfer(input, cfg) * facet_transfer(output, cfg);
  return with_noise(signal, cfg, noise);
}

DriftState step_drift(const DriftState& state, double dt, const SimConfig& cfg, Rng& rng) {
  DriftState next = state;
  next.last_update = state.last_update + dt;
  if (cfg.drift_sigma == 0.0) return next;
  const double decay = std::exp(-cfg.drift_theta * dt);
  // -expm1 keeps precision when theta*dt is tiny.
  const double spread = cfg.drift_sigma * std::sqrt(-std::expm1(-2.0 * cfg.drift_theta * dt) / (2.0 * cfg.drift_theta));
  for (Vec2& o : next.offset) {
    o.x = o.x * decay + spread * rng.normal();
    o.y = o.y * decay + spread * rng.normal();
  }
  return next;
}

double apply_stage_step(PiezoAxis& axis, double requested, const SimConfig& cfg, Rng& rng) {
  if (requested == 0.0) return 0.0;
  const int direction = requested > 0 ? 1 : -1;
  if (axis.last_direction != 0 && direction != axis.last_direction) axis.slack = cfg.backlash;
  axis.last_direction = direction;

  double travel = std::abs(requested);
  if (cfg.step_noise_rel > 0) travel *= 1.0 + cfg.step_noise_rel * rng.normal();
  travel = std::max(0.0, travel);
  const double taken = std::min(axis.slack, travel);
  axis.slack -= taken;
  return direction * (travel - taken);
}

}  // namespace atomics::sim
