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

#include "atomics/campaign/engine.hpp"

#include <fstream>

#include "atomics/core/error.hpp"
#include "atomics/sim/templates.hpp"
#include "atomics/vision/calibration.hpp"
#include "atomics/vision/detection.hpp"

namespace atomics::campaign {

namespace {

Vec2 read_vec2(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::MalformedConfig, "expected [x, y], got " + j.dump());
  return {j[0].get<double>(), j[1].get<double>()};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

CampaignSettings read_campaign(const nlohmann::json& j, const std::filesystem::path& base) {
  CampaignSettings s;
  if (j.is_null()) return s;
  if (!j.is_object()) throw Error(ErrorCode::MalformedConfig, "campaign: expected an object");
  try {
    if (j.contains("acquisitions"))
      for (const auto& a : j.at("acquisitions")) s.acquisitions.push_back(AcquisitionSpec::from_json(a));
    if (j.contains("traversal")) {
      const auto t = parse_traversal(j.at("traversal").get<std::string>());
      if (!t) throw Error(ErrorCode::MalformedConfig, "campaign.traversal: MoveChiplet or MoveFibers");
      s.traversal = *t;
    }
    s.pressure_label = j.value("pressure_label", s.pressure_label);
    if (j.contains("input_power_w")) s.input_power_w = j.at("input_power_w").get<double>();
    if (j.contains("left_tip_origin")) s.left_tip_origin = read_vec2(j.at("left_tip_origin"));
    if (j.contains("right_tip_origin")) s.right_tip_origin = read_vec2(j.at("right_tip_origin"));
    s.telemetry_period = j.value("telemetry_period", s.telemetry_period);
    if (j.contains("runs_dir")) s.runs_dir = resolve(base, j.at("runs_dir").get<std::string>());
    s.fail_fast = j.value("fail_fast", s.fail_fast);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedConfig, std::string("campaign: ") + e.what());
  }
  if (s.input_power_w && !(*s.input_power_w > 0))
    throw Error(ErrorCode::MalformedConfig, "campaign.input_power_w must be > 0");
  if (!(s.telemetry_period >= 0)) throw Error(ErrorCode::MalformedConfig, "campaign.telemetry_period must be >= 0");
  return s;
}

}  // namespace

EngineConfig EngineConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedConfig, "config: expected an object");
  EngineConfig c;
  auto section = [&](const char* key) { return j.contains(key) ? j.at(key) : nlohmann::json(); };
  try {
    if (j.contains("drivers")) {
      for (const auto& [role, name] : j.at("drivers").items()) {
        const auto r = hal::parse_role(role);
        if (!r) throw Error(ErrorCode::MalformedConfig, "drivers: unknown role " + role);
        c.drivers[*r] = name.get<std::string>();
      }
    }
    c.time_accel = j.value("time_accel", 0.0);
    if (j.contains("templates_dir")) c.templates_dir = resolve(base, j.at("templates_dir").get<std::string>());
    if (j.contains("calibration")) c.calibration = resolve(base, j.at("calibration").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedConfig, std::string("config: ") + e.what());
  }
  if (c.time_accel < 0) throw Error(ErrorCode::MalformedConfig, "time_accel must be >= 0");
  c.sim = sim::SimSetup::from_json(section("sim"));
  if (j.contains("topology")) c.topology = hal::BenchTopology::from_json(j.at("topology"));
  if (j.contains("align")) c.align = align::AlignConfig::from_json(j.at("align"));
  if (j.contains("monitor")) c.monitor = monitor::MonitorConfig::from_json(j.at("monitor"));
  c.campaign = read_campaign(section("campaign"), base);
  return c;
}

EngineConfig EngineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MalformedConfig, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedConfig, path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

Engine::Engine(const EngineConfig& config) : config_(config) {
  sim_ = std::make_shared<sim::SimBench>(config_.sim);
  sim_->clock()->set_time_accel(config_.time_accel);
  for (hal::AxisId id : hal::all_axes()) sim_->reset_axis(id, config_.topology[id].park);
  registry_.add_provider(sim::kProviderName, sim::make_provider(sim_));
  for (hal::Role role : hal::kAllRoles) {
    const auto it = config_.drivers.find(role);
    registry_.register_driver(role, it == config_.drivers.end() ? sim::kProviderName : it->second);
  }
  bench_ = std::make_unique<hal::Bench>(registry_.instantiate(), config_.topology);
  bench_->set_open_loop_uncertainty(config_.sim.physics.step_noise_rel, config_.sim.physics.backlash);

  std::vector<vision::Template> templates = config_.templates_dir
                                                ? vision::load_templates(*config_.templates_dir)
                                                : sim::glyph_templates(config_.sim.render.pixels_per_um);
  controller_ = std::make_unique<align::Controller>(*bench_, config_.align, std::move(templates), config_.monitor);
  if (config_.calibration && std::filesystem::exists(*config_.calibration))
    controller_->set_calibration(vision::load_calibration(*config_.calibration));
}

CampaignOptions Engine::campaign_options() const {
  const CampaignSettings& s = config_.campaign;
  CampaignOptions o;
  o.traversal = s.traversal;
  o.fail_fast = s.fail_fast;
  o.pressure_label = s.pressure_label;
  o.input_power_w = s.input_power_w.value_or(config_.sim.physics.p_in);
  o.left_tip_origin = s.left_tip_origin.value_or(config_.sim.left_origin);
  o.right_tip_origin = s.right_tip_origin.value_or(config_.sim.right_origin);
  o.telemetry_period = s.telemetry_period;
  return o;
}

}  // namespace atomics::campaign
