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

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "atomics/align/config.hpp"
#include "atomics/align/controller.hpp"
#include "atomics/campaign/campaign.hpp"
#include "atomics/hal/registry.hpp"
#include "atomics/hal/topology.hpp"
#include "atomics/monitor/monitor.hpp"
#include "atomics/sim/sim_bench.hpp"

namespace atomics::campaign {

/// Campaign defaults from the `campaign` config section.
struct CampaignSettings {
  std::vector<AcquisitionSpec> acquisitions;
  Traversal traversal = Traversal::MoveChiplet;
  std::string pressure_label = "ambient";
  std::optional<double> input_power_w;  // default: the simulated laser power
  std::optional<Vec2> left_tip_origin;  // default: the simulated geometry
  std::optional<Vec2> right_tip_origin;
  double telemetry_period = 1.0;
  std::filesystem::path runs_dir = "runs";
  bool fail_fast = false;
};

/// The whole bench config file:
///
///     {"drivers": {"Stage": "simbench", ...},   // default: every role simbench
///      "time_accel": 0,                          // 0: unpaced simulation
///      "sim": {...}, "topology": {...}, "align": {...}, "monitor": {...},
///      "campaign": {...}, "templates_dir": "...", "calibration": "..."}
///
/// Relative paths resolve against the config file's directory.
struct EngineConfig {
  std::map<hal::Role, std::string> drivers;  // unlisted roles bind to simbench
  double time_accel = 0.0;
  sim::SimSetup sim;
  hal::BenchTopology topology = hal::BenchTopology::defaults();
  align::AlignConfig align;
  monitor::MonitorConfig monitor;
  CampaignSettings campaign;
  std::optional<std::filesystem::path> templates_dir;
  std::optional<std::filesystem::path> calibration;

  /// Throws MalformedConfig.
  static EngineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static EngineConfig load(const std::filesystem::path& path);
};

/// A bench built from an EngineConfig plus its controller. Only the
/// "simbench" driver family is registered in this build.
class Engine {
 public:
  explicit Engine(const EngineConfig& config);

  const EngineConfig& config() const { return config_; }
  hal::DriverRegistry& registry() { return registry_; }
  hal::Bench& bench() { return *bench_; }
  /// Ground truth of the simulated bench.
  sim::SimBench* sim() { return sim_.get(); }
  align::Controller& controller() { return *controller_; }

  /// Campaign options filled from the config and the simulated geometry.
  CampaignOptions campaign_options() const;
  align::DeviceTarget target(const LayoutDevice& d) const { return {d.id, d.input, d.output}; }

 private:
  EngineConfig config_;
  hal::DriverRegistry registry_;
  std::shared_ptr<sim::SimBench> sim_;
  std::unique_ptr<hal::Bench> bench_;
  std::unique_ptr<align::Controller> controller_;
};

}  // namespace atomics::campaign
