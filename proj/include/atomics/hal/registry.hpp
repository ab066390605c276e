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

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "atomics/hal/axis.hpp"
#include "atomics/hal/drivers.hpp"

namespace atomics::hal {

using DriverParams = nlohmann::json;

/// One instance per role, ready for the command loop.
struct DriverSet {
  std::unique_ptr<StageDriver> stage;
  std::unique_ptr<PowerMeterDriver> power_meter;
  std::unique_ptr<SwitchDriver> optical_switch;
  std::unique_ptr<PolarizationDriver> polarization;
  std::unique_ptr<CameraDriver> camera;
  std::unique_ptr<TempControllerDriver> temperature;
  std::unique_ptr<DaqDriver> daq;
  std::unique_ptr<GoniometerDriver> goniometer;
  std::shared_ptr<Clock> clock;
};

/// Factories a named driver family offers. A provider may implement only
/// some roles; binding a role it does not implement is UnknownDriver.
struct DriverProvider {
  std::function<std::unique_ptr<StageDriver>(const DriverParams&)> stage;
  std::function<std::unique_ptr<PowerMeterDriver>(const DriverParams&)> power_meter;
  std::function<std::unique_ptr<SwitchDriver>(const DriverParams&)> optical_switch;
  std::function<std::unique_ptr<PolarizationDriver>(const DriverParams&)> polarization;
  std::function<std::unique_ptr<CameraDriver>(const DriverParams&)> camera;
  std::function<std::unique_ptr<TempControllerDriver>(const DriverParams&)> temperature;
  std::function<std::unique_ptr<DaqDriver>(const DriverParams&)> daq;
  std::function<std::unique_ptr<GoniometerDriver>(const DriverParams&)> goniometer;
  std::function<std::shared_ptr<Clock>()> clock;

  bool supports(Role role) const;
};

class DriverRegistry {
 public:
  void add_provider(const std::string& name, DriverProvider provider);
  bool has_provider(const std::string& name) const { return providers_.contains(name); }

  /// Throws CampaignActive while a campaign runs, UnknownDriver when no
  /// provider of that name implements the role.
  void register_driver(Role role, const std::string& driver_name, DriverParams params = {});

  std::optional<std::string> binding(Role role) const;
  std::vector<Role> missing_roles() const;
  bool complete() const { return missing_roles().empty(); }

  void set_campaign_active(bool active) { campaign_active_ = active; }
  bool campaign_active() const { return campaign_active_; }

  /// Builds one driver per role. Throws RegistryIncomplete unless all eight
  /// roles are bound. The clock comes from the Stage provider when it offers
  /// one, otherwise wall time.
  DriverSet instantiate() const;

 private:
  struct Binding {
    std::string driver;
    DriverParams params;
  };

  std::map<std::string, DriverProvider> providers_;
  std::map<Role, Binding> bindings_;
  bool campaign_active_ = false;
};

/// Wall-clock time source.
class SteadyClock final : public Clock {
 public:
  SteadyClock();
  double now() const override;
  void wait(double dt) override;

 private:
  double origin_;
};

}  // namespace atomics::hal
