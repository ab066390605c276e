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

#include "atomics/hal/registry.hpp"

#include <chrono>
#include <thread>

#include "atomics/core/error.hpp"

namespace atomics::hal {

bool DriverProvider::supports(Role role) const {
  switch (role) {
    case Role::Stage: return static_cast<bool>(stage);
    case Role::PowerMeter: return static_cast<bool>(power_meter);
    case Role::Switch: return static_cast<bool>(optical_switch);
    case Role::Polarization: return static_cast<bool>(polarization);
    case Role::Camera: return static_cast<bool>(camera);
    case Role::TempController: return static_cast<bool>(temperature);
    case Role::Daq: return static_cast<bool>(daq);
    case Role::Goniometer: return static_cast<bool>(goniometer);
  }
  return false;
}

void DriverRegistry::add_provider(const std::string& name, DriverProvider provider) {
  providers_[name] = std::move(provider);
}

void DriverRegistry::register_driver(Role role, const std::string& driver_name, DriverParams params) {
  if (campaign_active_)
    throw Error(ErrorCode::CampaignActive, "cannot rebind " + std::string(to_string(role)) + " during a campaign");
  auto it = providers_.find(driver_name);
  if (it == providers_.end() || !it->second.supports(role))
    throw Error(ErrorCode::UnknownDriver,
                "no driver '" + driver_name + "' for role " + std::string(to_string(role)));
  bindings_[role] = Binding{driver_name, std::move(params)};
}

std::optional<std::string> DriverRegistry::binding(Role role) const {
  auto it = bindings_.find(role);
  if (it == bindings_.end()) return std::nullopt;
  return it->second.driver;
}

std::vector<Role> DriverRegistry::missing_roles() const {
  std::vector<Role> missing;
  for (Role r : kAllRoles)
    if (!bindings_.contains(r)) missing.push_back(r);
  return missing;
}

DriverSet DriverRegistry::instantiate() const {
  auto missing = missing_roles();
  if (!missing.empty()) {
    std::string list;
    for (Role r : missing) list += (list.empty() ? "" : ", ") + std::string(to_string(r));
    throw Error(ErrorCode::RegistryIncomplete, "unbound roles: " + list);
  }
  auto provider = [&](Role r) -> const std::pair<const DriverProvider&, const DriverParams&> {
    const Binding& b = bindings_.at(r);
    return {providers_.at(b.driver), b.params};
  };

  DriverSet set;
  {
    auto [p, params] = provider(Role::Stage);
    set.stage = p.stage(params);
    if (p.clock) set.clock = p.clock();
  }
  {
    auto [p, params] = provider(Role::PowerMeter);
    set.power_meter = p.power_meter(params);
  }
  {
    auto [p, params] = provider(Role::Switch);
    set.optical_switch = p.optical_switch(params);
  }
  {
    auto [p, params] = provider(Role::Polarization);
    set.polarization = p.polarization(params);
  }
  {
    auto [p, params] = provider(Role::Camera);
    set.camera = p.camera(params);
  }
  {
    auto [p, params] = provider(Role::TempController);
    set.temperature = p.temperature(params);
  }
  {
    auto [p, params] = provider(Role::Daq);
    set.daq = p.daq(params);
  }
  {
    auto [p, params] = provider(Role::Goniometer);
    set.goniometer = p.goniometer(params);
  }
  if (!set.clock) set.clock = std::make_shared<SteadyClock>();
  return set;
}

namespace {
double steady_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}
}  // namespace

SteadyClock::SteadyClock() : origin_(steady_seconds()) {}

double SteadyClock::now() const { return steady_seconds() - origin_; }

void SteadyClock::wait(double dt) {
  if (dt > 0) std::this_thread::sleep_for(std::chrono::duration<double>(dt));
}

}  // namespace atomics::hal
