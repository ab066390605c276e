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

#include "atomics/hal/axis.hpp"

#include <array>

#include "atomics/core/error.hpp"
#include "atomics/hal/drivers.hpp"

namespace atomics::hal {

std::string_view to_string(Tower t) {
  switch (t) {
    case Tower::LeftFiber: return "LeftFiber";
    case Tower::RightFiber: return "RightFiber";
    case Tower::ChipletStage: return "ChipletStage";
    case Tower::Microscope: return "Microscope";
    case Tower::Goniometer: return "Goniometer";
  }
  return "?";
}

std::string_view to_string(AxisName a) {
  switch (a) {
    case AxisName::X: return "X";
    case AxisName::Y: return "Y";
    case AxisName::Z: return "Z";
    case AxisName::Theta: return "Theta";
  }
  return "?";
}

std::optional<Tower> parse_tower(std::string_view s) {
  for (Tower t : {Tower::LeftFiber, Tower::RightFiber, Tower::ChipletStage, Tower::Microscope, Tower::Goniometer})
    if (to_string(t) == s) return t;
  return std::nullopt;
}

std::optional<AxisName> parse_axis_name(std::string_view s) {
  for (AxisName a : {AxisName::X, AxisName::Y, AxisName::Z, AxisName::Theta})
    if (to_string(a) == s) return a;
  return std::nullopt;
}

AxisId AxisId::of(Tower t, AxisName a) {
  auto id = make(t, a);
  if (!id)
    throw Error(ErrorCode::OutOfRange,
                std::string(to_string(t)) + " has no " + std::string(to_string(a)) + " axis");
  return *id;
}

std::optional<AxisId> AxisId::parse(std::string_view s) {
  auto dot = s.find('.');
  if (dot == std::string_view::npos) return std::nullopt;
  auto t = parse_tower(s.substr(0, dot));
  auto a = parse_axis_name(s.substr(dot + 1));
  if (!t || !a) return std::nullopt;
  return make(*t, *a);
}

std::string AxisId::name() const {
  return std::string(to_string(tower_)) + "." + std::string(to_string(axis_));
}

std::span<const AxisId, kAxisCount> all_axes() {
  static constexpr std::array<AxisId, kAxisCount> kAxes = {
      axes::left_x,  axes::left_y,  axes::left_z,  axes::right_x, axes::right_y,  axes::right_z,
      axes::chip_x,  axes::chip_y,  axes::scope_x, axes::scope_y, axes::scope_z, axes::tilt};
  return kAxes;
}

std::string_view to_string(Role r) {
  switch (r) {
    case Role::Stage: return "Stage";
    case Role::PowerMeter: return "PowerMeter";
    case Role::Switch: return "Switch";
    case Role::Polarization: return "Polarization";
    case Role::Camera: return "Camera";
    case Role::TempController: return "TempController";
    case Role::Daq: return "Daq";
    case Role::Goniometer: return "Goniometer";
  }
  return "?";
}

std::optional<Role> parse_role(std::string_view s) {
  for (Role r : kAllRoles)
    if (to_string(r) == s) return r;
  return std::nullopt;
}

std::string_view to_string(DaqKind k) {
  switch (k) {
    case DaqKind::Oscilloscope: return "Oscilloscope";
    case DaqKind::FrequencyCounter: return "FrequencyCounter";
    case DaqKind::SpectrumAnalyzer: return "SpectrumAnalyzer";
    case DaqKind::GenericDaq: return "GenericDaq";
  }
  return "?";
}

std::optional<DaqKind> parse_daq_kind(std::string_view s) {
  for (DaqKind k : {DaqKind::Oscilloscope, DaqKind::FrequencyCounter, DaqKind::SpectrumAnalyzer, DaqKind::GenericDaq})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

}  // namespace atomics::hal
