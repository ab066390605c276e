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
#include <compare>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace atomics::hal {

enum class Tower { LeftFiber, RightFiber, ChipletStage, Microscope, Goniometer };
enum class AxisName { X, Y, Z, Theta };

std::string_view to_string(Tower t);
std::string_view to_string(AxisName a);
std::optional<Tower> parse_tower(std::string_view s);
std::optional<AxisName> parse_axis_name(std::string_view s);

/// A motion axis of the bench. Only the combinations that physically exist
/// can be built: fiber towers and the microscope carry X/Y/Z, the chiplet
/// stage X/Y, the goniometer Theta.
class AxisId {
 public:
  static constexpr bool valid(Tower t, AxisName a) {
    switch (t) {
      case Tower::LeftFiber:
      case Tower::RightFiber:
      case Tower::Microscope:
        return a == AxisName::X || a == AxisName::Y || a == AxisName::Z;
      case Tower::ChipletStage:
        return a == AxisName::X || a == AxisName::Y;
      case Tower::Goniometer:
        return a == AxisName::Theta;
    }
    return false;
  }

  static constexpr std::optional<AxisId> make(Tower t, AxisName a) {
    if (!valid(t, a)) return std::nullopt;
    return AxisId(t, a);
  }

  /// Throws Error(OutOfRange) for combinations that do not exist.
  static AxisId of(Tower t, AxisName a);

  /// Parses "LeftFiber.X" style names.
  static std::optional<AxisId> parse(std::string_view s);

  constexpr Tower tower() const { return tower_; }
  constexpr AxisName axis() const { return axis_; }

  constexpr bool angular() const { return axis_ == AxisName::Theta; }
  /// Open-loop slip-stick positioners (no absolute encoder).
  constexpr bool piezo() const {
    return tower_ == Tower::LeftFiber || tower_ == Tower::RightFiber || tower_ == Tower::ChipletStage;
  }

  std::string name() const;
  constexpr int index() const;

  friend constexpr auto operator<=>(const AxisId&, const AxisId&) = default;

 private:
  constexpr AxisId(Tower t, AxisName a) : tower_(t), axis_(a) {}

  Tower tower_;
  AxisName axis_;
};

inline constexpr std::size_t kAxisCount = 12;

/// The twelve axes, in a fixed order (index() follows it).
std::span<const AxisId, kAxisCount> all_axes();

constexpr int AxisId::index() const {
  switch (tower_) {
    case Tower::LeftFiber: return static_cast<int>(axis_);
    case Tower::RightFiber: return 3 + static_cast<int>(axis_);
    case Tower::ChipletStage: return 6 + static_cast<int>(axis_);
    case Tower::Microscope: return 8 + static_cast<int>(axis_);
    case Tower::Goniometer: return 11;
  }
  return -1;
}

namespace axes {
inline constexpr AxisId left_x = *AxisId::make(Tower::LeftFiber, AxisName::X);
inline constexpr AxisId left_y = *AxisId::make(Tower::LeftFiber, AxisName::Y);
inline constexpr AxisId left_z = *AxisId::make(Tower::LeftFiber, AxisName::Z);
inline constexpr AxisId right_x = *AxisId::make(Tower::RightFiber, AxisName::X);
inline constexpr AxisId right_y = *AxisId::make(Tower::RightFiber, AxisName::Y);
inline constexpr AxisId right_z = *AxisId::make(Tower::RightFiber, AxisName::Z);
inline constexpr AxisId chip_x = *AxisId::make(Tower::ChipletStage, AxisName::X);
inline constexpr AxisId chip_y = *AxisId::make(Tower::ChipletStage, AxisName::Y);
inline constexpr AxisId scope_x = *AxisId::make(Tower::Microscope, AxisName::X);
inline constexpr AxisId scope_y = *AxisId::make(Tower::Microscope, AxisName::Y);
inline constexpr AxisId scope_z = *AxisId::make(Tower::Microscope, AxisName::Z);
inline constexpr AxisId tilt = *AxisId::make(Tower::Goniometer, AxisName::Theta);
}  // namespace axes

struct SoftLimits {
  double min = 0.0;
  double max = 0.0;

  bool contains(double v) const { return v >= min && v <= max; }
  double span() const { return max - min; }
};

/// Commanded vs. estimated position of one axis. Units are µm for linear
/// axes and degrees for Theta.
struct AxisState {
  double commanded_position = 0.0;
  double estimated_position = 0.0;
  double uncertainty = 0.0;
  SoftLimits soft_limits;
  bool moving = false;
};

/// Instrument roles a driver can be bound to.
enum class Role { Stage, PowerMeter, Switch, Polarization, Camera, TempController, Daq, Goniometer };

inline constexpr std::array<Role, 8> kAllRoles = {Role::Stage,         Role::PowerMeter, Role::Switch,
                                                  Role::Polarization,  Role::Camera,     Role::TempController,
                                                  Role::Daq,           Role::Goniometer};

std::string_view to_string(Role r);
std::optional<Role> parse_role(std::string_view s);

}  // namespace atomics::hal
