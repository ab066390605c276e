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
#include <functional>
#include <optional>
#include <variant>

#include "atomics/core/types.hpp"
#include "atomics/hal/axis.hpp"
#include "atomics/hal/registry.hpp"
#include "atomics/hal/topology.hpp"

namespace atomics::hal {

struct MoveAck {
  AxisId axis;
  double target = 0.0;
  double displacement = 0.0;  // commanded change
};

struct AxisEvent {
  AxisId axis;
  AxisState state;
};

using BenchEvent = std::variant<PowerSample, AxisEvent>;

/// The serialized command path to every instrument. All hardware access goes
/// through one Bench owned by the command loop; it enforces soft limits,
/// per-axis move serialization, the switch-route gate on the power meter,
/// and the one-retry policy for driver faults.
class Bench {
 public:
  Bench(DriverSet drivers, BenchTopology topology);

  Bench(const Bench&) = delete;
  Bench& operator=(const Bench&) = delete;

  /// Blocks until the move settles. LimitViolation leaves the axis untouched.
  MoveAck move_absolute(AxisId axis, double target);
  MoveAck move_relative(AxisId axis, double delta);

  /// Non-blocking start; AxisBusy if the axis is still moving. Moves on
  /// different axes may overlap.
  void start_move(AxisId axis, double target);
  MoveAck finish_move(AxisId axis);

  /// Reads the power meter. WrongRoute while the switch points at the DAQ.
  PowerSample read_power();

  /// Reads whichever instrument the switch currently feeds: the meter on
  /// PowerMeter, the DAQ detector's DC level on Daq.
  PowerSample sample_output();

  void set_switch(SwitchRoute route);

  /// Each angle must lie in [0, 360).
  void set_polarization(const std::array<double, 3>& paddle_degrees);

  Frame grab_frame();

  DaqTrace acquire(const DaqRequest& request);

  void set_temperature(double kelvin);
  double read_temperature();

  const AxisState& axis_state(AxisId axis) const { return states_[axis.index()]; }
  SwitchRoute route() const { return route_; }
  const std::array<double, 3>& paddles() const { return paddles_; }
  std::optional<PowerSample> last_sample() const { return last_sample_; }
  std::optional<double> temperature_setpoint() const { return temperature_setpoint_; }
  const BenchTopology& topology() const { return topology_; }

  /// Narrows an axis' soft limits (must stay inside the configured ones).
  void set_soft_limits(AxisId axis, SoftLimits limits);

  Clock& clock() { return *drivers_.clock; }
  double now() const { return drivers_.clock->now(); }

  void set_sink(std::function<void(const BenchEvent&)> sink) { sink_ = std::move(sink); }
  const std::function<void(const BenchEvent&)>& sink() const { return sink_; }

  /// Relative uncertainty accumulated per open-loop step, for the
  /// estimated-position bookkeeping.
  void set_open_loop_uncertainty(double rel, double backlash) {
    open_loop_rel_ = rel;
    open_loop_backlash_ = backlash;
  }

 private:
  template <typename F>
  auto with_retry(F&& f) -> decltype(f());

  void emit(const BenchEvent& e) {
    if (sink_) sink_(e);
  }
  double next_timestamp();

  DriverSet drivers_;
  BenchTopology topology_;
  std::array<AxisState, kAxisCount> states_{};
  std::array<int, kAxisCount> last_direction_{};
  SwitchRoute route_ = SwitchRoute::PowerMeter;
  std::array<double, 3> paddles_{0.0, 0.0, 0.0};
  std::optional<PowerSample> last_sample_;
  std::optional<double> temperature_setpoint_;
  std::uint64_t exposure_counter_ = 0;
  double last_timestamp_ = -1.0;
  double open_loop_rel_ = 0.02;
  double open_loop_backlash_ = 0.2;
  std::function<void(const BenchEvent&)> sink_;
};

}  // namespace atomics::hal
