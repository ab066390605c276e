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

#include "atomics/hal/bench.hpp"

#include <cmath>
#include <string>

#include "atomics/core/error.hpp"

namespace atomics::hal {

Bench::Bench(DriverSet drivers, BenchTopology topology) : drivers_(std::move(drivers)), topology_(topology) {
  topology_.validate();
  if (!drivers_.stage || !drivers_.power_meter || !drivers_.optical_switch || !drivers_.polarization ||
      !drivers_.camera || !drivers_.temperature || !drivers_.daq || !drivers_.goniometer || !drivers_.clock)
    throw Error(ErrorCode::RegistryIncomplete, "bench needs a driver for every role");

  for (AxisId id : all_axes()) {
    AxisState& s = states_[id.index()];
    s.soft_limits = topology_[id].limits;
    s.commanded_position = topology_[id].park;
    s.estimated_position = topology_[id].park;
    if (id.tower() == Tower::Goniometer) {
      s.estimated_position = drivers_.goniometer->read_angle();
      s.commanded_position = s.estimated_position;
    } else if (auto enc = drivers_.stage->read_encoder(id)) {
      s.estimated_position = *enc;
      s.commanded_position = *enc;
    }
  }
  drivers_.optical_switch->set_route(route_);
}

template <typename F>
auto Bench::with_retry(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DriverFault) throw;
  }
  return f();
}

double Bench::next_timestamp() {
  double t = drivers_.clock->now();
  if (t <= last_timestamp_) t = std::nextafter(last_timestamp_, INFINITY);
  last_timestamp_ = t;
  return t;
}

void Bench::start_move(AxisId axis, double target) {
  AxisState& s = states_[axis.index()];
  if (!std::isfinite(target) || !s.soft_limits.contains(target))
    throw Error(ErrorCode::LimitViolation, axis.name() + " target " + std::to_string(target) + " outside [" +
                                               std::to_string(s.soft_limits.min) + ", " +
                                               std::to_string(s.soft_limits.max) + "]");
  if (s.moving) throw Error(ErrorCode::AxisBusy, axis.name() + " is still moving");

  if (axis.tower() == Tower::Goniometer)
    with_retry([&] { drivers_.goniometer->begin_move(target); });
  else
    with_retry([&] { drivers_.stage->begin_move(axis, target); });

  s.moving = true;
  emit(AxisEvent{axis, s});
}

MoveAck Bench::finish_move(AxisId axis) {
  AxisState& s = states_[axis.index()];
  if (!s.moving) return MoveAck{axis, s.commanded_position, 0.0};

  // The target was validated in start_move; the driver keeps it.
  if (axis.tower() == Tower::Goniometer)
    with_retry([&] { drivers_.goniometer->wait_settled(); });
  else
    with_retry([&] { drivers_.stage->wait_settled(axis); });
  s.moving = false;
  return MoveAck{axis, s.commanded_position, 0.0};
}

MoveAck Bench::move_absolute(AxisId axis, double target) {
  AxisState& s = states_[axis.index()];
  const double previous = s.commanded_position;
  start_move(axis, target);
  finish_move(axis);

  s.commanded_position = target;
  const double displacement = target - previous;
  std::optional<double> readback;
  if (axis.tower() == Tower::Goniometer)
    readback = with_retry([&] { return drivers_.goniometer->read_angle(); });
  else
    readback = with_retry([&] { return drivers_.stage->read_encoder(axis); });

  if (readback) {
    s.estimated_position = *readback;
    s.uncertainty = 0.0;
  } else {
    s.estimated_position = target;
    // Open loop: step noise adds in quadrature, a direction reversal adds
    // the backlash deadband.
    const double step = open_loop_rel_ * std::abs(displacement);
    const int direction = displacement > 0 ? 1 : (displacement < 0 ? -1 : 0);
    int& last = last_direction_[axis.index()];
    const bool reversal = direction != 0 && last != 0 && direction != last;
    if (direction != 0) last = direction;
    s.uncertainty = std::sqrt(s.uncertainty * s.uncertainty + step * step) + (reversal ? open_loop_backlash_ : 0.0);
  }
  emit(AxisEvent{axis, s});
  return MoveAck{axis, target, displacement};
}

MoveAck Bench::move_relative(AxisId axis, double delta) {
  return move_absolute(axis, states_[axis.index()].commanded_position + delta);
}

PowerSample Bench::read_power() {
  if (route_ != SwitchRoute::PowerMeter)
    throw Error(ErrorCode::WrongRoute, "switch routes light to the DAQ; the power meter is blind");
  const double watts = with_retry([&] { return drivers_.power_meter->read_watts(); });
  PowerSample sample{next_timestamp(), std::max(0.0, watts), route_};
  last_sample_ = sample;
  emit(sample);
  return sample;
}

PowerSample Bench::sample_output() {
  if (route_ == SwitchRoute::PowerMeter) return read_power();
  const double watts = with_retry([&] { return drivers_.daq->read_monitor_watts(); });
  PowerSample sample{next_timestamp(), std::max(0.0, watts), route_};
  last_sample_ = sample;
  emit(sample);
  return sample;
}

void Bench::set_switch(SwitchRoute route) {
  if (route == route_) return;
  with_retry([&] { drivers_.optical_switch->set_route(route); });
  route_ = route;
}

void Bench::set_polarization(const std::array<double, 3>& paddle_degrees) {
  for (double a : paddle_degrees)
    if (!(a >= 0.0 && a < 360.0))
      throw Error(ErrorCode::OutOfRange, "paddle angle " + std::to_string(a) + " outside [0, 360)");
  with_retry([&] { drivers_.polarization->set_paddles(paddle_degrees); });
  paddles_ = paddle_degrees;
}

Frame Bench::grab_frame() {
  Image image = with_retry([&] { return drivers_.camera->capture(); });
  Frame frame;
  frame.width = image.width;
  frame.height = image.height;
  frame.pixels = std::move(image.pixels);
  auto enc = [&](AxisId id) {
    auto v = with_retry([&] { return drivers_.stage->read_encoder(id); });
    return v.value_or(states_[id.index()].estimated_position);
  };
  frame.camera_encoder = {enc(axes::scope_x), enc(axes::scope_y), enc(axes::scope_z)};
  frame.exposure_id = ++exposure_counter_;
  return frame;
}

DaqTrace Bench::acquire(const DaqRequest& request) {
  if (route_ != SwitchRoute::Daq) throw Error(ErrorCode::WrongRoute, "acquisition needs the switch on Daq");
  return with_retry([&] { return drivers_.daq->acquire(request); });
}

void Bench::set_temperature(double kelvin) {
  with_retry([&] { drivers_.temperature->set_setpoint(kelvin); });
  temperature_setpoint_ = kelvin;
}

double Bench::read_temperature() {
  return with_retry([&] { return drivers_.temperature->read_kelvin(); });
}

void Bench::set_soft_limits(AxisId axis, SoftLimits limits) {
  const SoftLimits& configured = topology_[axis].limits;
  if (!(limits.min < limits.max) || limits.min < configured.min || limits.max > configured.max)
    throw Error(ErrorCode::LimitViolation, axis.name() + ": narrowed limits must lie inside the configured ones");
  states_[axis.index()].soft_limits = limits;
}

}  // namespace atomics::hal
