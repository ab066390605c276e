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

#include "atomics/sim/sim_bench.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "atomics/core/error.hpp"

namespace atomics::sim {

using hal::AxisId;
using hal::Role;
using hal::Tower;

// ---------------------------------------------------------------- SimClock

double SimClock::now() const {
  std::lock_guard lock(mutex_);
  return now_;
}

void SimClock::wait(double dt) {
  if (!(dt > 0)) return;
  std::function<void(double)> hook;
  double sleep = 0.0;
  {
    std::lock_guard lock(mutex_);
    now_ += dt;
    hook = on_advance_;
    if (time_accel_ > 0) {
      // Pace in chunks so that many tiny waits do not each pay the
      // scheduler's minimum sleep.
      sleep_debt_ += dt / time_accel_;
      if (sleep_debt_ >= kMinSleep) std::swap(sleep, sleep_debt_);
    }
  }
  if (hook) hook(dt);
  if (sleep > 0) std::this_thread::sleep_for(std::chrono::duration<double>(sleep));
}

void SimClock::set_time_accel(double accel) {
  std::lock_guard lock(mutex_);
  time_accel_ = accel;
}

double SimClock::time_accel() const {
  std::lock_guard lock(mutex_);
  return time_accel_;
}

void SimClock::set_on_advance(std::function<void(double)> hook) {
  std::lock_guard lock(mutex_);
  on_advance_ = std::move(hook);
}

// ---------------------------------------------------------------- setup

std::vector<SimDevice> default_devices() {
  std::vector<SimDevice> out;
  for (int i = 0; i < 8; ++i) {
    const double y = 125.0 + 250.0 * i;
    out.push_back({"D" + std::to_string(i), {0.0, y}, {1000.0, y}, true});
  }
  return out;
}

namespace {

Vec2 read_vec2(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::MalformedConfig, "expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

SimSetup SimSetup::from_json(const nlohmann::json& section) {
  SimSetup s;
  if (section.is_null()) return s;
  s.physics = SimConfig::from_json(section);
  if (!section.contains("scene")) return s;
  const nlohmann::json& sc = section.at("scene");
  try {
    if (sc.contains("chip_size")) s.chip_size = read_vec2(sc.at("chip_size"));
    if (sc.contains("left_origin")) s.left_origin = read_vec2(sc.at("left_origin"));
    if (sc.contains("right_origin")) s.right_origin = read_vec2(sc.at("right_origin"));
    if (sc.contains("devices")) {
      s.devices.clear();
      for (const auto& d : sc.at("devices"))
        s.devices.push_back({d.at("id").get<std::string>(), read_vec2(d.at("input")), read_vec2(d.at("output")),
                             d.value("present", true)});
    }
    RenderSettings& r = s.render;
    r.pixels_per_um = sc.value("pixels_per_um", r.pixels_per_um);
    r.rotation_deg = sc.value("rotation_deg", r.rotation_deg);
    r.width = sc.value("width", r.width);
    r.height = sc.value("height", r.height);
    r.noise_sigma = sc.value("noise_sigma", r.noise_sigma);
    r.margin = sc.value("margin", r.margin);
    r.fixed_noise = sc.value("fixed_noise", r.fixed_noise);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedConfig, std::string("sim.scene: ") + e.what());
  }
  if (!(s.render.pixels_per_um > 0) || s.render.width <= 0 || s.render.height <= 0 || s.render.noise_sigma < 0)
    throw Error(ErrorCode::MalformedConfig, "sim.scene: invalid renderer settings");
  return s;
}

// ---------------------------------------------------------------- SimBench

SimBench::SimBench(SimSetup setup)
    : setup_(std::move(setup)),
      clock_(std::make_shared<SimClock>(setup_.physics.time_accel)),
      temperature_setpoint_(setup_.initial_temperature),
      power_rng_(mix_seed(setup_.physics.seed, 1)),
      step_rng_(mix_seed(setup_.physics.seed, 2)),
      drift_rng_(mix_seed(setup_.physics.seed, 3)),
      daq_rng_(mix_seed(setup_.physics.seed, 5)) {
  setup_.physics.validate();
  clock_->set_on_advance([this](double dt) { advance(dt); });
}

SimBench::~SimBench() { clock_->set_on_advance(nullptr); }

void SimBench::advance(double dt) {
  std::lock_guard lock(mutex_);
  drift_ = step_drift(drift_, dt, setup_.physics, drift_rng_);
}

void SimBench::begin_move(AxisId axis, double target) {
  std::lock_guard lock(mutex_);
  const std::size_t i = axis.index();
  if (pending_[i]) {
    position_[i] = pending_[i]->end_position;
    pending_[i].reset();
  }
  const double requested = target - commanded_[i];
  commanded_[i] = target;
  const double actual = axis.piezo() ? apply_stage_step(piezo_[i], requested, setup_.physics, step_rng_) : requested;
  double speed = setup_.physics.piezo_speed;
  if (axis.tower() == Tower::Microscope) speed = setup_.physics.scope_speed;
  if (axis.tower() == Tower::Goniometer) speed = 5.0;  // deg/s
  pending_[i] = PendingMove{position_[i] + actual, clock_->now() + setup_.physics.settle_time + std::abs(requested) / speed};
}

void SimBench::wait_settled(AxisId axis) {
  std::lock_guard lock(mutex_);
  const std::size_t i = axis.index();
  if (!pending_[i]) return;
  const double remaining = pending_[i]->end_time - clock_->now();
  if (remaining > 0) clock_->wait(remaining);
  position_[i] = pending_[i]->end_position;
  pending_[i].reset();
}

std::optional<double> SimBench::read_encoder(AxisId axis) {
  std::lock_guard lock(mutex_);
  if (axis.tower() != Tower::Microscope) return std::nullopt;
  return position_[axis.index()];
}

double SimBench::read_goniometer() {
  std::lock_guard lock(mutex_);
  return position_[hal::axes::tilt.index()];
}

double SimBench::read_meter() {
  clock_->wait(setup_.physics.sample_period);
  std::lock_guard lock(mutex_);
  if (route_ != SwitchRoute::PowerMeter) return setup_.physics.p_dark;
  return power_locked(&power_rng_);
}

double SimBench::read_monitor() {
  clock_->wait(setup_.physics.sample_period);
  std::lock_guard lock(mutex_);
  if (route_ != SwitchRoute::Daq) return setup_.physics.p_dark;
  return power_locked(&power_rng_);
}

void SimBench::set_route(SwitchRoute route) {
  std::lock_guard lock(mutex_);
  route_ = route;
}

void SimBench::set_paddles(const std::array<double, 3>& degrees) {
  std::lock_guard lock(mutex_);
  paddles_ = degrees;
}

hal::Image SimBench::capture() {
  Frame f;
  {
    std::lock_guard lock(mutex_);
    const std::uint64_t n = frame_counter_++;
    Rng noise(mix_seed(setup_.physics.seed, setup_.render.fixed_noise ? 100 : 100 + n));
    const Vec3 camera{position_[hal::axes::scope_x.index()], position_[hal::axes::scope_y.index()],
                      position_[hal::axes::scope_z.index()]};
    f = render_frame(scene(), camera, &noise);
  }
  clock_->wait(setup_.physics.frame_period);
  return hal::Image{f.width, f.height, std::move(f.pixels)};
}

void SimBench::set_temperature(double kelvin) {
  std::lock_guard lock(mutex_);
  temperature_setpoint_ = kelvin;
}

double SimBench::read_temperature() {
  std::lock_guard lock(mutex_);
  return temperature_setpoint_;
}

hal::DaqTrace SimBench::acquire(const hal::DaqRequest& request) {
  if (!(request.duration > 0)) throw Error(ErrorCode::OutOfRange, "acquisition duration must be > 0");
  auto param = [&](const char* key, double fallback) {
    auto it = request.parameters.find(key);
    return it == request.parameters.end() ? fallback : it->second;
  };
  hal::DaqTrace trace;
  {
    std::lock_guard lock(mutex_);
    const double p = route_ == SwitchRoute::Daq ? power_locked(&power_rng_) : setup_.physics.p_dark;
    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    switch (request.kind) {
      case hal::DaqKind::Oscilloscope: {
        const double rate = param("sample_rate", 1000.0);
        const double f = param("signal_hz", 50.0);
        const auto n = static_cast<std::size_t>(std::llround(request.duration * rate));
        trace.columns = {"time_s", "volts"};
        trace.data.assign(2, std::vector<double>(n));
        for (std::size_t k = 0; k < n; ++k) {
          const double t = k / rate;
          trace.data[0][k] = t;
          // 1 V/mW detector, 10 % modulation standing in for the device signal.
          trace.data[1][k] = 1e3 * p * (1.0 + 0.1 * std::sin(kTwoPi * f * t)) + 1e-3 * daq_rng_.normal();
        }
        trace.sample_rate = rate;
        break;
      }
      case hal::DaqKind::FrequencyCounter: {
        const double gate = param("gate_s", 1.0);
        const double carrier = param("carrier_hz", 1.0e6);
        const auto n = static_cast<std::size_t>(std::llround(request.duration / gate));
        trace.columns = {"time_s", "frequency_hz"};
        trace.data.assign(2, std::vector<double>(n));
        for (std::size_t k = 0; k < n; ++k) {
          trace.data[0][k] = (k + 1) * gate;
          trace.data[1][k] = carrier + 0.5 * daq_rng_.normal();
        }
        trace.sample_rate = 1.0 / gate;
        break;
      }
      case hal::DaqKind::SpectrumAnalyzer: {
        const auto n = static_cast<std::size_t>(param("points", 401.0));
        const double f0 = param("start_hz", 0.0);
        const double f1 = param("stop_hz", 2.0e6);
        const double carrier = param("carrier_hz", 1.0e6);
        const double width = param("linewidth_hz", 1.0e3);
        trace.columns = {"frequency_hz", "psd_dbm"};
        trace.data.assign(2, std::vector<double>(n));
        for (std::size_t k = 0; k < n; ++k) {
          const double f = n > 1 ? f0 + (f1 - f0) * k / (n - 1) : f0;
          const double u = (f - carrier) / width;
          const double peak = p * 1e-2 / (1.0 + u * u);
          trace.data[0][k] = f;
          trace.data[1][k] = watts_to_dbm(peak + 1e-12) + 0.2 * daq_rng_.normal();
        }
        break;
      }
      case hal::DaqKind::GenericDaq: {
        const double rate = param("sample_rate", 100.0);
        const auto n = static_cast<std::size_t>(std::llround(request.duration * rate));
        trace.columns = {"time_s", "watts"};
        trace.data.assign(2, std::vector<double>(n));
        for (std::size_t k = 0; k < n; ++k) {
          trace.data[0][k] = k / rate;
          trace.data[1][k] = p * (1.0 + setup_.physics.sigma_rel * daq_rng_.normal());
        }
        trace.sample_rate = rate;
        break;
      }
    }
  }
  clock_->wait(request.duration);
  return trace;
}

void SimBench::inject_fault(Role role, int count) {
  std::lock_guard lock(mutex_);
  faults_[role] = count;
}

void SimBench::check_fault(Role role) {
  std::lock_guard lock(mutex_);
  auto it = faults_.find(role);
  if (it == faults_.end() || it->second <= 0) return;
  --it->second;
  throw Error(ErrorCode::DriverFault, std::string("simulated fault on ") + std::string(hal::to_string(role)));
}

void SimBench::set_laser(bool on) {
  std::lock_guard lock(mutex_);
  laser_on_ = on;
}

void SimBench::set_device_present(const std::string& device_id, bool present) {
  std::lock_guard lock(mutex_);
  for (SimDevice& d : setup_.devices)
    if (d.id == device_id) d.present = present;
}

double SimBench::true_position(AxisId axis) const {
  std::lock_guard lock(mutex_);
  const auto& p = pending_[axis.index()];
  return p ? p->end_position : position_[axis.index()];
}

void SimBench::set_true_position(AxisId axis, double value) {
  std::lock_guard lock(mutex_);
  pending_[axis.index()].reset();
  position_[axis.index()] = value;
}

void SimBench::reset_axis(AxisId axis, double value) {
  std::lock_guard lock(mutex_);
  pending_[axis.index()].reset();
  position_[axis.index()] = value;
  commanded_[axis.index()] = value;
  piezo_[axis.index()] = PiezoAxis{};
}

Vec3 SimBench::tip_locked(Tower fiber) const {
  const bool left = fiber == Tower::LeftFiber;
  const AxisId x = left ? hal::axes::left_x : hal::axes::right_x;
  const AxisId y = left ? hal::axes::left_y : hal::axes::right_y;
  const AxisId z = left ? hal::axes::left_z : hal::axes::right_z;
  const Vec2 origin = left ? setup_.left_origin : setup_.right_origin;
  const Vec2 d = drift_.offset[left ? 0 : 1];
  const double tilt_shift = setup_.physics.tilt_coupling * position_[hal::axes::tilt.index()];
  return {origin.x + position_[x.index()] + d.x, origin.y + position_[y.index()] + d.y + tilt_shift,
          position_[z.index()]};
}

Vec3 SimBench::tip_position(Tower fiber) const {
  std::lock_guard lock(mutex_);
  return tip_locked(fiber);
}

Vec2 SimBench::coupler_position(const std::string& device_id, Facet facet) const {
  std::lock_guard lock(mutex_);
  const Vec2 chip{position_[hal::axes::chip_x.index()], position_[hal::axes::chip_y.index()]};
  for (const SimDevice& d : setup_.devices)
    if (d.id == device_id) return chip + (facet == Facet::Left ? d.input : d.output);
  throw Error(ErrorCode::OutOfRange, "unknown device " + device_id);
}

Vec3 SimBench::optimal_stage(const std::string& device_id, Tower fiber) const {
  std::lock_guard lock(mutex_);
  const bool left = fiber == Tower::LeftFiber;
  const Vec2 coupler = coupler_position(device_id, left ? Facet::Left : Facet::Right);
  const Vec3 tip = tip_locked(fiber);
  const AxisId x = left ? hal::axes::left_x : hal::axes::right_x;
  const AxisId y = left ? hal::axes::left_y : hal::axes::right_y;
  return {position_[x.index()] + coupler.x - tip.x, position_[y.index()] + coupler.y - tip.y, optimal_z()};
}

const SimDevice* SimBench::nearest_device_locked() const {
  const Vec2 chip{position_[hal::axes::chip_x.index()], position_[hal::axes::chip_y.index()]};
  const Vec2 tip = tip_locked(Tower::LeftFiber).xy();
  const SimDevice* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const SimDevice& d : setup_.devices) {
    if (!d.present) continue;
    const double dist = (chip + d.input - tip).norm();
    if (dist < best_d) {
      best_d = dist;
      best = &d;
    }
  }
  return best;
}

std::optional<std::string> SimBench::active_device() const {
  std::lock_guard lock(mutex_);
  const SimDevice* d = nearest_device_locked();
  if (!d) return std::nullopt;
  return d->id;
}

std::pair<FacetOffset, FacetOffset> SimBench::facet_offsets() const {
  std::lock_guard lock(mutex_);
  const SimDevice* d = nearest_device_locked();
  if (!d) {
    constexpr double kFar = 1e6;
    return {{kFar, kFar, 0.0}, {kFar, kFar, 0.0}};
  }
  const Vec2 chip{position_[hal::axes::chip_x.index()], position_[hal::axes::chip_y.index()]};
  const Vec3 l = tip_locked(Tower::LeftFiber), r = tip_locked(Tower::RightFiber);
  const Vec2 in = l.xy() - (chip + d->input), out = r.xy() - (chip + d->output);
  return {{in.x, in.y, l.z - optimal_z()}, {out.x, out.y, r.z - optimal_z()}};
}

double SimBench::power_locked(Rng* noise) const {
  if (!laser_on_) return setup_.physics.p_dark;
  if (!nearest_device_locked()) return setup_.physics.p_dark;
  const auto [in, out] = facet_offsets();
  return coupled_power(in, out, paddles_[0], setup_.physics, noise);
}

double SimBench::ideal_power() const {
  std::lock_guard lock(mutex_);
  return power_locked(nullptr);
}

double SimBench::optimum_power() const {
  const SimConfig& c = setup_.physics;
  return c.p_dark + c.p_in * c.eta0 * c.eta0;
}

Scene SimBench::scene() const {
  std::lock_guard lock(mutex_);
  Scene s;
  const Vec2 chip{position_[hal::axes::chip_x.index()], position_[hal::axes::chip_y.index()]};
  s.chip_min = chip;
  s.chip_size = setup_.chip_size;
  for (const SimDevice& d : setup_.devices) {
    if (!d.present) continue;
    s.couplers.push_back({d.id, chip + d.input, Facet::Left});
    s.couplers.push_back({d.id, chip + d.output, Facet::Right});
  }
  s.left_tip = tip_locked(Tower::LeftFiber);
  s.right_tip = tip_locked(Tower::RightFiber);
  s.scale_bar = chip + Vec2{400.0, -50.0};
  s.pixels_per_um = setup_.render.pixels_per_um;
  s.rotation_deg = setup_.render.rotation_deg;
  s.width = setup_.render.width;
  s.height = setup_.render.height;
  s.noise_sigma = setup_.render.noise_sigma;
  s.margin = setup_.render.margin;
  return s;
}

// ---------------------------------------------------------------- drivers

namespace {

class SimStage final : public hal::StageDriver {
 public:
  explicit SimStage(std::shared_ptr<SimBench> s) : sim_(std::move(s)) {}
  void begin_move(AxisId axis, double target) override {
    sim_->check_fault(Role::Stage);
    sim_->begin_move(axis, target);
  }
  void wait_settled(AxisId axis) override { sim_->wait_settled(axis); }
  std::optional<double> read_encoder(AxisId axis) override { return sim_->read_encoder(axis); }

 private:
  std::shared_ptr<SimBench> sim_;
};

class SimGoniometer final : public hal::GoniometerDriver {
 public:
  explicit SimGoniometer(std::shared_ptr<SimBench> s) : sim_(std::move(s)) {}
  void begin_move(double degrees) override {
    sim_->check_fault(Role::Goniometer);
    sim_->begin_move(hal::axes::tilt, degrees);
  }
  void wait_settled() override { sim_->wait_settled(hal::axes::tilt); }
  double read_angle() override { return sim_->read_goniometer(); }

 private:
  std::shared_ptr<SimBench> sim_;
};

class SimPowerMeter final : public hal::PowerMeterDriver {
 public:
  explicit SimPowerMeter(std::shared_ptr<SimBench> s) : sim_(std::move(s)) {}
  double read_watts() override {
    sim_->check_fault(Role::PowerMeter);
    return sim_->read_meter();
  }

 private:
  std::shared_ptr<SimBench> sim_;
};

class SimSwitch final : public hal::SwitchDriver {
 public:
  explicit SimSwitch(std::shared_ptr<SimBench> s) : sim_(std::move(s)) {}
  void set_route(SwitchRoute route) override {
    sim_->check_fault(Role::Switch);
    sim_->set_route(route);
  }

 private:
  std::shared_ptr<SimBench> sim_;
};

class SimPolarization final : public hal::PolarizationDriver {
 public:
  explicit SimPolarization(std::shared_ptr<SimBench> s) : sim_(std::move(s)) {}
  void set_paddles(const std::array<double, 3>& degrees) override {
    sim_->check_fault(Role::Polarization);
    sim_->set_paddles(degrees);
  }

 private:
  std::shared_ptr<SimBench> sim_;
};

class SimCamera final : public hal::CameraDriver {
 public:
  explicit SimCamera(std::shared_ptr<SimBench> s) : sim_(std::move(s)) {}
  hal::Image capture() override {
    sim_->check_fault(Role::Camera);
    return sim_->capture();
  }

 private:
  std::shared_ptr<SimBench> sim_;
};

class SimTemperature final : public hal::TempControllerDriver {
 public:
  explicit SimTemperature(std::shared_ptr<SimBench> s) : sim_(std::move(s)) {}
  void set_setpoint(double kelvin) override {
    sim_->check_fault(Role::TempController);
    sim_->set_temperature(kelvin);
  }
  double read_kelvin() override { return sim_->read_temperature(); }

 private:
  std::shared_ptr<SimBench> sim_;
};

class SimDaq final : public hal::DaqDriver {
 public:
  explicit SimDaq(std::shared_ptr<SimBench> s) : sim_(std::move(s)) {}
  double read_monitor_watts() override {
    sim_->check_fault(Role::Daq);
    return sim_->read_monitor();
  }
  hal::DaqTrace acquire(const hal::DaqRequest& request) override {
    sim_->check_fault(Role::Daq);
    return sim_->acquire(request);
  }

 private:
  std::shared_ptr<SimBench> sim_;
};

}  // namespace

hal::DriverProvider make_provider(std::shared_ptr<SimBench> sim) {
  hal::DriverProvider p;
  p.stage = [sim](const hal::DriverParams&) { return std::make_unique<SimStage>(sim); };
  p.goniometer = [sim](const hal::DriverParams&) { return std::make_unique<SimGoniometer>(sim); };
  p.power_meter = [sim](const hal::DriverParams&) { return std::make_unique<SimPowerMeter>(sim); };
  p.optical_switch = [sim](const hal::DriverParams&) { return std::make_unique<SimSwitch>(sim); };
  p.polarization = [sim](const hal::DriverParams&) { return std::make_unique<SimPolarization>(sim); };
  p.camera = [sim](const hal::DriverParams&) { return std::make_unique<SimCamera>(sim); };
  p.temperature = [sim](const hal::DriverParams&) { return std::make_unique<SimTemperature>(sim); };
  p.daq = [sim](const hal::DriverParams&) { return std::make_unique<SimDaq>(sim); };
  p.clock = [sim] { return std::static_pointer_cast<hal::Clock>(sim->clock()); };
  return p;
}

SimRig make_rig(SimSetup setup, hal::BenchTopology topology) {
  SimRig rig;
  rig.sim = std::make_shared<SimBench>(std::move(setup));
  for (AxisId id : hal::all_axes()) rig.sim->reset_axis(id, topology[id].park);

  hal::DriverRegistry registry;
  registry.add_provider(kProviderName, make_provider(rig.sim));
  for (Role role : hal::kAllRoles) registry.register_driver(role, kProviderName);
  rig.bench = std::make_unique<hal::Bench>(registry.instantiate(), topology);
  rig.bench->set_open_loop_uncertainty(rig.sim->setup().physics.step_noise_rel, rig.sim->setup().physics.backlash);
  return rig;
}

}  // namespace atomics::sim
