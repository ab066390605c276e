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
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "atomics/core/rng.hpp"
#include "atomics/core/types.hpp"
#include "atomics/hal/axis.hpp"
#include "atomics/hal/bench.hpp"
#include "atomics/hal/drivers.hpp"
#include "atomics/hal/registry.hpp"
#include "atomics/sim/model.hpp"
#include "atomics/sim/render.hpp"

namespace atomics::sim {

/// Simulated time. Every wait advances the bench physics (drift) by the same
/// amount; with time_accel > 0 it also sleeps dt/time_accel of wall time.
class SimClock final : public hal::Clock {
 public:
  explicit SimClock(double time_accel = 0.0) : time_accel_(time_accel) {}

  double now() const override;
  void wait(double dt) override;

  void set_time_accel(double accel);
  double time_accel() const;
  void set_on_advance(std::function<void(double)> hook);

 private:
  mutable std::mutex mutex_;
  double now_ = 0.0;
  double time_accel_;
  double sleep_debt_ = 0.0;
  static constexpr double kMinSleep = 2e-3;
  std::function<void(double)> on_advance_;
};

/// One device on the simulated chip; couplers in chip coordinates.
struct SimDevice {
  std::string id;
  Vec2 input;
  Vec2 output;
  bool present = true;  // false: couplers missing from the chip (sabotage)
};

/// Eight devices, inputs on the left facet and outputs on the right, 250 µm
/// apart starting 125 µm from the top edge.
std::vector<SimDevice> default_devices();

struct RenderSettings {
  double pixels_per_um = 2.0;
  double rotation_deg = 0.0;
  int width = 1024;
  int height = 768;
  double noise_sigma = 2.0;
  double margin = 600.0;
  bool fixed_noise = false;  // same noise field on every frame
};

/// Everything needed to build a simulated bench.
struct SimSetup {
  SimConfig physics;
  Vec2 chip_size{1000.0, 2000.0};
  std::vector<SimDevice> devices = default_devices();
  // Bench position of each fiber apex when its tower reads (0, 0, ·).
  Vec2 left_origin{0.0, 1000.0};
  Vec2 right_origin{1000.0, 1000.0};
  RenderSettings render;
  double initial_temperature = 295.0;

  /// Reads the `sim` section: physics keys at top level, `scene` for the
  /// chip and renderer. Throws MalformedConfig.
  static SimSetup from_json(const nlohmann::json& section);
};

/// Ground truth of the simulated bench. Thread-safe; the drivers forward to
/// it, tests read it directly.
class SimBench {
 public:
  explicit SimBench(SimSetup setup);
  ~SimBench();
  SimBench(const SimBench&) = delete;
  SimBench& operator=(const SimBench&) = delete;

  const SimSetup& setup() const { return setup_; }
  std::shared_ptr<SimClock> clock() const { return clock_; }

  // Driver-facing operations.
  void begin_move(hal::AxisId axis, double target);
  void wait_settled(hal::AxisId axis);
  std::optional<double> read_encoder(hal::AxisId axis);
  double read_goniometer();
  double read_meter();
  double read_monitor();
  void set_route(SwitchRoute route);
  void set_paddles(const std::array<double, 3>& degrees);
  hal::Image capture();
  void set_temperature(double kelvin);
  double read_temperature();
  hal::DaqTrace acquire(const hal::DaqRequest& request);

  /// The next `count` calls into drivers of `role` throw DriverFault.
  void inject_fault(hal::Role role, int count);
  void check_fault(hal::Role role);

  void set_laser(bool on);
  void set_device_present(const std::string& device_id, bool present);

  // Ground truth.
  double true_position(hal::AxisId axis) const;
  /// Teleports an axis (test setup only; bypasses backlash and settling).
  void set_true_position(hal::AxisId axis, double value);
  /// Puts an axis at `value` with matching commanded position and no
  /// backlash history.
  void reset_axis(hal::AxisId axis, double value);
  Vec3 tip_position(hal::Tower fiber) const;
  Vec2 coupler_position(const std::string& device_id, Facet facet) const;
  const DriftState& drift() const { return drift_; }
  void set_drift(const DriftState& d) { std::lock_guard lock(mutex_); drift_ = d; }
  /// Fiber stage coordinates (x, y, z) that put the tip on the optimum of the
  /// given device's coupler at this instant.
  Vec3 optimal_stage(const std::string& device_id, hal::Tower fiber) const;
  /// Facet offsets (input, output) for the device the left fiber is nearest.
  std::pair<FacetOffset, FacetOffset> facet_offsets() const;
  std::optional<std::string> active_device() const;
  /// Noiseless power right now.
  double ideal_power() const;
  /// Best achievable power (perfect alignment and polarization).
  double optimum_power() const;
  double optimal_z() const { return setup_.physics.facet_plane_z - setup_.physics.working_distance; }
  Scene scene() const;

  void advance(double dt);

 private:
  double power_locked(Rng* noise) const;
  Vec3 tip_locked(hal::Tower fiber) const;
  const SimDevice* nearest_device_locked() const;

  struct PendingMove {
    double end_position;
    double end_time;
  };

  SimSetup setup_;
  std::shared_ptr<SimClock> clock_;
  mutable std::recursive_mutex mutex_;

  std::array<double, hal::kAxisCount> position_{};
  std::array<double, hal::kAxisCount> commanded_{};
  std::array<PiezoAxis, hal::kAxisCount> piezo_{};
  std::array<std::optional<PendingMove>, hal::kAxisCount> pending_{};
  DriftState drift_;
  SwitchRoute route_ = SwitchRoute::PowerMeter;
  std::array<double, 3> paddles_{0.0, 0.0, 0.0};
  bool laser_on_ = true;
  double temperature_setpoint_;
  std::map<hal::Role, int> faults_;
  std::uint64_t frame_counter_ = 0;

  Rng power_rng_;
  Rng step_rng_;
  Rng drift_rng_;
  Rng daq_rng_;
};

/// Driver family named "simbench" whose every role forwards to `bench`.
hal::DriverProvider make_provider(std::shared_ptr<SimBench> bench);

inline constexpr const char* kProviderName = "simbench";

/// A simulated bench wired through the registry into a hal::Bench, with
/// every role bound to "simbench".
struct SimRig {
  std::shared_ptr<SimBench> sim;
  std::unique_ptr<hal::Bench> bench;
};

SimRig make_rig(SimSetup setup, hal::BenchTopology topology = hal::BenchTopology::defaults());

}  // namespace atomics::sim
