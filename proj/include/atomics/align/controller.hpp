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
#include <atomic>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "atomics/align/config.hpp"
#include "atomics/align/run_log.hpp"
#include "atomics/align/scan.hpp"
#include "atomics/align/state.hpp"
#include "atomics/hal/bench.hpp"
#include "atomics/monitor/monitor.hpp"
#include "atomics/vision/calibration.hpp"
#include "atomics/vision/detection.hpp"

namespace atomics::align {

/// A device to couple: coupler positions in chip coordinates.
struct DeviceTarget {
  std::string id;
  Vec2 input;
  Vec2 output;
};

struct FineAlignPlan {
  std::vector<hal::Tower> towers{hal::Tower::LeftFiber, hal::Tower::RightFiber};
  bool include_z = true;
  double lateral_half_range = 0.0;  // 0: config default
  double z_half_range = 0.0;
  int max_iterations = 0;
};

struct AlignmentResult {
  double max_correction = 0.0;  // largest per-axis correction of the last round
  double power = 0.0;           // measured after the last round
  double best_power = 0.0;      // best fitted peak seen
  int iterations = 0;
  bool converged = false;  // corrections below tolerance
  bool plateau = false;    // stopped because a round gained no power
};

struct PolarizationResult {
  double theta = 0.0;
  double scan_max = 0.0;
  double predicted = 0.0;  // fitted power at theta
  double power = 0.0;      // measured at theta
  bool flat = false;
};

struct CoupleResult {
  std::string device;
  bool locked = false;
  double power = 0.0;      // mean of the final stability window
  double coarse_offset = 0.0;
  double theta = 0.0;
  int fine_iterations = 0;
  std::uint64_t samples = 0;  // power readings taken
  double duration = 0.0;      // simulated seconds
};

struct HoldOptions {
  double duration = 0.0;  // seconds
  /// Called with every sample; return false to stop holding.
  std::function<bool(const PowerSample&)> on_sample;
};

struct HoldStats {
  std::uint64_t samples = 0;         // every power reading while holding, realignment included
  std::uint64_t within_band = 0;     // readings within lock_threshold_db of the initial reference
  std::uint64_t alarms = 0;
  std::uint64_t fine_realigns = 0;
  std::uint64_t full_recouples = 0;
  double reference = 0.0;
  double worst_db = 0.0;
  std::optional<double> first_alarm_after;  // samples until the first alarm
};

/// Callbacks for telemetry; invoked on the command loop thread.
struct ControllerHooks {
  std::function<void(const Transition&)> on_transition;
  std::function<void(const Frame&, const std::vector<vision::Detection>&)> on_detections;
  std::function<void(const monitor::Alarm&)> on_alarm;
};

/// The coupling controller. Owns the state machine and drives every phase
/// through the bench. Not thread-safe except for request_abort().
class Controller {
 public:
  Controller(hal::Bench& bench, AlignConfig cfg, std::vector<vision::Template> templates,
             monitor::MonitorConfig monitor_cfg = {});

  CouplingState state() const { return machine_.state(); }
  const StateMachine& machine() const { return machine_; }
  const AlignConfig& config() const { return cfg_; }
  hal::Bench& bench() { return bench_; }
  monitor::Monitor& monitor() { return monitor_; }
  const std::vector<vision::Template>& templates() const { return templates_; }
  void set_hooks(ControllerHooks hooks) { hooks_ = std::move(hooks); }
  void set_run_log(RunLog* log) { log_ = log; }
  RunLog* run_log() const { return log_; }
  /// Appends `entry` to the run log with time, state, positions and route.
  void record(nlohmann::json entry) { log(std::move(entry)); }

  /// Applies an event and carries out its routing and retract actions.
  Transition dispatch(Event e, const std::string& device = {});

  void set_calibration(vision::CalibrationRecord record) { calibration_ = std::move(record); }
  const std::optional<vision::CalibrationRecord>& calibration() const { return calibration_; }

  /// Idle → Calibrating → Idle. Probes the microscope around the target's
  /// input coupler and fits the pixel map.
  vision::CalibrationRecord calibrate(const DeviceTarget& reference);

  /// Idle → … → Locked. On failure the machine is left in Fault (or Idle
  /// after an abort) and the error is rethrown.
  CoupleResult couple(const DeviceTarget& target);

  /// Supervises a Locked coupling, realigning on drift alarms.
  HoldStats hold(const HoldOptions& options);

  /// Goniometer move; legal in Idle and Locked, 0–10°.
  void set_tilt(double degrees);
  /// Operator jog of one axis, Idle only, |delta| ≤ 5 µm.
  void jog(hal::AxisId axis, double delta);
  /// Operator switch command: Daq only while Locked, PowerMeter in Idle or
  /// Fault.
  void set_route(SwitchRoute route);
  /// Operator paddle setting, Idle only.
  void set_polarization(const std::array<double, 3>& paddles);

  /// Thread-safe: the running phase stops at its next motion or reading.
  void request_abort() { abort_requested_ = true; }
  /// Abort from the command loop (no phase running).
  void abort();
  void reset();

  // Phases.
  double coarse_align(const DeviceTarget& target, hal::Tower fiber);
  double safe_approach_z(double contact_plane);
  std::optional<Vec2> spiral_search();
  ScanResult line_scan(hal::AxisId axis, double center, double half_range, int n);
  AlignmentResult fine_align(const FineAlignPlan& plan = {});
  PolarizationResult optimize_polarization();
  /// Reads a window on the current route and judges it against `reference`.
  monitor::StabilityVerdict check_stability(double reference, double* window_mean = nullptr);

  /// One power reading on the current route.
  double measure();
  std::uint64_t samples_used() const { return samples_; }
  const std::vector<vision::Detection>& last_detections() const { return last_detections_; }
  Vec2 expected_coupler(const DeviceTarget& target, hal::Tower fiber) const;

 private:
  void check_abort();
  void move_to(hal::AxisId axis, double target);
  void approach(hal::AxisId axis, double target);
  double commanded(hal::AxisId axis) const { return bench_.axis_state(axis).commanded_position; }
  void retract_z();
  void log(nlohmann::json entry);
  template <typename F>
  void with_retries(const char* phase, F&& f);
  void lock_from_search(CoupleResult* result);
  void realign(HoldStats& stats, monitor::RealignAction action);
  std::vector<vision::Detection> detect_near(const Frame& frame, hal::Tower fiber, bool full_frame);

  hal::Bench& bench_;
  AlignConfig cfg_;
  std::vector<vision::Template> templates_;
  monitor::Monitor monitor_;
  StateMachine machine_;
  ControllerHooks hooks_;
  RunLog* log_ = nullptr;
  std::optional<vision::CalibrationRecord> calibration_;
  std::vector<vision::Detection> last_detections_;
  std::atomic<bool> abort_requested_{false};
  std::uint64_t samples_ = 0;
  double last_power_ = 0.0;
  double lock_reference_ = 0.0;
  HoldStats* tracking_ = nullptr;
};

hal::AxisId fiber_axis(hal::Tower fiber, hal::AxisName name);

}  // namespace atomics::align
