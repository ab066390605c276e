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

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "atomics/core/types.hpp"

namespace atomics::monitor {

struct EwmaState {
  double mean = 0.0;
  double variance = 0.0;
  double lambda = 0.05;
  std::uint64_t n_samples = 0;
};

/// The first sample seeds the mean; later samples follow the usual
/// exponentially weighted recursions.
EwmaState ewma_update(EwmaState state, double x);

/// Samples after which |mean - x| has halved under constant input x.
int ewma_half_life(double lambda);

/// One-sided downward CUSUM on z = (reference - x) / sigma. `k` and `h` are
/// in units of sigma.
struct CusumState {
  std::optional<double> reference;
  double sigma = 0.0;
  double g_plus = 0.0;
  double g_minus = 0.0;
  double k = 0.5;
  double h = 8.0;
};

struct CusumStep {
  CusumState state;
  bool alarm = false;   // downward shift detected
  bool upward = false;  // upward shift crossed h (informational)
  double g_plus = 0.0;  // statistic before any reset
};

/// Alarms once g+ reaches h; both statistics reset on alarm.
CusumStep cusum_update(CusumState state, double x);

/// Robust noise scale: median absolute deviation times 1.4826.
double mad_sigma(std::span<const double> values);

struct StabilityConfig {
  std::size_t min_window = 20;
  double rsd_threshold = 0.02;
  double lock_threshold_db = 1.0;
};

enum class Verdict { Stable, Unstable };

struct StabilityVerdict {
  Verdict verdict = Verdict::Unstable;
  double window_rsd = 0.0;
  std::size_t window_len = 0;
};

StabilityVerdict stability_check(std::span<const PowerSample> window, double reference,
                                 const StabilityConfig& cfg = {});

enum class RealignAction { None, FineRealign, FullRecouple };

std::string_view to_string(RealignAction a);

RealignAction realign_decision(bool cusum_alarm, double current_power, double first_light_threshold);

struct MonitorConfig {
  double ewma_lambda = 0.05;
  double cusum_k = 0.5;
  double cusum_h = 8.0;
  std::size_t sigma_samples = 100;
  // Lower bound on sigma relative to the reference, so a noiseless stream
  // does not turn every rounding error into an alarm.
  double sigma_floor_rel = 1e-3;
  StabilityConfig stability;
  std::size_t log_decimation = 10;

  static MonitorConfig from_json(const nlohmann::json& section);
};

struct Alarm {
  double timestamp = 0.0;
  double power = 0.0;
  double reference = 0.0;
  double g_plus = 0.0;
  RealignAction action = RealignAction::None;
};

/// Streaming analysis of the locked power. Owns EWMA and CUSUM state, learns
/// the noise scale from the first samples after the first lock and rescales
/// it on every re-lock. It never touches hardware; alarms are returned to the
/// caller.
class Monitor {
 public:
  explicit Monitor(MonitorConfig cfg = {}) : cfg_(cfg) {}

  /// Starts (or restarts) supervision around `reference` watts.
  void lock(double reference, double first_light_threshold);
  void unlock();
  bool locked() const { return cusum_.reference.has_value(); }

  /// Feeds one sample. Returns an alarm when the CUSUM fires.
  std::optional<Alarm> push(const PowerSample& sample);

  /// True when this sample falls on the persistent-log decimation grid.
  bool should_log() const { return cfg_.log_decimation <= 1 || seen_ % cfg_.log_decimation == 0; }

  const EwmaState& ewma() const { return ewma_; }
  const CusumState& cusum() const { return cusum_; }
  std::optional<double> sigma_rel() const { return sigma_rel_; }
  const MonitorConfig& config() const { return cfg_; }
  std::uint64_t upward_shifts() const { return upward_shifts_; }

 private:
  MonitorConfig cfg_;
  EwmaState ewma_;
  CusumState cusum_;
  double first_light_threshold_ = 0.0;
  std::optional<double> sigma_rel_;
  std::vector<double> learning_;
  std::uint64_t seen_ = 0;
  std::uint64_t upward_shifts_ = 0;
};

}  // namespace atomics::monitor
