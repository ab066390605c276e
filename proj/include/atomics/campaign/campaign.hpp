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

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "atomics/align/controller.hpp"
#include "atomics/campaign/layout.hpp"
#include "atomics/hal/drivers.hpp"

namespace atomics::campaign {

struct AcquisitionSpec {
  hal::DaqKind kind = hal::DaqKind::GenericDaq;
  double duration = 1.0;  // seconds
  std::map<std::string, double> parameters;

  /// {"kind": "Oscilloscope", "duration": 1.0, "parameters": {...}}.
  /// Throws MalformedConfig.
  static AcquisitionSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// A persisted dataset: `path` is relative to the run directory.
struct DatasetRef {
  std::string path;
  std::string sha256;
  hal::DaqKind kind = hal::DaqKind::GenericDaq;
  std::vector<std::string> columns;
  std::size_t rows = 0;
};

struct Environment {
  std::string pressure_label = "ambient";
  double goniometer_deg = 0.0;
  std::optional<double> temperature_setpoint;  // kelvin
};

struct DeviceReport {
  std::string device_id;
  bool attempted = false;
  bool coupled = false;
  std::optional<double> insertion_loss_db;  // present iff coupled
  double align_duration_s = 0.0;            // bench seconds
  std::uint64_t samples_used = 0;
  std::vector<DatasetRef> acquisitions;
  Environment environment;
  std::string error;  // empty on success
};

enum class Traversal { MoveChiplet, MoveFibers };
std::string_view to_string(Traversal t);
std::optional<Traversal> parse_traversal(std::string_view s);

struct CampaignReport {
  std::string chiplet;
  Traversal traversal = Traversal::MoveChiplet;
  std::string started;   // ISO 8601 UTC
  std::string finished;  // empty while running
  bool aborted = false;
  std::vector<DeviceReport> devices;

  std::size_t coupled_count() const;
  bool all_coupled() const { return coupled_count() == devices.size(); }

  nlohmann::json to_json() const;
  /// Strict reader; throws ValidationError on any schema deviation.
  static CampaignReport from_json(const nlohmann::json& j);
};

inline constexpr const char* kReportSchema = "atomics.campaign.report/1";

struct CampaignOptions {
  Traversal traversal = Traversal::MoveChiplet;
  bool fail_fast = false;
  /// Reuse devices already coupled with verified datasets in `run_dir`.
  bool resume = false;
  std::filesystem::path run_dir;
  std::string pressure_label = "ambient";
  double input_power_w = 1e-3;  // laser power launched into the input fiber
  // Bench position of each fiber apex when its tower reads (0, 0).
  Vec2 left_tip_origin{0.0, 1000.0};
  Vec2 right_tip_origin{1000.0, 1000.0};
  double approach_offset = 10.0;    // fibers land this far off-chip before coarse alignment
  double telemetry_period = 1.0;    // bench seconds between telemetry.csv rows
  const std::atomic<bool>* stop = nullptr;  // checked between devices
  std::function<void(const DeviceReport&)> on_device;
};

/// Runs the DAQ with the light routed to it. NotLocked unless the machine is
/// Locked on the Daq route; DaqFault when the instrument fails.
hal::DaqTrace acquire(align::Controller& controller, const AcquisitionSpec& spec);

/// Writes `datasets/<name>.bin` and its `.json` sidecar under `run_dir`.
DatasetRef store_dataset(const std::filesystem::path& run_dir, const std::string& name, const hal::DaqTrace& trace,
                         nlohmann::json metadata);

/// Re-hashes every dataset of `device`; false when one is missing or altered.
bool datasets_intact(const std::filesystem::path& run_dir, const DeviceReport& device);

/// Backs both fibers off to the safe plane. Idle only.
void prepare_fibers(align::Controller& controller);

/// Blind move by the layout geometry so both tips start inside the camera
/// view of their couplers: the chip follows the left tip in y for
/// MoveChiplet, then each fiber goes `approach_offset` off its coupler.
void position_fibers(align::Controller& controller, const CampaignOptions& options, const LayoutDevice& device);

/// Couples, acquires and persists every device in column-major order,
/// writing report.json after each one. CalibrationStale when the
/// controller has no calibration, IllegalInState outside Idle; device failures are recorded and the run
/// continues unless `fail_fast`.
CampaignReport run_campaign(align::Controller& controller, const ChipLayout& layout,
                            const std::vector<AcquisitionSpec>& acquisitions, const CampaignOptions& options);

CampaignReport load_report(const std::filesystem::path& run_dir);

/// `runs/<UTC timestamp>`, unique within `root`.
std::filesystem::path new_run_dir(const std::filesystem::path& root);
/// Most recent run directory under `root`, if any.
std::optional<std::filesystem::path> latest_run_dir(const std::filesystem::path& root);

}  // namespace atomics::campaign
