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
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "atomics/campaign/engine.hpp"
#include "atomics/campaign/layout.hpp"
#include "atomics/service/command.hpp"
#include "atomics/service/telemetry.hpp"

namespace atomics::service {

struct ServiceOptions {
  campaign::ChipLayout layout;        // devices StartCouple, Calibrate and StartCampaign address
  std::filesystem::path runs_dir;     // default: the engine's campaign runs_dir
  double idle_period = 0.1;           // wall seconds between idle power readings
  double frame_period = 0.2;          // wall seconds; frames are kept at most this often
  bool idle_frames = true;            // grab camera frames while idle
  /// Idle readings, frame grabs and lock supervision. Off, the loop only
  /// runs queued work.
  bool background = true;
  std::size_t history = 64;           // command records kept for /state
};

/// A frame ready to serve. `detections` is the full-frame vision output,
/// present when annotation was requested.
struct EncodedFrame {
  int width = 0;
  int height = 0;
  std::uint64_t exposure_id = 0;
  Vec3 camera_encoder;
  std::vector<std::uint8_t> png;
  std::optional<std::vector<vision::Detection>> detections;

  nlohmann::json sidecar() const;
};

/// The command loop over one Engine. A single thread owns the engine and
/// runs queued commands in order; every other method is safe from any
/// thread and never waits on the engine. While Locked and otherwise idle the
/// loop supervises the coupling.
class Service {
 public:
  using Subscription = std::shared_ptr<TelemetryBus::Subscription>;

  Service(campaign::Engine& engine, ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  void start();
  /// Aborts the running command, cancels the queue and joins the loop.
  void stop();
  bool running() const { return running_; }

  /// Checks legality against the current state and service arguments, then
  /// enqueues. `validate_only` decides without enqueuing. EngineDown when
  /// the loop is not running.
  SubmitResult submit(const CommandEnvelope& command, bool validate_only = false);

  /// Point-in-time snapshot taken on the loop thread:
  ///     {"state", "route", "device", "time", "axes": {name: {...}}, "power": {...} | null,
  ///      "calibration_age_s": s | null, "busy": id | null, "commands": [...]}
  nlohmann::json state() const;
  align::CouplingState coupling_state() const { return state_; }

  /// NoFrameYet before the first grab.
  EncodedFrame frame(bool annotated) const;

  Subscription subscribe(const std::set<TelemetryKind>& kinds = {}, std::size_t capacity = 256);
  TelemetryBus& telemetry() { return bus_; }

  std::optional<CommandRecord> command(const std::string& id) const;

  /// Runs `task` on the loop thread between commands.
  std::future<void> post(std::function<void(campaign::Engine&)> task);

  const std::filesystem::path& runs_dir() const { return runs_dir_; }
  /// `runs_dir/<id>/report.json`. NotFound for an id that is not a plain
  /// directory name or has no report.
  std::filesystem::path report_path(const std::string& run_id) const;

 private:
  struct Work {
    std::optional<std::string> command_id;
    std::packaged_task<void()> task;
  };
  struct StoredFrame;

  void loop();
  void install_hooks();
  void remove_hooks();
  bool next_work(Work& out, std::chrono::duration<double> wait);
  bool has_work() const;
  void execute(const std::string& id);
  nlohmann::json run(const CommandEnvelope& c);
  void idle_tick();
  void supervise();
  void publish(TelemetryKind kind, nlohmann::json payload);
  void refresh();
  void keep_frame(const Frame& frame);
  void set_status(const std::string& id, CommandStatus status, nlohmann::json result = {}, std::string error = {});
  std::optional<std::string> check_arguments(const CommandEnvelope& c) const;
  const campaign::LayoutDevice* find_device(const std::string& id) const;

  campaign::Engine& engine_;
  ServiceOptions options_;
  std::filesystem::path runs_dir_;
  std::vector<vision::Template> templates_;
  TelemetryBus bus_;

  std::atomic<bool> running_{false};
  std::atomic<bool> stopping_{false};
  std::atomic<bool> campaign_stop_{false};
  std::atomic<align::CouplingState> state_{align::CouplingState::Idle};
  std::thread thread_;

  mutable std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::deque<Work> queue_;

  mutable std::mutex commands_mutex_;
  std::map<std::string, CommandRecord> commands_;
  std::deque<std::string> order_;
  std::set<std::string> seen_ids_;
  std::optional<std::string> busy_;

  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const nlohmann::json> snapshot_;

  mutable std::mutex frame_mutex_;
  std::shared_ptr<const StoredFrame> frame_;
  std::chrono::steady_clock::time_point last_frame_{};
  std::chrono::steady_clock::time_point last_idle_frame_{};
};

}  // namespace atomics::service
