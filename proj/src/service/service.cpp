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

#include "atomics/service/service.hpp"

#include <algorithm>
#include <cctype>
#include <variant>

#include "atomics/campaign/campaign.hpp"
#include "atomics/core/error.hpp"
#include "atomics/vision/detection.hpp"

namespace atomics::service {

using align::CouplingState;
using align::Verb;
using nlohmann::json;
using Steady = std::chrono::steady_clock;

struct Service::StoredFrame {
  Frame frame;
};

namespace {

std::string state_name(CouplingState s) { return std::string(align::to_string(s)); }

bool valid_run_id(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_' || c == '.';
  });
}

json power_json(const PowerSample& s) {
  return {{"timestamp", s.timestamp}, {"watts", s.power}, {"route", std::string(to_string(s.route))}};
}

json axis_json(const hal::AxisState& s) {
  return {{"commanded", s.commanded_position},
          {"estimated", s.estimated_position},
          {"uncertainty", s.uncertainty},
          {"moving", s.moving}};
}

}  // namespace

json EncodedFrame::sidecar() const {
  json j{{"width", width}, {"height", height}, {"exposure_id", exposure_id},
         {"camera_encoder", {camera_encoder.x, camera_encoder.y, camera_encoder.z}}};
  if (detections) j["detections"] = to_json(*detections);
  return j;
}

Service::Service(campaign::Engine& engine, ServiceOptions options)
    : engine_(engine),
      options_(std::move(options)),
      runs_dir_(options_.runs_dir.empty() ? engine.config().campaign.runs_dir : options_.runs_dir),
      templates_(engine.controller().templates()) {}

Service::~Service() { stop(); }

void Service::start() {
  if (running_ || thread_.joinable()) throw Error(ErrorCode::EngineDown, "a service loop starts only once");
  state_ = engine_.controller().state();
  running_ = true;
  thread_ = std::thread([this] { loop(); });
}

void Service::stop() {
  if (!running_.exchange(false)) return;
  stopping_ = true;
  campaign_stop_ = true;
  {
    std::lock_guard lock(commands_mutex_);
    if (busy_) engine_.controller().request_abort();
  }
  queue_cv_.notify_all();
  thread_.join();
}

SubmitResult Service::submit(const CommandEnvelope& c, bool validate_only) {
  if (!running_) throw Error(ErrorCode::EngineDown, "command loop is not running");
  SubmitResult r;
  r.id = c.id;
  r.state = state_.load();
  const auto reject = [&](const std::string& why) {
    r.reason = why;
    return r;
  };
  const std::string in_state = " (state " + state_name(r.state) + ")";
  if (c.id.empty()) return reject("missing id" + in_state);
  {
    std::lock_guard lock(commands_mutex_);
    if (seen_ids_.count(c.id)) return reject("duplicate id" + in_state);
  }
  const align::Legality legal = align::command_legality(r.state, c.verb, c.args);
  if (!legal.ok) return reject(legal.reason);
  if (auto why = check_arguments(c)) return reject(*why + in_state);
  r.accepted = true;
  if (validate_only) return r;

  {
    std::lock_guard lock(commands_mutex_);
    if (!seen_ids_.insert(c.id).second) {
      r.accepted = false;
      return reject("duplicate id" + in_state);
    }
    commands_[c.id] = CommandRecord{c, CommandStatus::Queued, {}, {}};
    order_.push_back(c.id);
    while (order_.size() > options_.history) {
      commands_.erase(order_.front());
      order_.pop_front();
    }
  }

  Work w;
  w.command_id = c.id;
  {
    std::lock_guard lock(queue_mutex_);
    if (c.verb == Verb::Abort) {
      engine_.controller().request_abort();
      campaign_stop_ = true;
      std::vector<std::string> cancelled;
      std::erase_if(queue_, [&](const Work& q) {
        if (!q.command_id) return false;
        cancelled.push_back(*q.command_id);
        return true;
      });
      for (const auto& id : cancelled) set_status(id, CommandStatus::Cancelled, {}, "cancelled by " + c.id);
      queue_.push_front(std::move(w));
    } else {
      queue_.push_back(std::move(w));
    }
  }
  queue_cv_.notify_all();
  return r;
}

std::optional<std::string> Service::check_arguments(const CommandEnvelope& c) const {
  switch (c.verb) {
    case Verb::StartCouple:
    case Verb::Calibrate: {
      const std::string id = c.args.value("device", json()).is_string() ? c.args["device"].get<std::string>() : "";
      if (!find_device(id)) return "unknown device '" + id + "'";
      return std::nullopt;
    }
    case Verb::StartCampaign: {
      if (options_.layout.devices.empty()) return std::string("no layout loaded");
      if (c.args.contains("resume")) {
        const json& r = c.args["resume"];
        if (!r.is_string() || !valid_run_id(r.get<std::string>()) ||
            !std::filesystem::is_directory(runs_dir_ / r.get<std::string>()))
          return std::string("unknown run to resume");
      }
      if (c.args.contains("fail_fast") && !c.args["fail_fast"].is_boolean()) return std::string("fail_fast must be a boolean");
      if (c.args.contains("devices")) {
        const json& d = c.args["devices"];
        if (!d.is_array() || d.empty()) return std::string("devices must be a non-empty list");
        for (const auto& id : d)
          if (!id.is_string() || !find_device(id.get<std::string>())) return "unknown device " + id.dump();
      }
      return std::nullopt;
    }
    default:
      return std::nullopt;
  }
}

const campaign::LayoutDevice* Service::find_device(const std::string& id) const {
  for (const auto& d : options_.layout.devices)
    if (d.id == id) return &d;
  return nullptr;
}

json Service::state() const {
  json j;
  {
    std::lock_guard lock(snapshot_mutex_);
    j = snapshot_ ? *snapshot_ : json{{"state", state_name(state_.load())}};
  }
  std::lock_guard lock(commands_mutex_);
  j["busy"] = busy_ ? json(*busy_) : json();
  json cmds = json::array();
  for (const auto& id : order_) cmds.push_back(commands_.at(id).to_json());
  j["commands"] = std::move(cmds);
  return j;
}

std::optional<CommandRecord> Service::command(const std::string& id) const {
  std::lock_guard lock(commands_mutex_);
  auto it = commands_.find(id);
  if (it == commands_.end()) return std::nullopt;
  return it->second;
}

EncodedFrame Service::frame(bool annotated) const {
  std::shared_ptr<const StoredFrame> f;
  {
    std::lock_guard lock(frame_mutex_);
    f = frame_;
  }
  if (!f) throw Error(ErrorCode::NoFrameYet, "no camera frame grabbed yet");
  EncodedFrame e;
  e.width = f->frame.width;
  e.height = f->frame.height;
  e.exposure_id = f->frame.exposure_id;
  e.camera_encoder = f->frame.camera_encoder;
  e.png = vision::encode_png(f->frame);
  if (annotated) e.detections = vision::detect(f->frame, templates_);
  return e;
}

Service::Subscription Service::subscribe(const std::set<TelemetryKind>& kinds, std::size_t capacity) {
  std::function<bool(const TelemetryEvent&)> filter;
  if (!kinds.empty() && kinds.size() < kAllKinds.size())
    filter = [kinds](const TelemetryEvent& e) { return kinds.count(e.kind) > 0; };
  return bus_.subscribe(capacity, std::move(filter));
}

std::future<void> Service::post(std::function<void(campaign::Engine&)> task) {
  if (!running_) throw Error(ErrorCode::EngineDown, "command loop is not running");
  Work w;
  w.task = std::packaged_task<void()>([this, task = std::move(task)] { task(engine_); });
  std::future<void> f = w.task.get_future();
  {
    std::lock_guard lock(queue_mutex_);
    queue_.push_back(std::move(w));
  }
  queue_cv_.notify_all();
  return f;
}

std::filesystem::path Service::report_path(const std::string& run_id) const {
  if (!valid_run_id(run_id)) throw Error(ErrorCode::NotFound, "no run '" + run_id + "'");
  const std::filesystem::path p = runs_dir_ / run_id / "report.json";
  if (!std::filesystem::is_regular_file(p)) throw Error(ErrorCode::NotFound, "run '" + run_id + "' has no report");
  return p;
}

// ---------------------------------------------------------------------------
// Loop thread.

void Service::loop() {
  std::function<void(const hal::BenchEvent&)> previous_sink = engine_.bench().sink();
  install_hooks();
  if (options_.background) {
    try {
      engine_.bench().sample_output();
    } catch (const Error&) {
    }
  }
  refresh();

  auto next_sample = Steady::now();
  while (!stopping_) {
    const bool supervising = options_.background && engine_.controller().state() == CouplingState::Locked;
    const auto wait = supervising || !options_.background ? std::chrono::duration<double>(supervising ? 0.0 : 0.1)
                                                          : std::chrono::duration<double>(next_sample - Steady::now());
    Work w;
    if (next_work(w, wait)) {
      if (w.command_id) execute(*w.command_id);
      else w.task();
      continue;
    }
    if (stopping_ || !options_.background) continue;
    if (supervising) {
      supervise();
    } else {
      next_sample = Steady::now() + std::chrono::duration_cast<Steady::duration>(
                                        std::chrono::duration<double>(options_.idle_period));
      idle_tick();
    }
  }

  std::deque<Work> rest;
  {
    std::lock_guard lock(queue_mutex_);
    rest.swap(queue_);
  }
  for (Work& w : rest) {
    if (w.command_id) set_status(*w.command_id, CommandStatus::Cancelled, {}, "service stopped");
    else w.task();
  }
  align::Controller& ctl = engine_.controller();
  if (ctl.state() != CouplingState::Idle) {
    try {
      ctl.dispatch(align::Event::Abort);
    } catch (const Error&) {
    }
  }
  remove_hooks();
  engine_.bench().set_sink(std::move(previous_sink));
}

bool Service::next_work(Work& out, std::chrono::duration<double> wait) {
  std::unique_lock lock(queue_mutex_);
  if (wait.count() > 0.0) queue_cv_.wait_for(lock, wait, [&] { return !queue_.empty() || stopping_; });
  if (queue_.empty() || stopping_) return false;
  out = std::move(queue_.front());
  queue_.pop_front();
  return true;
}

bool Service::has_work() const {
  std::lock_guard lock(queue_mutex_);
  return !queue_.empty();
}

void Service::install_hooks() {
  align::ControllerHooks h;
  h.on_transition = [this](const align::Transition& t) {
    state_ = t.to;
    refresh();
    publish(TelemetryKind::State, {{"from", state_name(t.from)},
                                   {"to", state_name(t.to)},
                                   {"event", std::string(align::to_string(t.event))},
                                   {"device", engine_.controller().machine().target_device()},
                                   {"route", std::string(to_string(engine_.bench().route()))}});
  };
  h.on_detections = [this](const Frame& f, const std::vector<vision::Detection>& d) {
    keep_frame(f);
    publish(TelemetryKind::Detection,
            {{"exposure_id", f.exposure_id}, {"width", f.width}, {"height", f.height}, {"detections", to_json(d)}});
  };
  h.on_alarm = [this](const monitor::Alarm& a) {
    publish(TelemetryKind::Alarm, {{"timestamp", a.timestamp},
                                   {"power", a.power},
                                   {"reference", a.reference},
                                   {"g_plus", a.g_plus},
                                   {"action", std::string(monitor::to_string(a.action))}});
  };
  engine_.controller().set_hooks(std::move(h));
  engine_.bench().set_sink([this](const hal::BenchEvent& e) {
    refresh();
    if (const auto* s = std::get_if<PowerSample>(&e)) {
      publish(TelemetryKind::Power, power_json(*s));
    } else {
      const auto& a = std::get<hal::AxisEvent>(e);
      json p = axis_json(a.state);
      p["axis"] = a.axis.name();
      publish(TelemetryKind::AxisState, std::move(p));
    }
  });
}

void Service::remove_hooks() { engine_.controller().set_hooks({}); }

void Service::publish(TelemetryKind kind, json payload) { bus_.publish({kind, std::move(payload)}); }

void Service::refresh() {
  const align::Controller& ctl = engine_.controller();
  hal::Bench& bench = engine_.bench();
  json axes = json::object();
  for (hal::AxisId a : hal::all_axes()) axes[a.name()] = axis_json(bench.axis_state(a));
  const auto last = bench.last_sample();
  const auto& cal = ctl.calibration();
  auto snap = std::make_shared<json>(json{
      {"state", state_name(ctl.state())},
      {"route", std::string(to_string(bench.route()))},
      {"device", ctl.machine().target_device()},
      {"time", bench.now()},
      {"axes", std::move(axes)},
      {"power", last ? power_json(*last) : json()},
      {"calibration_age_s", cal ? json(bench.now() - cal->sim_time) : json()},
  });
  std::lock_guard lock(snapshot_mutex_);
  snapshot_ = std::move(snap);
}

void Service::keep_frame(const Frame& f) {
  const auto now = Steady::now();
  std::lock_guard lock(frame_mutex_);
  if (frame_ && now - last_frame_ < std::chrono::duration<double>(options_.frame_period)) return;
  last_frame_ = now;
  frame_ = std::make_shared<const StoredFrame>(StoredFrame{f});
}

void Service::idle_tick() {
  hal::Bench& bench = engine_.bench();
  try {
    bench.sample_output();
  } catch (const Error&) {
  }
  const auto now = Steady::now();
  if (options_.idle_frames && now - last_idle_frame_ >= std::chrono::duration<double>(options_.frame_period)) {
    last_idle_frame_ = now;
    try {
      keep_frame(bench.grab_frame());
    } catch (const Error&) {
    }
  }
}

void Service::supervise() {
  align::HoldOptions o;
  o.duration = 1e12;
  o.on_sample = [this](const PowerSample&) { return !stopping_ && !has_work(); };
  try {
    engine_.controller().hold(o);
  } catch (const Error&) {
    // hold has already moved the machine to Idle or Fault and published it.
  }
}

void Service::set_status(const std::string& id, CommandStatus status, json result, std::string error) {
  std::lock_guard lock(commands_mutex_);
  auto it = commands_.find(id);
  if (it == commands_.end()) return;
  it->second.status = status;
  it->second.result = std::move(result);
  it->second.error = std::move(error);
}

void Service::execute(const std::string& id) {
  CommandEnvelope c;
  {
    std::lock_guard lock(commands_mutex_);
    auto it = commands_.find(id);
    if (it == commands_.end() || it->second.status != CommandStatus::Queued) return;
    it->second.status = CommandStatus::Running;
    c = it->second.command;
    busy_ = id;
  }
  try {
    const CouplingState s = engine_.controller().state();
    const align::Legality legal = align::command_legality(s, c.verb, c.args);
    if (!legal.ok) throw Error(ErrorCode::IllegalInState, legal.reason);
    set_status(id, CommandStatus::Done, run(c));
  } catch (const std::exception& e) {
    set_status(id, CommandStatus::Failed, {}, e.what());
  }
  std::lock_guard lock(commands_mutex_);
  busy_.reset();
}

json Service::run(const CommandEnvelope& c) {
  align::Controller& ctl = engine_.controller();
  switch (c.verb) {
    case Verb::StartCouple: {
      const campaign::LayoutDevice& dev = *find_device(c.args["device"].get<std::string>());
      campaign::prepare_fibers(ctl);
      campaign::position_fibers(ctl, engine_.campaign_options(), dev);
      const align::CoupleResult r = ctl.couple(engine_.target(dev));
      return {{"device", r.device}, {"power", r.power}, {"duration", r.duration}, {"samples", r.samples}};
    }
    case Verb::Calibrate: {
      const campaign::LayoutDevice& dev = *find_device(c.args["device"].get<std::string>());
      const vision::CalibrationRecord rec = ctl.calibrate(engine_.target(dev));
      return {{"version", rec.version}, {"rms_residual_px", rec.calibration.rms_residual}};
    }
    case Verb::Abort:
      ctl.abort();
      return {};
    case Verb::Jog:
      ctl.jog(*hal::AxisId::parse(c.args["axis"].get<std::string>()), c.args["delta"].get<double>());
      return {};
    case Verb::SetSwitch:
      ctl.set_route(*parse_route(c.args["route"].get<std::string>()));
      return {};
    case Verb::SetPolarization: {
      const json& p = c.args["paddles"];
      ctl.set_polarization({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
      return {};
    }
    case Verb::SetTilt:
      ctl.set_tilt(c.args["degrees"].get<double>());
      return {};
    case Verb::StartCampaign: {
      campaign_stop_ = false;
      campaign::ChipLayout layout = options_.layout;
      if (c.args.contains("devices")) {
        const auto wanted = c.args["devices"].get<std::set<std::string>>();
        std::erase_if(layout.devices, [&](const campaign::LayoutDevice& d) { return !wanted.count(d.id); });
      }
      campaign::CampaignOptions o = engine_.campaign_options();
      o.fail_fast = c.args.value("fail_fast", o.fail_fast);
      if (c.args.contains("resume")) {
        o.run_dir = runs_dir_ / c.args["resume"].get<std::string>();
        o.resume = true;
      } else {
        o.run_dir = campaign::new_run_dir(runs_dir_);
      }
      o.stop = &campaign_stop_;
      const campaign::CampaignReport report =
          campaign::run_campaign(ctl, layout, engine_.config().campaign.acquisitions, o);
      return {{"run", o.run_dir.filename().string()},
              {"devices", report.devices.size()},
              {"coupled", report.coupled_count()},
              {"aborted", report.aborted}};
    }
  }
  return {};
}

}  // namespace atomics::service
