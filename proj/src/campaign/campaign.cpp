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

#include "atomics/campaign/campaign.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <future>
#include <memory>
#include <set>
#include <sstream>

#include "atomics/campaign/persist.hpp"
#include "atomics/core/error.hpp"

namespace atomics::campaign {

using align::CouplingState;
using align::Event;
using hal::AxisId;
using hal::Tower;
using nlohmann::json;

namespace {

Vec2 stage(const hal::Bench& bench, Tower fiber) {
  const AxisId x = align::fiber_axis(fiber, hal::AxisName::X), y = align::fiber_axis(fiber, hal::AxisName::Y);
  return {bench.axis_state(x).estimated_position, bench.axis_state(y).estimated_position};
}

Vec2 chip(const hal::Bench& bench) {
  return {bench.axis_state(hal::axes::chip_x).estimated_position,
          bench.axis_state(hal::axes::chip_y).estimated_position};
}

void place(align::Controller& ctl, Tower fiber, Vec2 origin, Vec2 desired) {
  hal::Bench& bench = ctl.bench();
  const Vec2 delta = desired - (origin + stage(bench, fiber));
  if (delta.norm() <= ctl.config().coarse_target) return;
  bench.move_relative(align::fiber_axis(fiber, hal::AxisName::X), delta.x);
  bench.move_relative(align::fiber_axis(fiber, hal::AxisName::Y), delta.y);
}

}  // namespace

void prepare_fibers(align::Controller& ctl) {
  if (ctl.state() != CouplingState::Idle)
    throw Error(ErrorCode::IllegalInState, "fiber prep needs Idle, not " + std::string(to_string(ctl.state())));
  const align::AlignConfig& c = ctl.config();
  const double safe = c.contact_plane - c.z_keepout - c.retract;
  for (AxisId z : {hal::axes::left_z, hal::axes::right_z})
    if (ctl.bench().axis_state(z).commanded_position > safe) ctl.bench().move_absolute(z, safe);
}

void position_fibers(align::Controller& ctl, const CampaignOptions& opt, const LayoutDevice& dev) {
  hal::Bench& bench = ctl.bench();
  const align::AlignConfig& c = ctl.config();
  if (opt.traversal == Traversal::MoveChiplet) {
    const Vec2 left_tip = opt.left_tip_origin + stage(bench, Tower::LeftFiber);
    const double y = left_tip.y - c.chip_origin.y - dev.input.y;
    if (std::abs(y - chip(bench).y) > 1e-9) bench.move_absolute(hal::axes::chip_y, y);
  }
  const Vec2 base = c.chip_origin + chip(bench);
  place(ctl, Tower::LeftFiber, opt.left_tip_origin, base + dev.input + Vec2{-opt.approach_offset, 0.0});
  place(ctl, Tower::RightFiber, opt.right_tip_origin, base + dev.output + Vec2{opt.approach_offset, 0.0});
}

namespace {

std::string utc_now(const char* format) {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, format, &tm);
  return buf;
}

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::ValidationError, "report: " + what); }

const json& require(const json& j, const char* key, json::value_t type, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) invalid(where + key + " missing");
  const json& v = j.at(key);
  const bool ok = type == json::value_t::number_float ? v.is_number()
                  : type == json::value_t::number_unsigned ? v.is_number_unsigned()
                                                           : v.type() == type;
  if (!ok) invalid(where + key + " has the wrong type");
  return v;
}

json dataset_to_json(const DatasetRef& d) {
  return {{"path", d.path},
          {"sha256", d.sha256},
          {"kind", std::string(hal::to_string(d.kind))},
          {"columns", d.columns},
          {"rows", d.rows}};
}

DatasetRef dataset_from_json(const json& j, const std::string& where) {
  DatasetRef d;
  d.path = require(j, "path", json::value_t::string, where).get<std::string>();
  d.sha256 = require(j, "sha256", json::value_t::string, where).get<std::string>();
  const auto kind = hal::parse_daq_kind(require(j, "kind", json::value_t::string, where).get<std::string>());
  if (!kind) invalid(where + "kind is unknown");
  d.kind = *kind;
  for (const json& c : require(j, "columns", json::value_t::array, where)) {
    if (!c.is_string()) invalid(where + "columns must be strings");
    d.columns.push_back(c.get<std::string>());
  }
  d.rows = require(j, "rows", json::value_t::number_unsigned, where).get<std::size_t>();
  if (d.sha256.size() != 64) invalid(where + "sha256 is not a SHA-256 digest");
  return d;
}

/// Samples the bench's power stream into telemetry.csv at a bounded rate.
class TelemetryRecorder {
 public:
  TelemetryRecorder(align::Controller& ctl, std::filesystem::path path, double period, Writer& writer)
      : ctl_(ctl), path_(std::move(path)), period_(period), writer_(writer), previous_(ctl.bench().sink()) {
    if (!std::filesystem::exists(path_)) buffer_ = "timestamp,watts,state,route\n";
    ctl_.bench().set_sink([this](const hal::BenchEvent& e) {
      if (previous_) previous_(e);
      if (const auto* s = std::get_if<PowerSample>(&e)) record(*s);
    });
  }
  ~TelemetryRecorder() {
    ctl_.bench().set_sink(previous_);
    flush();
  }

  void flush() {
    if (buffer_.empty()) return;
    writer_.submit([path = path_, rows = std::move(buffer_)] {
      std::ofstream out(path, std::ios::app);
      out << rows;
    });
    buffer_.clear();
  }

 private:
  void record(const PowerSample& s) {
    if (last_ && s.timestamp < *last_ + period_) return;
    last_ = s.timestamp;
    std::ostringstream row;
    row.precision(12);
    row << s.timestamp << ',' << s.power << ',' << align::to_string(ctl_.state()) << ',' << to_string(s.route)
        << '\n';
    buffer_ += row.str();
  }

  align::Controller& ctl_;
  std::filesystem::path path_;
  double period_;
  Writer& writer_;
  std::function<void(const hal::BenchEvent&)> previous_;
  std::optional<double> last_;
  std::string buffer_;
};

class Runner {
 public:
  Runner(align::Controller& ctl, const ChipLayout& layout, const std::vector<AcquisitionSpec>& acquisitions,
         const CampaignOptions& options)
      : ctl_(ctl), bench_(ctl.bench()), layout_(layout), acquisitions_(acquisitions), opt_(options) {}

  CampaignReport run() {
    if (ctl_.state() != CouplingState::Idle)
      throw Error(ErrorCode::IllegalInState, "campaign needs Idle, not " + std::string(to_string(ctl_.state())));
    if (!ctl_.calibration()) throw Error(ErrorCode::CalibrationStale, "campaign needs a camera calibration");
    if (opt_.run_dir.empty()) throw Error(ErrorCode::MalformedConfig, "campaign needs a run directory");
    std::filesystem::create_directories(opt_.run_dir / "datasets");

    std::map<std::string, DeviceReport> prior;
    if (opt_.resume && std::filesystem::exists(opt_.run_dir / "report.json")) {
      CampaignReport old = load_report(opt_.run_dir);
      if (old.chiplet != layout_.chiplet)
        throw Error(ErrorCode::ValidationError, "resume: run directory belongs to chiplet " + old.chiplet);
      for (DeviceReport& d : old.devices) prior.emplace(d.device_id, std::move(d));
    }

    report_.chiplet = layout_.chiplet;
    report_.traversal = opt_.traversal;
    report_.started = utc_now("%Y-%m-%dT%H:%M:%SZ");
    const std::vector<LayoutDevice> order = column_major(layout_);

    align::RunLog events;
    align::RunLog* previous_log = ctl_.run_log();
    events.open(opt_.run_dir / "events.jsonl");
    if (previous_log) events.add_listener([previous_log](const json& e) { previous_log->append(e); });
    ctl_.set_run_log(&events);
    struct Restore {
      align::Controller& c;
      align::RunLog* log;
      ~Restore() { c.set_run_log(log); }
    } restore{ctl_, previous_log};

    Writer writer;
    {
      TelemetryRecorder telemetry(ctl_, opt_.run_dir / "telemetry.csv", opt_.telemetry_period, writer);
      bool prepared = false, stop = false;
      for (const LayoutDevice& dev : order) {
        if (stop || (opt_.stop && opt_.stop->load())) {
          report_.aborted = report_.aborted || !stop;
          report_.devices.push_back(skipped(dev));
          stop = true;
          continue;
        }
        if (auto it = prior.find(dev.id); it != prior.end() && reusable(it->second)) {
          report_.devices.push_back(it->second);
          continue;
        }
        if (!prepared) {
          prepare_fibers(ctl_);
          prepared = true;
        }
        DeviceReport r = attempt(dev, writer);
        report_.devices.push_back(r);
        telemetry.flush();
        persist(writer);
        if (opt_.on_device) opt_.on_device(r);
        if (aborted_) report_.aborted = true;
        if (aborted_ || (opt_.fail_fast && !r.coupled)) stop = true;
      }
    }
    report_.finished = utc_now("%Y-%m-%dT%H:%M:%SZ");
    persist(writer);
    writer.drain();
    return report_;
  }

 private:
  DeviceReport skipped(const LayoutDevice& dev) const {
    DeviceReport r;
    r.device_id = dev.id;
    r.environment = environment();
    r.error = "not attempted";
    return r;
  }

  bool reusable(const DeviceReport& d) const {
    return d.coupled && d.error.empty() && d.acquisitions.size() == acquisitions_.size() &&
           datasets_intact(opt_.run_dir, d);
  }

  Environment environment() const {
    Environment e;
    e.pressure_label = opt_.pressure_label;
    e.goniometer_deg = bench_.axis_state(hal::axes::tilt).commanded_position;
    e.temperature_setpoint = bench_.temperature_setpoint();
    return e;
  }

  DeviceReport attempt(const LayoutDevice& dev, Writer& writer) {
    DeviceReport r;
    r.device_id = dev.id;
    r.attempted = true;
    r.environment = environment();
    const double t0 = bench_.now();
    const std::uint64_t s0 = ctl_.samples_used();
    ctl_.record({{"kind", "campaign"}, {"event", "device_start"}, {"device", dev.id}});
    try {
      position_fibers(ctl_, opt_, dev);
      const align::CoupleResult c = ctl_.couple({dev.id, dev.input, dev.output});
      r.coupled = true;
      r.insertion_loss_db = ratio_db(opt_.input_power_w, c.power);
      r.align_duration_s = c.duration;
      r.samples_used = c.samples;

      std::vector<std::future<DatasetRef>> pending;
      for (std::size_t k = 0; k < acquisitions_.size(); ++k) {
        const AcquisitionSpec& spec = acquisitions_[k];
        hal::DaqTrace trace = acquire(ctl_, spec);
        ctl_.record({{"kind", "acquisition"},
                     {"device", dev.id},
                     {"daq_kind", std::string(hal::to_string(spec.kind))},
                     {"rows", trace.rows()}});
        json meta{{"device", dev.id},
                  {"chiplet", layout_.chiplet},
                  {"acquisition", spec.to_json()},
                  {"bench_time", bench_.now()},
                  {"timestamp", utc_now("%Y-%m-%dT%H:%M:%SZ")},
                  {"route", "Daq"},
                  {"state", "Locked"}};
        const std::string name = dev.id + "_" + std::string(hal::to_string(spec.kind)) + "_" + std::to_string(k);
        auto task = std::make_shared<std::packaged_task<DatasetRef()>>(
            [dir = opt_.run_dir, name, trace = std::move(trace), meta = std::move(meta)]() mutable {
              return store_dataset(dir, name, trace, std::move(meta));
            });
        pending.push_back(task->get_future());
        writer.submit([task] { (*task)(); });
      }
      // Retract while the writer finishes.
      ctl_.dispatch(Event::Reset);
      for (auto& f : pending) r.acquisitions.push_back(f.get());
    } catch (const Error& e) {
      r.error = e.what();
      if (e.code() == ErrorCode::Aborted) aborted_ = true;
      if (!r.coupled) {
        r.align_duration_s = bench_.now() - t0;
        r.samples_used = ctl_.samples_used() - s0;
      }
    }
    if (ctl_.state() != CouplingState::Idle) ctl_.dispatch(Event::Reset);
    ctl_.record({{"kind", "campaign"}, {"event", "device_done"}, {"device", dev.id}, {"coupled", r.coupled}});
    return r;
  }

  void persist(Writer& writer) {
    writer.submit([path = opt_.run_dir / "report.json", text = report_.to_json().dump(2)] {
      write_atomic(path, text + "\n");
    });
  }

  align::Controller& ctl_;
  hal::Bench& bench_;
  const ChipLayout& layout_;
  const std::vector<AcquisitionSpec>& acquisitions_;
  const CampaignOptions& opt_;
  CampaignReport report_;
  bool aborted_ = false;
};

}  // namespace

std::string_view to_string(Traversal t) { return t == Traversal::MoveChiplet ? "MoveChiplet" : "MoveFibers"; }

std::optional<Traversal> parse_traversal(std::string_view s) {
  if (s == "MoveChiplet") return Traversal::MoveChiplet;
  if (s == "MoveFibers") return Traversal::MoveFibers;
  return std::nullopt;
}

AcquisitionSpec AcquisitionSpec::from_json(const json& j) {
  try {
    AcquisitionSpec s;
    const auto kind = hal::parse_daq_kind(j.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::MalformedConfig, "acquisition: unknown kind " + j.at("kind").dump());
    s.kind = *kind;
    s.duration = j.at("duration").get<double>();
    if (!(s.duration > 0)) throw Error(ErrorCode::MalformedConfig, "acquisition: duration must be > 0");
    if (j.contains("parameters")) s.parameters = j.at("parameters").get<std::map<std::string, double>>();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedConfig, std::string("acquisition: ") + e.what());
  }
}

json AcquisitionSpec::to_json() const {
  return {{"kind", std::string(hal::to_string(kind))}, {"duration", duration}, {"parameters", parameters}};
}

hal::DaqTrace acquire(align::Controller& controller, const AcquisitionSpec& spec) {
  if (controller.state() != CouplingState::Locked || controller.bench().route() != SwitchRoute::Daq)
    throw Error(ErrorCode::NotLocked, "acquisition needs a Locked coupling on the Daq route, state is " +
                                          std::string(to_string(controller.state())));
  try {
    return controller.bench().acquire({spec.kind, spec.duration, spec.parameters});
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DriverFault) throw Error(ErrorCode::DaqFault, e.what());
    throw;
  }
}

DatasetRef store_dataset(const std::filesystem::path& run_dir, const std::string& name, const hal::DaqTrace& trace,
                         json metadata) {
  const std::vector<std::uint8_t> bytes = encode_columns(trace);
  DatasetRef ref;
  ref.path = "datasets/" + name + ".bin";
  ref.sha256 = sha256_hex(bytes);
  ref.columns = trace.columns;
  ref.rows = trace.rows();
  if (metadata.contains("acquisition"))
    ref.kind = hal::parse_daq_kind(metadata["acquisition"].value("kind", "GenericDaq")).value_or(hal::DaqKind::GenericDaq);
  write_atomic(run_dir / ref.path, bytes);
  metadata["columns"] = trace.columns;
  metadata["rows"] = ref.rows;
  metadata["sample_rate"] = trace.sample_rate;
  metadata["encoding"] = "float64le, column-major";
  metadata["sha256"] = ref.sha256;
  write_atomic(run_dir / ("datasets/" + name + ".json"), metadata.dump(2) + "\n");
  return ref;
}

bool datasets_intact(const std::filesystem::path& run_dir, const DeviceReport& device) {
  for (const DatasetRef& d : device.acquisitions) {
    const auto path = run_dir / d.path;
    if (!std::filesystem::exists(path) || sha256_file(path) != d.sha256) return false;
  }
  return true;
}

CampaignReport run_campaign(align::Controller& controller, const ChipLayout& layout,
                            const std::vector<AcquisitionSpec>& acquisitions, const CampaignOptions& options) {
  return Runner(controller, layout, acquisitions, options).run();
}

std::size_t CampaignReport::coupled_count() const {
  std::size_t n = 0;
  for (const DeviceReport& d : devices) n += d.coupled;
  return n;
}

json CampaignReport::to_json() const {
  json devs = json::array();
  for (const DeviceReport& d : devices) {
    json acq = json::array();
    for (const DatasetRef& a : d.acquisitions) acq.push_back(dataset_to_json(a));
    json e{{"device_id", d.device_id},
           {"attempted", d.attempted},
           {"coupled", d.coupled},
           {"align_duration_s", d.align_duration_s},
           {"samples_used", d.samples_used},
           {"acquisitions", std::move(acq)},
           {"environment",
            {{"pressure_label", d.environment.pressure_label},
             {"goniometer_deg", d.environment.goniometer_deg},
             {"temperature_setpoint",
              d.environment.temperature_setpoint ? json(*d.environment.temperature_setpoint) : json(nullptr)}}}};
    if (d.insertion_loss_db) e["insertion_loss_db"] = *d.insertion_loss_db;
    if (!d.error.empty()) e["error"] = d.error;
    devs.push_back(std::move(e));
  }
  return {{"schema", kReportSchema},
          {"chiplet", chiplet},
          {"traversal", std::string(to_string(traversal))},
          {"started", started},
          {"finished", finished.empty() ? json(nullptr) : json(finished)},
          {"aborted", aborted},
          {"summary", {{"devices", devices.size()}, {"coupled", coupled_count()}}},
          {"devices", std::move(devs)}};
}

CampaignReport CampaignReport::from_json(const json& j) {
  using T = json::value_t;
  if (!j.is_object()) invalid("expected an object");
  if (require(j, "schema", T::string, "") != kReportSchema) invalid("unknown schema");
  CampaignReport r;
  r.chiplet = require(j, "chiplet", T::string, "").get<std::string>();
  const auto t = parse_traversal(require(j, "traversal", T::string, "").get<std::string>());
  if (!t) invalid("traversal is unknown");
  r.traversal = *t;
  r.started = require(j, "started", T::string, "").get<std::string>();
  if (!j.contains("finished")) invalid("finished missing");
  if (j["finished"].is_string()) r.finished = j["finished"].get<std::string>();
  else if (!j["finished"].is_null()) invalid("finished has the wrong type");
  r.aborted = require(j, "aborted", T::boolean, "").get<bool>();
  std::set<std::string> seen;
  const json& devs = require(j, "devices", T::array, "");
  for (std::size_t i = 0; i < devs.size(); ++i) {
    const std::string w = "devices[" + std::to_string(i) + "].";
    const json& e = devs[i];
    DeviceReport d;
    d.device_id = require(e, "device_id", T::string, w).get<std::string>();
    if (!seen.insert(d.device_id).second) invalid(w + "device_id repeats " + d.device_id);
    d.attempted = require(e, "attempted", T::boolean, w).get<bool>();
    d.coupled = require(e, "coupled", T::boolean, w).get<bool>();
    if (e.contains("insertion_loss_db")) {
      if (!e["insertion_loss_db"].is_number()) invalid(w + "insertion_loss_db has the wrong type");
      d.insertion_loss_db = e["insertion_loss_db"].get<double>();
    }
    if (d.coupled != d.insertion_loss_db.has_value()) invalid(w + "insertion_loss_db must be present iff coupled");
    if (d.coupled && !d.attempted) invalid(w + "coupled without an attempt");
    d.align_duration_s = require(e, "align_duration_s", T::number_float, w).get<double>();
    d.samples_used = require(e, "samples_used", T::number_unsigned, w).get<std::uint64_t>();
    for (const json& a : require(e, "acquisitions", T::array, w)) d.acquisitions.push_back(dataset_from_json(a, w));
    if (!d.coupled && !d.acquisitions.empty()) invalid(w + "acquisitions without a coupling");
    const json& env = require(e, "environment", T::object, w);
    d.environment.pressure_label = require(env, "pressure_label", T::string, w + "environment.").get<std::string>();
    d.environment.goniometer_deg = require(env, "goniometer_deg", T::number_float, w + "environment.").get<double>();
    if (!env.contains("temperature_setpoint")) invalid(w + "environment.temperature_setpoint missing");
    if (env["temperature_setpoint"].is_number()) d.environment.temperature_setpoint = env["temperature_setpoint"].get<double>();
    else if (!env["temperature_setpoint"].is_null()) invalid(w + "environment.temperature_setpoint has the wrong type");
    if (e.contains("error")) {
      if (!e["error"].is_string()) invalid(w + "error has the wrong type");
      d.error = e["error"].get<std::string>();
    }
    r.devices.push_back(std::move(d));
  }
  const json& summary = require(j, "summary", T::object, "");
  if (require(summary, "devices", T::number_unsigned, "summary.").get<std::size_t>() != r.devices.size() ||
      require(summary, "coupled", T::number_unsigned, "summary.").get<std::size_t>() != r.coupled_count())
    invalid("summary disagrees with the device list");
  return r;
}

CampaignReport load_report(const std::filesystem::path& run_dir) {
  const auto bytes = read_file(run_dir / "report.json");
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, (run_dir / "report.json").string() + ": " + e.what());
  }
  return CampaignReport::from_json(j);
}

std::filesystem::path new_run_dir(const std::filesystem::path& root) {
  const std::string stamp = utc_now("%Y%m%dT%H%M%SZ");
  std::filesystem::path dir = root / stamp;
  for (int k = 1; std::filesystem::exists(dir); ++k) dir = root / (stamp + "-" + std::to_string(k));
  std::filesystem::create_directories(dir);
  return dir;
}

std::optional<std::filesystem::path> latest_run_dir(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) return std::nullopt;
  std::optional<std::filesystem::path> best;
  for (const auto& e : std::filesystem::directory_iterator(root))
    if (e.is_directory() && (!best || e.path().filename() > best->filename())) best = e.path();
  return best;
}

}  // namespace atomics::campaign
