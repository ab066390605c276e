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

// atomics: command-line entry points.
//
//   atomics campaign --layout L --config C [--resume] [--fail-fast] [--tilt deg] [--time-accel x] [--seed n]
//   atomics couple --device D3 [--local --config C --layout L]
//   atomics abort | status
//   atomics serve [--config C] [--layout L]
//   atomics calibrate --device D0 --out cal.json [--config C --layout L]
//   atomics export-templates --out dir [--config C]
//
// `couple` (without --local), `abort` and `status` talk to a running
// `atomics serve` at ATOMICS_BIND:ATOMICS_PORT.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>

#include "CLI11.hpp"
#include "atomics/campaign/campaign.hpp"
#include "atomics/core/error.hpp"
#include "atomics/core/types.hpp"
#include "atomics/campaign/engine.hpp"
#include "atomics/campaign/layout.hpp"
#include "atomics/service/http.hpp"
#include "atomics/service/service.hpp"
#include "atomics/vision/calibration.hpp"
#include "atomics/vision/detection.hpp"

namespace fs = std::filesystem;
namespace http = boost::beast::http;
using atomics::Error;
using atomics::ErrorCode;
using nlohmann::json;

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

void install_signal_handlers() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
}

fs::path default_layout() { return fs::path(ATOMICS_DATA_DIR) / "layouts/eight_devices.json"; }
fs::path default_config() {
  if (const char* v = std::getenv("ATOMICS_CONFIG"); v && *v) return v;
  return fs::path(ATOMICS_DATA_DIR) / "config/simbench.json";
}

struct EngineFlags {
  fs::path config = default_config();
  std::optional<std::uint64_t> seed;
  std::optional<double> time_accel;
  std::vector<std::string> sabotage;

  void add(CLI::App* app) {
    app->add_option("--config", config, "bench config file (default: $ATOMICS_CONFIG or the shipped simbench config)");
    app->add_option("--seed", seed, "simulation seed");
    app->add_option("--time-accel", time_accel, "simulated seconds per wall second; 0 runs unpaced");
    app->add_option("--sabotage", sabotage, "simulate a device with its couplers missing (repeatable)");
  }

  atomics::campaign::EngineConfig load() const {
    atomics::campaign::EngineConfig c = atomics::campaign::EngineConfig::load(config);
    if (seed) c.sim.physics.seed = *seed;
    if (time_accel) c.time_accel = *time_accel;
    return c;
  }

  void apply(atomics::campaign::Engine& e) const {
    for (const auto& id : sabotage) e.sim()->set_device_present(id, false);
  }
};

const atomics::campaign::LayoutDevice& find_device(const atomics::campaign::ChipLayout& l, const std::string& id) {
  for (const auto& d : l.devices)
    if (d.id == id) return d;
  throw Error(ErrorCode::NotFound, "device '" + id + "' is not in layout " + l.chiplet);
}

void ensure_calibrated(atomics::campaign::Engine& e, const atomics::campaign::ChipLayout& layout) {
  if (e.controller().calibration() || layout.devices.empty()) return;
  const auto ref = atomics::campaign::column_major(layout).front();
  std::cerr << "calibrating the microscope on " << ref.id << "\n";
  e.controller().calibrate(e.target(ref));
}

// ---------------------------------------------------------------------------
// Service client.

struct Endpoint {
  std::string host = "127.0.0.1";
  std::string port = "8080";

  static Endpoint from_env() {
    Endpoint e;
    if (const char* v = std::getenv("ATOMICS_BIND"); v && *v && std::string(v) != "0.0.0.0") e.host = v;
    if (const char* v = std::getenv("ATOMICS_PORT"); v && *v) e.port = v;
    return e;
  }
};

std::pair<int, json> call(const Endpoint& ep, http::verb verb, const std::string& target, const json& body = nullptr,
                          const std::string& token = {}) {
  namespace asio = boost::asio;
  asio::io_context ioc;
  asio::ip::tcp::resolver resolver(ioc);
  boost::beast::tcp_stream stream(ioc);
  boost::beast::error_code ec;
  stream.connect(resolver.resolve(ep.host, ep.port, ec), ec);
  if (ec) throw Error(ErrorCode::EngineDown, "no service at " + ep.host + ":" + ep.port + ": " + ec.message());
  http::request<http::string_body> req{verb, target, 11};
  req.set(http::field::host, ep.host);
  if (!token.empty()) req.set(http::field::authorization, "Bearer " + token);
  if (!body.is_null()) {
    req.set(http::field::content_type, "application/json");
    req.body() = body.dump();
  }
  req.prepare_payload();
  http::write(stream, req);
  boost::beast::flat_buffer buffer;
  http::response<http::string_body> res;
  http::read(stream, buffer, res);
  return {static_cast<int>(res.result_int()), json::parse(res.body(), nullptr, false)};
}

std::string command_id(const char* prefix) {
  return std::string(prefix) + "-" +
         std::to_string(std::chrono::system_clock::now().time_since_epoch() / std::chrono::microseconds(1));
}

int remote_couple(const std::string& device) {
  const Endpoint ep = Endpoint::from_env();
  const auto [ls, lease] = call(ep, http::verb::post, "/lease", {{"client", "atomics-cli"}});
  if (ls != 200) {
    std::cerr << "operator role held by " << lease.value("holder", "?") << "\n";
    return 2;
  }
  const std::string token = lease["token"];
  const std::string id = command_id("couple");
  const auto [cs, reply] = call(ep, http::verb::post, "/command",
                                {{"id", id}, {"verb", "StartCouple"}, {"args", {{"device", device}}}, {"issued_by", "atomics-cli"}},
                                token);
  if (cs != 202) {
    std::cerr << "rejected: " << reply.value("reason", reply.dump()) << "\n";
    return 2;
  }
  auto heartbeat = std::chrono::steady_clock::now();
  for (;;) {
    std::this_thread::sleep_for(std::chrono::milliseconds(250));
    if (g_interrupted) {
      call(ep, http::verb::post, "/command", {{"id", command_id("abort")}, {"verb", "Abort"}});
      std::cerr << "aborted\n";
      return 130;
    }
    if (std::chrono::steady_clock::now() - heartbeat > std::chrono::seconds(10)) {
      call(ep, http::verb::post, "/lease", {{"token", token}});
      heartbeat = std::chrono::steady_clock::now();
    }
    const auto [ss, state] = call(ep, http::verb::get, "/state");
    for (const auto& c : state["commands"]) {
      if (c["id"] != id || c["status"] == "Queued" || c["status"] == "Running") continue;
      call(ep, http::verb::post, "/lease", {{"token", token}, {"release", true}});
      std::cout << c.dump(2) << "\n";
      return c["status"] == "Done" ? 0 : 1;
    }
  }
}

// ---------------------------------------------------------------------------
// Subcommands.

int run_campaign_cmd(const EngineFlags& flags, const fs::path& layout_path, bool resume, std::optional<fs::path> run_dir,
                     bool fail_fast, std::optional<double> tilt, std::optional<std::string> traversal,
                     std::optional<fs::path> runs_dir) {
  using namespace atomics::campaign;
  EngineConfig cfg = flags.load();
  if (traversal) {
    const auto t = parse_traversal(*traversal);
    if (!t) throw Error(ErrorCode::MalformedConfig, "traversal must be MoveChiplet or MoveFibers");
    cfg.campaign.traversal = *t;
  }
  if (runs_dir) cfg.campaign.runs_dir = *runs_dir;
  const ChipLayout layout = load_layout(layout_path);
  Engine engine(cfg);
  flags.apply(engine);
  ensure_calibrated(engine, layout);
  if (tilt) engine.controller().set_tilt(*tilt);

  CampaignOptions opt = engine.campaign_options();
  opt.fail_fast = fail_fast || cfg.campaign.fail_fast;
  if (run_dir) {
    opt.run_dir = *run_dir;
  } else if (resume) {
    const auto latest = latest_run_dir(cfg.campaign.runs_dir);
    if (!latest) throw Error(ErrorCode::NotFound, "--resume: no run under " + cfg.campaign.runs_dir.string());
    opt.run_dir = *latest;
  } else {
    opt.run_dir = new_run_dir(cfg.campaign.runs_dir);
  }
  opt.resume = resume;
  opt.stop = &g_interrupted;
  opt.on_device = [](const DeviceReport& d) {
    std::cout << d.device_id << "  " << (d.coupled ? "coupled" : "FAILED");
    if (d.insertion_loss_db) std::printf("  IL %.2f dB", *d.insertion_loss_db);
    if (!d.error.empty()) std::cout << "  " << d.error;
    std::cout << std::endl;
  };
  std::cerr << "run directory " << opt.run_dir.string() << "\n";
  const CampaignReport report = run_campaign(engine.controller(), layout, cfg.campaign.acquisitions, opt);
  std::cout << report.coupled_count() << "/" << report.devices.size() << " coupled"
            << (report.aborted ? " (interrupted)" : "") << "\n";
  return report.all_coupled() ? 0 : 1;
}

int local_couple(const EngineFlags& flags, const fs::path& layout_path, const std::string& device) {
  using namespace atomics::campaign;
  Engine engine(flags.load());
  flags.apply(engine);
  const ChipLayout layout = load_layout(layout_path);
  const LayoutDevice& dev = find_device(layout, device);
  ensure_calibrated(engine, layout);
  prepare_fibers(engine.controller());
  position_fibers(engine.controller(), engine.campaign_options(), dev);
  const auto r = engine.controller().couple(engine.target(dev));
  std::cout << json{{"device", r.device},
                    {"state", std::string(atomics::align::to_string(engine.controller().state()))},
                    {"power_w", r.power},
                    {"insertion_loss_db", atomics::ratio_db(engine.campaign_options().input_power_w, r.power)},
                    {"samples", r.samples},
                    {"duration_s", r.duration}}
                   .dump(2)
            << "\n";
  return 0;
}

int serve(const EngineFlags& flags, const fs::path& layout_path, bool calibrate) {
  using namespace atomics;
  campaign::EngineConfig cfg = flags.load();
  if (cfg.time_accel <= 0.0) {
    std::cerr << "serving in real time (time_accel 1); pass --time-accel to change\n";
    cfg.time_accel = 1.0;
  }
  campaign::Engine engine(cfg);
  flags.apply(engine);
  service::ServiceOptions so;
  so.layout = campaign::load_layout(layout_path);
  service::Service svc(engine, so);
  svc.start();
  if (calibrate && !engine.controller().calibration() && !so.layout.devices.empty()) {
    const auto ref = campaign::column_major(so.layout).front();
    svc.submit({"startup-calibration", align::Verb::Calibrate, {{"device", ref.id}}, "atomics-serve"});
  }
  service::HttpServer server(svc, service::HttpOptions::from_env());
  server.start();
  std::cerr << "listening on port " << server.port() << "\n";
  install_signal_handlers();
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  std::cerr << "shutting down\n";
  server.stop();
  svc.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"atomics: automated fiber-to-chip coupling on a simulated or real bench"};
  app.require_subcommand(1);

  EngineFlags flags;
  fs::path layout = default_layout();

  auto* campaign = app.add_subcommand("campaign", "couple, acquire and persist every device of a layout");
  flags.add(campaign);
  campaign->add_option("--layout", layout, "chip layout file")->required()->check(CLI::ExistingFile);
  bool resume = false, fail_fast = false;
  std::optional<double> tilt;
  std::optional<std::string> traversal;
  std::optional<fs::path> run_dir, runs_dir;
  campaign->add_flag("--resume", resume, "continue the latest run, skipping devices already done");
  campaign->add_flag("--fail-fast", fail_fast, "stop at the first device that fails");
  campaign->add_option("--tilt", tilt, "goniometer angle in degrees (0-10) for the whole run");
  campaign->add_option("--traversal", traversal, "MoveChiplet or MoveFibers");
  campaign->add_option("--run-dir", run_dir, "run directory (default: a new one under the runs directory)");
  campaign->add_option("--runs-dir", runs_dir, "parent of run directories");

  auto* couple = app.add_subcommand("couple", "couple one device and report the locked power");
  std::string device;
  bool local = false;
  couple->add_option("--device", device, "device id")->required();
  couple->add_flag("--local", local, "run in-process on the simulated bench instead of a running service");
  flags.add(couple);
  couple->add_option("--layout", layout, "chip layout file (with --local)");

  auto* abort = app.add_subcommand("abort", "abort whatever the running service is doing");
  auto* status = app.add_subcommand("status", "print the running service's state snapshot");

  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP/WebSocket service (ATOMICS_BIND, ATOMICS_PORT)");
  flags.add(serve_cmd);
  serve_cmd->add_option("--layout", layout, "chip layout file");
  bool no_calibrate = false;
  serve_cmd->add_flag("--no-calibrate", no_calibrate, "skip the startup camera calibration");

  auto* calibrate = app.add_subcommand("calibrate", "calibrate the microscope and write the record");
  fs::path out;
  flags.add(calibrate);
  calibrate->add_option("--device", device, "reference device")->required();
  calibrate->add_option("--layout", layout, "chip layout file");
  calibrate->add_option("--out", out, "calibration file to write")->required();

  auto* export_templates = app.add_subcommand("export-templates", "write the detection templates to a directory");
  flags.add(export_templates);
  export_templates->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*campaign) {
      install_signal_handlers();
      return run_campaign_cmd(flags, layout, resume, run_dir, fail_fast, tilt, traversal, runs_dir);
    }
    if (*couple) {
      if (local) return local_couple(flags, layout, device);
      install_signal_handlers();
      return remote_couple(device);
    }
    if (*abort) {
      const auto [s, r] = call(Endpoint::from_env(), http::verb::post, "/command",
                               {{"id", command_id("abort")}, {"verb", "Abort"}, {"issued_by", "atomics-cli"}});
      std::cout << r.dump(2) << "\n";
      return s == 202 ? 0 : 1;
    }
    if (*status) {
      const auto [s, r] = call(Endpoint::from_env(), http::verb::get, "/state");
      std::cout << r.dump(2) << "\n";
      return s == 200 ? 0 : 1;
    }
    if (*serve_cmd) return serve(flags, layout, !no_calibrate);
    if (*calibrate) {
      atomics::campaign::Engine engine(flags.load());
      const auto l = atomics::campaign::load_layout(layout);
      const auto rec = engine.controller().calibrate(engine.target(find_device(l, device)));
      atomics::vision::save_calibration(out, rec);
      std::printf("rms residual %.3f px, written to %s\n", rec.calibration.rms_residual, out.c_str());
      return 0;
    }
    if (*export_templates) {
      atomics::campaign::Engine engine(flags.load());
      atomics::vision::save_templates(out, engine.controller().templates());
      std::printf("%zu templates written to %s\n", engine.controller().templates().size(), out.c_str());
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
