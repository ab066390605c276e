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

#include "atomics/align/controller.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>

#include "atomics/core/error.hpp"

namespace atomics::align {

using hal::AxisId;
using hal::AxisName;
using hal::Tower;

AxisId fiber_axis(Tower fiber, AxisName name) { return AxisId::of(fiber, name); }

namespace {

std::string utc_now_iso() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool retryable(ErrorCode c) {
  return c == ErrorCode::DetectionLost || c == ErrorCode::Diverged || c == ErrorCode::NotFound ||
         c == ErrorCode::MeterFault || c == ErrorCode::DriverFault;
}

const char* tip_variant(Tower fiber) { return fiber == Tower::LeftFiber ? "fiber_tip_left" : "fiber_tip_right"; }
const char* coupler_variant(Tower fiber) { return fiber == Tower::LeftFiber ? "coupler_left" : "coupler_right"; }

constexpr Tower kFibers[] = {Tower::LeftFiber, Tower::RightFiber};

}  // namespace

Controller::Controller(hal::Bench& bench, AlignConfig cfg, std::vector<vision::Template> templates,
                       monitor::MonitorConfig monitor_cfg)
    : bench_(bench), cfg_(std::move(cfg)), templates_(std::move(templates)), monitor_(monitor_cfg) {
  cfg_.validate();
}

// ------------------------------------------------------------ plumbing

void Controller::check_abort() {
  if (abort_requested_) throw Error(ErrorCode::Aborted, "operator abort");
}

double Controller::measure() {
  check_abort();
  PowerSample s;
  try {
    s = bench_.route() == SwitchRoute::Daq ? bench_.sample_output() : bench_.read_power();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DriverFault) throw Error(ErrorCode::MeterFault, e.what());
    throw;
  }
  ++samples_;
  last_power_ = s.power;
  if (tracking_) {
    ++tracking_->samples;
    const double db = ratio_db(s.power, tracking_->reference);
    if (db >= -cfg_.lock_threshold_db) ++tracking_->within_band;
    tracking_->worst_db = std::min(tracking_->worst_db, db);
  }
  return s.power;
}

void Controller::move_to(AxisId axis, double target) {
  check_abort();
  if (commanded(axis) == target && !bench_.axis_state(axis).moving) return;
  bench_.move_absolute(axis, target);
}

void Controller::approach(AxisId axis, double target) {
  move_to(axis, target - cfg_.preload);
  move_to(axis, target);
}

void Controller::retract_z() {
  for (Tower f : kFibers) {
    const AxisId z = fiber_axis(f, AxisName::Z);
    const double target = std::max(commanded(z) - cfg_.retract, bench_.axis_state(z).soft_limits.min);
    if (target != commanded(z)) bench_.move_absolute(z, target);
  }
}

void Controller::log(nlohmann::json entry) {
  if (!log_) return;
  entry["t"] = bench_.now();
  entry["state"] = std::string(to_string(state()));
  nlohmann::json pos = nlohmann::json::object();
  for (Tower f : kFibers)
    for (AxisName n : {AxisName::X, AxisName::Y, AxisName::Z}) {
      const AxisId id = fiber_axis(f, n);
      pos[id.name()] = commanded(id);
    }
  pos["Goniometer.Theta"] = commanded(hal::axes::tilt);
  entry["positions"] = std::move(pos);
  entry["power"] = last_power_;
  entry["route"] = std::string(to_string(bench_.route()));
  entry["samples"] = samples_;
  log_->append(entry);
}

Transition Controller::dispatch(Event e, const std::string& device) {
  if (e == Event::Abort || e == Event::Reset) abort_requested_ = false;
  const Transition t = machine_.dispatch(e, bench_.now(), device);
  if (t.route) bench_.set_switch(*t.route);
  if (t.to == CouplingState::Idle || t.to == CouplingState::Fault) monitor_.unlock();
  if (t.retract_z) retract_z();
  nlohmann::json entry{{"kind", "transition"},
                       {"from", std::string(to_string(t.from))},
                       {"event", std::string(to_string(e))}};
  if (!device.empty()) entry["device"] = device;
  log(std::move(entry));
  if (hooks_.on_transition) hooks_.on_transition(t);
  return t;
}

template <typename F>
void Controller::with_retries(const char* phase, F&& f) {
  for (int attempt = 0;; ++attempt) {
    try {
      f();
      return;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Aborted || attempt >= cfg_.retry_budget || !retryable(e.code())) throw;
      machine_.count_retry();
      log({{"kind", "retry"}, {"phase", phase}, {"error", e.what()}});
    }
  }
}

Vec2 Controller::expected_coupler(const DeviceTarget& target, Tower fiber) const {
  const Vec2 chip{bench_.axis_state(hal::axes::chip_x).estimated_position,
                  bench_.axis_state(hal::axes::chip_y).estimated_position};
  return cfg_.chip_origin + chip + (fiber == Tower::LeftFiber ? target.input : target.output);
}

// ------------------------------------------------------------ vision

std::vector<vision::Detection> Controller::detect_near(const Frame& frame, Tower fiber, bool full_frame) {
  vision::DetectOptions opt;
  opt.variants = {tip_variant(fiber), coupler_variant(fiber)};
  if (!full_frame && calibration_) {
    const auto& a = calibration_->calibration.map.linear();
    const double scale = std::sqrt(std::abs(a[0] * a[3] - a[1] * a[2]));
    const Vec2 c = vision::frame_center(frame);
    const int hw = static_cast<int>(std::ceil(cfg_.roi_half_width * scale));
    const int hh = static_cast<int>(std::ceil(cfg_.roi_half_height * scale));
    opt.roi = vision::Roi{static_cast<int>(c.x) - hw, static_cast<int>(c.y) - hh, 2 * hw, 2 * hh};
  }
  last_detections_ = vision::detect(frame, templates_, opt);
  if (hooks_.on_detections) hooks_.on_detections(frame, last_detections_);
  return last_detections_;
}

vision::CalibrationRecord Controller::calibrate(const DeviceTarget& reference) {
  dispatch(Event::StartCalibration);
  try {
    const Vec2 view = expected_coupler(reference, Tower::LeftFiber) - Vec2{cfg_.camera_standoff, 0.0};
    constexpr double kProbe = 30.0;
    std::vector<vision::Correspondence> pts;
    std::optional<Vec2> previous;
    vision::DetectOptions opt;
    opt.variants = {coupler_variant(Tower::LeftFiber)};
    for (auto [i, j] : spiral_lattice(1)) {
      const Vec2 d{kProbe * i, kProbe * j};
      move_to(hal::axes::scope_x, view.x + d.x);
      move_to(hal::axes::scope_y, view.y + d.y);
      const Frame frame = bench_.grab_frame();
      const auto dets = vision::detect(frame, templates_, opt);
      if (hooks_.on_detections) hooks_.on_detections(frame, dets);
      // The probe steps are far smaller than the coupler pitch, so the same
      // coupler is the one nearest to where it was last seen.
      const Vec2 anchor = previous.value_or(vision::frame_center(frame));
      const vision::Detection* best = nullptr;
      for (const auto& det : dets)
        if (!best || (det.centroid - anchor).norm() < (best->centroid - anchor).norm()) best = &det;
      if (!best) throw Error(ErrorCode::DetectionLost, "calibration target not visible");
      const Vec2 cam = frame.camera_encoder.xy();
      pts.push_back({view - cam, best->centroid});
      previous = best->centroid;
    }
    vision::CalibrationRecord rec;
    rec.version = calibration_ ? calibration_->version + 1 : 1;
    rec.timestamp = utc_now_iso();
    rec.sim_time = bench_.now();
    rec.calibration = vision::calibrate(pts);
    calibration_ = rec;
    move_to(hal::axes::scope_x, view.x);
    move_to(hal::axes::scope_y, view.y);
    log({{"kind", "calibration"},
         {"rms_residual_px", rec.calibration.rms_residual},
         {"condition_number", rec.calibration.map.condition_number()}});
    dispatch(Event::PhaseDone);
    return rec;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Aborted) dispatch(Event::Abort);
    else dispatch(Event::FaultRaised);
    throw;
  }
}

double Controller::coarse_align(const DeviceTarget& target, Tower fiber) {
  if (!calibration_) throw Error(ErrorCode::CalibrationStale, "no camera calibration");
  const std::optional<vision::AffineMap2> map = calibration_->calibration.map;
  const Vec2 coupler_expected = expected_coupler(target, fiber);
  const double side = fiber == Tower::LeftFiber ? -1.0 : 1.0;
  const Vec2 view = coupler_expected + Vec2{side * cfg_.camera_standoff, 0.0};
  move_to(hal::axes::scope_x, view.x);
  move_to(hal::axes::scope_y, view.y);

  const AxisId fx = fiber_axis(fiber, AxisName::X), fy = fiber_axis(fiber, AxisName::Y);
  Vec2 coupler_cached = coupler_expected;
  // The chip stage is open loop; its position error moves every coupler.
  const double chip_sigma = std::hypot(bench_.axis_state(hal::axes::chip_x).uncertainty,
                                       bench_.axis_state(hal::axes::chip_y).uncertainty);
  const double gate = cfg_.coupler_gate + 3.0 * chip_sigma;
  int misses = 0, moves = 0;
  double last = std::numeric_limits<double>::infinity();
  for (;;) {
    const Frame frame = bench_.grab_frame();
    check_abort();
    const Vec2 cam = frame.camera_encoder.xy();
    const Vec2 center = vision::frame_center(frame);

    auto locate = [&](const std::vector<vision::Detection>& dets, std::optional<Vec2>& tip,
                      std::optional<Vec2>& coupler) {
      double best_score = -1.0, best_dist = gate;
      for (const auto& d : dets) {
        const Vec2 g = vision::global_position(cam, map, d.centroid, center);
        if (d.variant == tip_variant(fiber) && d.score > best_score) {
          best_score = d.score;
          tip = g;
        } else if (d.variant == coupler_variant(fiber) && (g - coupler_cached).norm() <= best_dist) {
          best_dist = (g - coupler_cached).norm();
          coupler = g;
        }
      }
    };
    std::optional<Vec2> tip, coupler;
    locate(detect_near(frame, fiber, false), tip, coupler);
    if (!tip || !coupler) locate(detect_near(frame, fiber, true), tip, coupler);
    if (!tip || !coupler) {
      if (++misses > cfg_.detection_max_misses)
        throw Error(ErrorCode::DetectionLost,
                    std::string(!tip ? "fiber tip" : "coupler") + " of " + target.id + " not detected");
      continue;
    }
    misses = 0;
    coupler_cached = *coupler;
    const Vec2 offset = *coupler - *tip;
    last = offset.norm();
    if (last <= cfg_.coarse_deadband || moves >= cfg_.coarse_max_iterations) break;
    move_to(fx, commanded(fx) + offset.x);
    move_to(fy, commanded(fy) + offset.y);
    ++moves;
  }
  log({{"kind", "coarse_align"},
       {"device", target.id},
       {"fiber", std::string(hal::to_string(fiber))},
       {"offset", last},
       {"moves", moves}});
  if (last > cfg_.coarse_target)
    throw Error(ErrorCode::DetectionLost, "vision servo stalled at " + std::to_string(last) + " µm");
  return last;
}

// ------------------------------------------------------------ power phases

double Controller::safe_approach_z(double contact_plane) {
  const double ceiling = contact_plane - cfg_.z_keepout;
  for (Tower f : kFibers) {
    const AxisId z = fiber_axis(f, AxisName::Z);
    const hal::SoftLimits configured = bench_.topology()[z].limits;
    if (!(ceiling <= configured.max && ceiling > configured.min))
      throw Error(ErrorCode::KeepoutViolation, z.name() + ": keep-out plane outside the axis limits");
  }
  for (Tower f : kFibers) {
    const AxisId z = fiber_axis(f, AxisName::Z);
    if (commanded(z) > ceiling) move_to(z, ceiling);
    bench_.set_soft_limits(z, {bench_.axis_state(z).soft_limits.min, ceiling});
  }

  const AxisId lz = hal::axes::left_z, rz = hal::axes::right_z;
  double step = cfg_.approach_step;
  for (;;) {
    if (measure() > cfg_.threshold()) break;
    while (step >= cfg_.approach_min_step && std::max(commanded(lz), commanded(rz)) + step > ceiling) step /= 2;
    if (step < cfg_.approach_min_step) break;
    move_to(lz, commanded(lz) + step);
    move_to(rz, commanded(rz) + step);
  }
  log({{"kind", "approach"}, {"ceiling", ceiling}, {"first_light", last_power_ > cfg_.threshold()}});
  return commanded(lz);
}

std::optional<Vec2> Controller::spiral_search() {
  const AxisId ax = hal::axes::left_x, ay = hal::axes::left_y;
  const double x0 = commanded(ax), y0 = commanded(ay);
  const double p = cfg_.spiral_pitch;
  const int rings = static_cast<int>(std::floor(cfg_.spiral_max_radius / p + 1e-9));
  int visited = 0;
  for (auto [i, j] : spiral_lattice(rings)) {
    move_to(ax, x0 + i * p);
    move_to(ay, y0 + j * p);
    ++visited;
    if (measure() > cfg_.threshold()) {
      log({{"kind", "spiral"}, {"found", true}, {"offset", {i * p, j * p}}, {"visited", visited}});
      return Vec2{i * p, j * p};
    }
  }
  move_to(ax, x0);
  move_to(ay, y0);
  log({{"kind", "spiral"}, {"found", false}, {"visited", visited}});
  return std::nullopt;
}

ScanResult Controller::line_scan(AxisId axis, double center, double half_range, int n) {
  if (n < 3) throw Error(ErrorCode::OutOfRange, "line scan needs at least 3 points");
  if (!(half_range > 0)) throw Error(ErrorCode::OutOfRange, "line scan needs a positive half range");
  const hal::SoftLimits lim = bench_.axis_state(axis).soft_limits;
  constexpr double kSlack = 1e-9;  // rounding of window arithmetic near a limit
  if (center - half_range - cfg_.preload < lim.min - kSlack || center + half_range > lim.max + kSlack)
    throw Error(ErrorCode::LimitViolation, axis.name() + ": scan range leaves the soft limits");

  ScanResult s;
  s.axis = axis;
  s.center = center;
  s.half_range = half_range;
  for (int i = 0; i < n; ++i)
    s.positions.push_back(std::min(center - half_range + 2.0 * half_range * i / (n - 1), lim.max));
  // Preload from below so every point is reached moving the same way.
  move_to(axis, s.positions.front() - cfg_.preload);
  for (double x : s.positions) {
    move_to(axis, x);
    s.powers.push_back(measure());
  }
  s.fit = fit_log_quadratic(s, cfg_.dark_floor);
  approach(axis, s.fit ? s.fit->vertex : center);

  nlohmann::json entry{{"kind", "scan"}, {"axis", axis.name()}, {"scan_positions", s.positions}, {"powers", s.powers}};
  if (s.fit) entry["fit"] = {{"vertex", s.fit->vertex}, {"curvature", s.fit->a}, {"r2", s.fit->r2}};
  log(std::move(entry));
  return s;
}

AlignmentResult Controller::fine_align(const FineAlignPlan& plan) {
  double hr_lat = plan.lateral_half_range > 0 ? plan.lateral_half_range : cfg_.scan_half_range;
  double hr_z = plan.z_half_range > 0 ? plan.z_half_range : cfg_.z_scan_half_range;
  const int max_it = plan.max_iterations > 0 ? plan.max_iterations : cfg_.max_iterations;
  constexpr int kMaxWalks = 4;
  const double diverge_ratio = std::pow(10.0, -0.3);
  const double plateau_ratio = std::pow(10.0, cfg_.plateau_db / 10.0);

  AlignmentResult res;
  res.best_power = measure();
  if (res.best_power <= cfg_.threshold()) throw Error(ErrorCode::Diverged, "no light at the start of fine alignment");
  int invalid_streak = 0;
  double previous_round_peak = 0.0;
  for (int it = 1; it <= max_it; ++it) {
    double lat_corr = 0.0, z_corr = 0.0;
    double peak_sum = 0.0;
    int peak_count = 0;
    for (Tower f : plan.towers) {
      for (AxisName name : {AxisName::X, AxisName::Y, AxisName::Z}) {
        if (name == AxisName::Z && !plan.include_z) continue;
        const AxisId axis = fiber_axis(f, name);
        const double start = commanded(axis);
        const hal::SoftLimits lim = bench_.axis_state(axis).soft_limits;
        // Near a limit the window shrinks (down to half) before it shifts.
        const double nominal = name == AxisName::Z ? hr_z : hr_lat;
        const double room = std::min(lim.max - start, start - lim.min - cfg_.preload);
        const double hr = std::clamp(room, 0.5 * nominal, nominal);
        double center = start;
        double corr = hr;
        bool fitted = false, walked = false;
        for (int walk = 0; walk <= kMaxWalks; ++walk) {
          center = std::clamp(center, lim.min + hr + cfg_.preload, lim.max - hr);
          const ScanResult s = line_scan(axis, center, hr, cfg_.scan_points);
          const double seen = *std::max_element(s.powers.begin(), s.powers.end());
          if (s.fit) {
            invalid_streak = 0;
            fitted = true;
            corr = std::abs(s.fit->vertex - start);
            const double peak = std::exp(s.fit->peak) + cfg_.dark_floor;
            res.best_power = std::max(res.best_power, peak);
            if (name != AxisName::Z) peak_sum += peak, ++peak_count;
            break;
          }
          ++invalid_streak;
          if (invalid_streak >= 2 && seen < res.best_power * diverge_ratio)
            throw Error(ErrorCode::Diverged, axis.name() + ": power lost during fine alignment");
          // Peak outside the window: walk toward the brighter end.
          const auto best = std::max_element(s.powers.begin(), s.powers.end()) - s.powers.begin();
          if (seen <= cfg_.threshold() || (best != 0 && best + 1 != static_cast<long>(s.powers.size()))) break;
          const double next = std::clamp(s.positions[best], lim.min + hr + cfg_.preload, lim.max - hr);
          if (next == center) break;
          center = next;
          walked = true;
        }
        // Without a fit the best known place is where the axis started.
        if (!fitted && !walked) approach(axis, start);
        (name == AxisName::Z ? z_corr : lat_corr) = std::max(name == AxisName::Z ? z_corr : lat_corr, corr);
      }
    }
    res.iterations = it;
    res.max_correction = std::max(lat_corr, z_corr);
    if (lat_corr < cfg_.convergence_tol && z_corr < cfg_.z_convergence_tol) {
      res.converged = true;
      break;
    }
    // Corrections at the actuator noise floor never shrink below tolerance;
    // stop once a round no longer raises the fitted peaks.
    const double round_peak = peak_count ? peak_sum / peak_count : 0.0;
    if (it > 1 && round_peak > 0 && round_peak < previous_round_peak * plateau_ratio) {
      res.plateau = true;
      break;
    }
    previous_round_peak = round_peak;
    // Halve toward the floor; a window already below it stays put.
    hr_lat = std::min(hr_lat, std::max(hr_lat / 2.0, cfg_.lateral_floor));
    hr_z = std::min(hr_z, std::max(hr_z / 2.0, cfg_.z_floor));
  }
  res.power = measure();
  log({{"kind", "fine_align"},
       {"iterations", res.iterations},
       {"converged", res.converged},
       {"plateau", res.plateau},
       {"max_correction", res.max_correction},
       {"best_power", res.best_power}});
  return res;
}

PolarizationResult Controller::optimize_polarization() {
  const std::array<double, 3> original = bench_.paddles();
  std::array<double, 3> paddles = original;
  std::vector<double> angles, powers;
  for (int k = 0; k < cfg_.polarization_steps; ++k) {
    const double a = 180.0 * k / cfg_.polarization_steps;
    paddles[0] = a;
    check_abort();
    bench_.set_polarization(paddles);
    angles.push_back(a);
    powers.push_back(measure());
  }
  PolarizationResult r;
  r.scan_max = *std::max_element(powers.begin(), powers.end());
  const double scan_min = *std::min_element(powers.begin(), powers.end());
  if (!(scan_min > 0) || r.scan_max / scan_min < cfg_.flat_ratio) {
    bench_.set_polarization(original);
    log({{"kind", "polarization"}, {"flat", true}, {"ratio", scan_min > 0 ? r.scan_max / scan_min : 0.0}});
    throw Error(ErrorCode::FlatResponse, "polarization response is flat; keeping the current angle");
  }
  const PolarizationFit fit = fit_polarization(angles, powers);
  paddles[0] = fit.theta;
  bench_.set_polarization(paddles);
  r.theta = fit.theta;
  r.predicted = fit.c0 + fit.c1;
  r.power = measure();
  log({{"kind", "polarization"}, {"theta", r.theta}, {"predicted", r.predicted}, {"scan_max", r.scan_max}});
  return r;
}

monitor::StabilityVerdict Controller::check_stability(double reference, double* window_mean) {
  std::vector<PowerSample> window;
  double sum = 0.0;
  for (int i = 0; i < cfg_.stability_window; ++i) {
    const double p = measure();
    window.push_back({bench_.now(), p, bench_.route()});
    sum += p;
  }
  if (window_mean) *window_mean = sum / window.size();
  monitor::StabilityConfig sc;
  sc.min_window = static_cast<std::size_t>(cfg_.stability_window);
  sc.rsd_threshold = cfg_.stability_rsd;
  sc.lock_threshold_db = cfg_.lock_threshold_db;
  const auto v = monitor::stability_check(window, reference, sc);
  log({{"kind", "stability"},
       {"stable", v.verdict == monitor::Verdict::Stable},
       {"rsd", v.window_rsd},
       {"reference", reference}});
  return v;
}

// ------------------------------------------------------------ pipeline

void Controller::lock_from_search(CoupleResult* result) {
  for (int attempt = 0;; ++attempt) {
    try {
      if (!spiral_search()) throw Error(ErrorCode::NotFound, "no first light within the spiral radius");
      dispatch(Event::FirstLightFound);
      const AlignmentResult a = fine_align();
      dispatch(Event::FitConverged);

      double reference = a.power;
      double theta = bench_.paddles()[0];
      try {
        const PolarizationResult p = optimize_polarization();
        reference = p.predicted;
        theta = p.theta;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::FlatResponse) throw;
        reference = measure();
      }
      dispatch(Event::PolDone);

      double mean = 0.0;
      bool stable = false;
      for (int k = 0; k < cfg_.stability_attempts && !stable; ++k)
        stable = check_stability(reference, &mean).verdict == monitor::Verdict::Stable;
      if (!stable) throw Error(ErrorCode::Diverged, "power did not settle after alignment");

      dispatch(Event::StabilityOk);
      lock_reference_ = mean;
      monitor_.lock(mean, cfg_.threshold());
      if (result) {
        result->power = mean;
        result->theta = theta;
        result->fine_iterations = a.iterations;
      }
      return;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Aborted || attempt >= cfg_.retry_budget) throw;
      if (e.code() == ErrorCode::Diverged && state() == CouplingState::FineAlign) {
        dispatch(Event::PowerLost);
      } else if (!(e.code() == ErrorCode::NotFound && state() == CouplingState::SearchFirstLight)) {
        throw;
      }
      machine_.count_retry();
      log({{"kind", "retry"}, {"phase", "search"}, {"error", e.what()}});
    }
  }
}

CoupleResult Controller::couple(const DeviceTarget& target) {
  if (!calibration_) throw Error(ErrorCode::CalibrationStale, "no camera calibration; calibrate first");
  const double t0 = bench_.now();
  const std::uint64_t s0 = samples_;
  CoupleResult r;
  r.device = target.id;
  dispatch(Event::StartCouple, target.id);
  try {
    with_retries("coarse_align", [&] {
      const double left = coarse_align(target, Tower::LeftFiber);
      const double right = coarse_align(target, Tower::RightFiber);
      r.coarse_offset = std::max(left, right);
    });
    dispatch(Event::PhaseDone);
    with_retries("safe_approach", [&] { safe_approach_z(cfg_.contact_plane); });
    dispatch(Event::PhaseDone);
    lock_from_search(&r);
  } catch (const Error& e) {
    log({{"kind", "error"}, {"device", target.id}, {"error", e.what()}});
    if (e.code() == ErrorCode::Aborted) dispatch(Event::Abort);
    else if (state() != CouplingState::Fault) dispatch(Event::FaultRaised);
    throw;
  }
  r.locked = true;
  r.samples = samples_ - s0;
  r.duration = bench_.now() - t0;
  return r;
}

void Controller::realign(HoldStats& stats, monitor::RealignAction action) {
  dispatch(Event::DriftAlarm);
  if (action == monitor::RealignAction::FineRealign) {
    ++stats.fine_realigns;
    try {
      FineAlignPlan plan;
      plan.include_z = false;
      plan.lateral_half_range = cfg_.realign_half_range;
      plan.max_iterations = cfg_.realign_max_iterations;
      fine_align(plan);
      dispatch(Event::FitConverged);
      for (int k = 0; k < cfg_.stability_attempts; ++k) {
        double mean = 0.0;
        if (check_stability(lock_reference_, &mean).verdict == monitor::Verdict::Stable) {
          dispatch(Event::StabilityOk);
          monitor_.lock(mean, cfg_.threshold());
          return;
        }
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Diverged) throw;
    }
  }
  ++stats.full_recouples;
  dispatch(Event::PowerLost);
  const double keep = lock_reference_;
  lock_from_search(nullptr);
  // Supervision continues against the original reference.
  lock_reference_ = keep;
}

HoldStats Controller::hold(const HoldOptions& options) {
  if (state() != CouplingState::Locked) throw Error(ErrorCode::NotLocked, "hold needs a Locked coupling");
  HoldStats stats;
  stats.reference = lock_reference_;
  tracking_ = &stats;
  const double end = bench_.now() + options.duration;
  try {
    while (bench_.now() < end) {
      const double p = measure();
      const PowerSample s{bench_.now(), p, bench_.route()};
      if (options.on_sample && !options.on_sample(s)) break;
      if (auto alarm = monitor_.push(s)) {
        if (!stats.first_alarm_after) stats.first_alarm_after = static_cast<double>(stats.samples);
        ++stats.alarms;
        if (hooks_.on_alarm) hooks_.on_alarm(*alarm);
        log({{"kind", "alarm"},
             {"power", alarm->power},
             {"reference", alarm->reference},
             {"action", std::string(monitor::to_string(alarm->action))}});
        realign(stats, alarm->action);
      }
      if (state() != CouplingState::Locked) break;
    }
  } catch (const Error& e) {
    tracking_ = nullptr;
    log({{"kind", "error"}, {"error", e.what()}});
    if (e.code() == ErrorCode::Aborted) dispatch(Event::Abort);
    else if (state() != CouplingState::Fault) dispatch(Event::FaultRaised);
    throw;
  }
  tracking_ = nullptr;
  return stats;
}

void Controller::set_tilt(double degrees) {
  if (!(degrees >= 0.0 && degrees <= hal::kGoniometerTravelDeg))
    throw Error(ErrorCode::OutOfRange, "tilt must lie within 0-10 degrees");
  if (state() != CouplingState::Idle && state() != CouplingState::Locked)
    throw Error(ErrorCode::IllegalInState, "tilt only in Idle or Locked, not " + std::string(to_string(state())));
  bench_.move_absolute(hal::axes::tilt, degrees);
  log({{"kind", "tilt"}, {"degrees", degrees}});
}

void Controller::jog(AxisId axis, double delta) {
  if (!(std::abs(delta) <= kJogClampUm))
    throw Error(ErrorCode::OutOfRange, "jog clamp: |delta| must not exceed 5 um");
  if (state() != CouplingState::Idle)
    throw Error(ErrorCode::IllegalInState, "jog only in Idle, not " + std::string(to_string(state())));
  bench_.move_relative(axis, delta);
  log({{"kind", "jog"}, {"axis", axis.name()}, {"delta", delta}});
}

void Controller::set_route(SwitchRoute route) {
  const CouplingState s = state();
  const bool ok = route == SwitchRoute::Daq ? s == CouplingState::Locked
                                            : s == CouplingState::Idle || s == CouplingState::Fault;
  if (!ok)
    throw Error(ErrorCode::IllegalInState,
                "route gate: " + std::string(to_string(route)) + " not allowed in " + std::string(to_string(s)));
  bench_.set_switch(route);
  log({{"kind", "route"}, {"to", std::string(to_string(route))}});
}

void Controller::set_polarization(const std::array<double, 3>& paddles) {
  if (state() != CouplingState::Idle)
    throw Error(ErrorCode::IllegalInState, "polarization only in Idle, not " + std::string(to_string(state())));
  bench_.set_polarization(paddles);
  log({{"kind", "polarization"}, {"paddles", paddles}});
}

void Controller::abort() { dispatch(Event::Abort); }

void Controller::reset() { dispatch(Event::Reset); }

}  // namespace atomics::align
