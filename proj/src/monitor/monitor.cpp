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

#include "atomics/monitor/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "atomics/core/error.hpp"

namespace atomics::monitor {

EwmaState ewma_update(EwmaState s, double x) {
  if (s.n_samples == 0) {
    s.mean = x;
    s.variance = 0.0;
  } else {
    const double d = x - s.mean;
    s.mean = (1.0 - s.lambda) * s.mean + s.lambda * x;
    s.variance = (1.0 - s.lambda) * (s.variance + s.lambda * d * d);
  }
  ++s.n_samples;
  return s;
}

int ewma_half_life(double lambda) {
  if (lambda >= 1.0) return 1;
  return static_cast<int>(std::ceil(std::log(0.5) / std::log(1.0 - lambda)));
}

CusumStep cusum_update(CusumState s, double x) {
  if (!s.reference) throw Error(ErrorCode::ReferenceUnset, "cusum has no locked reference");
  if (!(s.sigma > 0)) throw Error(ErrorCode::ReferenceUnset, "cusum noise scale is not set");
  const double z = (*s.reference - x) / s.sigma;
  s.g_plus = std::max(0.0, s.g_plus + z - s.k);
  s.g_minus = std::max(0.0, s.g_minus - z - s.k);
  CusumStep out;
  out.alarm = s.g_plus >= s.h;
  out.upward = s.g_minus >= s.h;
  out.g_plus = s.g_plus;
  if (out.alarm) {
    s.g_plus = 0.0;
    s.g_minus = 0.0;
  } else if (out.upward) {
    s.g_minus = 0.0;
  }
  out.state = s;
  return out;
}

double mad_sigma(std::span<const double> values) {
  if (values.empty()) return 0.0;
  auto median = [](std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    const double hi = v[mid];
    if (v.size() % 2) return hi;
    return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + mid));
  };
  const double m = median({values.begin(), values.end()});
  std::vector<double> dev;
  dev.reserve(values.size());
  for (double v : values) dev.push_back(std::abs(v - m));
  return 1.4826 * median(std::move(dev));
}

StabilityVerdict stability_check(std::span<const PowerSample> window, double reference, const StabilityConfig& cfg) {
  if (window.size() < cfg.min_window)
    throw Error(ErrorCode::WindowTooShort,
                "stability window has " + std::to_string(window.size()) + " samples, need " +
                    std::to_string(cfg.min_window));
  if (!(reference > 0)) throw Error(ErrorCode::ReferenceUnset, "stability check needs a positive reference");

  // Shifted by the first sample so a constant window gives exactly zero.
  const double shift = window.front().power;
  double sum = 0.0;
  for (const PowerSample& s : window) sum += s.power - shift;
  const double mean_shifted = sum / window.size();
  const double mean = shift + mean_shifted;
  double ss = 0.0;
  for (const PowerSample& s : window) {
    const double d = s.power - shift - mean_shifted;
    ss += d * d;
  }
  const double sd = window.size() > 1 ? std::sqrt(ss / (window.size() - 1)) : 0.0;

  StabilityVerdict v;
  v.window_len = window.size();
  v.window_rsd = mean > 0 ? sd / mean : std::numeric_limits<double>::infinity();
  const double floor = reference * std::pow(10.0, -cfg.lock_threshold_db / 10.0);
  const bool breach = std::any_of(window.begin(), window.end(), [&](const PowerSample& s) { return s.power < floor; });
  v.verdict = (v.window_rsd < cfg.rsd_threshold && !breach) ? Verdict::Stable : Verdict::Unstable;
  return v;
}

std::string_view to_string(RealignAction a) {
  switch (a) {
    case RealignAction::None: return "None";
    case RealignAction::FineRealign: return "FineRealign";
    case RealignAction::FullRecouple: return "FullRecouple";
  }
  return "None";
}

RealignAction realign_decision(bool cusum_alarm, double current_power, double first_light_threshold) {
  if (!cusum_alarm) return RealignAction::None;
  return current_power > first_light_threshold ? RealignAction::FineRealign : RealignAction::FullRecouple;
}

MonitorConfig MonitorConfig::from_json(const nlohmann::json& j) {
  MonitorConfig c;
  try {
    c.ewma_lambda = j.value("ewma_lambda", c.ewma_lambda);
    c.cusum_k = j.value("cusum_k", c.cusum_k);
    c.cusum_h = j.value("cusum_h", c.cusum_h);
    c.sigma_samples = j.value("sigma_samples", c.sigma_samples);
    c.sigma_floor_rel = j.value("sigma_floor_rel", c.sigma_floor_rel);
    c.stability.min_window = j.value("stability_window", c.stability.min_window);
    c.stability.rsd_threshold = j.value("stability_rsd", c.stability.rsd_threshold);
    c.stability.lock_threshold_db = j.value("lock_threshold_db", c.stability.lock_threshold_db);
    c.log_decimation = j.value("log_decimation", c.log_decimation);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedConfig, std::string("monitor: ") + e.what());
  }
  if (!(c.ewma_lambda > 0 && c.ewma_lambda <= 1) || !(c.cusum_k >= 0) || !(c.cusum_h > 0) || c.sigma_samples < 2 ||
      !(c.stability.rsd_threshold > 0) || !(c.stability.lock_threshold_db > 0) || c.stability.min_window < 2)
    throw Error(ErrorCode::MalformedConfig, "monitor: parameter out of range");
  return c;
}

void Monitor::lock(double reference, double first_light_threshold) {
  if (!(reference > 0)) throw Error(ErrorCode::ReferenceUnset, "lock reference must be positive");
  first_light_threshold_ = first_light_threshold;
  cusum_ = CusumState{reference, 0.0, 0.0, 0.0, cfg_.cusum_k, cfg_.cusum_h};
  if (sigma_rel_) cusum_.sigma = *sigma_rel_ * reference;
  ewma_ = EwmaState{reference, 0.0, cfg_.ewma_lambda, 1};
  learning_.clear();
}

void Monitor::unlock() {
  cusum_.reference.reset();
  learning_.clear();
}

std::optional<Alarm> Monitor::push(const PowerSample& sample) {
  ++seen_;
  ewma_ = ewma_update(ewma_, sample.power);
  if (!cusum_.reference) return std::nullopt;
  const double ref = *cusum_.reference;

  if (!sigma_rel_) {
    learning_.push_back(sample.power);
    if (learning_.size() < cfg_.sigma_samples) return std::nullopt;
    sigma_rel_ = std::max(mad_sigma(learning_) / ref, cfg_.sigma_floor_rel);
    cusum_.sigma = *sigma_rel_ * ref;
    learning_.clear();
    return std::nullopt;
  }

  const CusumStep step = cusum_update(cusum_, sample.power);
  cusum_ = step.state;
  if (step.upward) ++upward_shifts_;
  if (!step.alarm) return std::nullopt;
  return Alarm{sample.timestamp, sample.power, ref, step.g_plus,
               realign_decision(true, sample.power, first_light_threshold_)};
}

}  // namespace atomics::monitor
