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

#include "atomics/align/state.hpp"

#include <cmath>

#include "atomics/core/error.hpp"
#include "atomics/hal/axis.hpp"
#include "atomics/hal/topology.hpp"

namespace atomics::align {

std::string_view to_string(CouplingState s) {
  switch (s) {
    case CouplingState::Idle: return "Idle";
    case CouplingState::Calibrating: return "Calibrating";
    case CouplingState::CoarseAlign: return "CoarseAlign";
    case CouplingState::SafeApproach: return "SafeApproach";
    case CouplingState::SearchFirstLight: return "SearchFirstLight";
    case CouplingState::FineAlign: return "FineAlign";
    case CouplingState::PolarizationOpt: return "PolarizationOpt";
    case CouplingState::Locked: return "Locked";
    case CouplingState::Realigning: return "Realigning";
    case CouplingState::Fault: return "Fault";
  }
  return "Idle";
}

std::string_view to_string(Event e) {
  switch (e) {
    case Event::StartCouple: return "StartCouple";
    case Event::StartCalibration: return "StartCalibration";
    case Event::PhaseDone: return "PhaseDone";
    case Event::FirstLightFound: return "FirstLightFound";
    case Event::FitConverged: return "FitConverged";
    case Event::PolDone: return "PolDone";
    case Event::StabilityOk: return "StabilityOk";
    case Event::DriftAlarm: return "DriftAlarm";
    case Event::PowerLost: return "PowerLost";
    case Event::FaultRaised: return "FaultRaised";
    case Event::Abort: return "Abort";
    case Event::Reset: return "Reset";
  }
  return "Reset";
}

std::optional<CouplingState> parse_state(std::string_view s) {
  for (CouplingState c : kAllStates)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

std::optional<CouplingState> next_state(CouplingState from, Event e) {
  using S = CouplingState;
  switch (e) {
    case Event::FaultRaised: return S::Fault;
    case Event::Abort:
    case Event::Reset: return S::Idle;
    default: break;
  }
  switch (from) {
    case S::Idle:
      if (e == Event::StartCouple) return S::CoarseAlign;
      if (e == Event::StartCalibration) return S::Calibrating;
      break;
    case S::Calibrating:
      if (e == Event::PhaseDone) return S::Idle;
      break;
    case S::CoarseAlign:
      if (e == Event::PhaseDone) return S::SafeApproach;
      break;
    case S::SafeApproach:
      if (e == Event::PhaseDone) return S::SearchFirstLight;
      break;
    case S::SearchFirstLight:
      if (e == Event::FirstLightFound) return S::FineAlign;
      break;
    case S::FineAlign:
      if (e == Event::FitConverged) return S::PolarizationOpt;
      if (e == Event::PowerLost) return S::SearchFirstLight;
      break;
    case S::PolarizationOpt:
      if (e == Event::PolDone) return S::PolarizationOpt;
      if (e == Event::StabilityOk) return S::Locked;
      break;
    case S::Locked:
      if (e == Event::DriftAlarm) return S::Realigning;
      if (e == Event::PowerLost) return S::SearchFirstLight;
      break;
    case S::Realigning:
      if (e == Event::FitConverged) return S::Realigning;
      if (e == Event::StabilityOk) return S::Locked;
      if (e == Event::PowerLost) return S::SearchFirstLight;
      break;
    case S::Fault:
      break;
  }
  return std::nullopt;
}

Transition StateMachine::dispatch(Event e, double now, const std::string& device) {
  const auto to = next_state(state_, e);
  if (!to)
    throw Error(ErrorCode::IllegalTransition,
                std::string(to_string(e)) + " is not legal in " + std::string(to_string(state_)));
  Transition t{state_, *to, e, std::nullopt, false};
  if (*to == CouplingState::Locked && state_ != CouplingState::Locked) t.route = SwitchRoute::Daq;
  if (state_ == CouplingState::Locked && *to != CouplingState::Locked) t.route = SwitchRoute::PowerMeter;
  if (e == Event::Abort || e == Event::Reset || e == Event::FaultRaised) t.route = SwitchRoute::PowerMeter;
  t.retract_z = e == Event::Abort || e == Event::Reset;

  if (e == Event::StartCouple) {
    target_ = device;
    retries_ = 0;
  }
  if (*to == CouplingState::Idle) target_.clear();
  if (*to != state_) entered_at_ = now;
  state_ = *to;
  return t;
}

std::string_view to_string(Verb v) {
  switch (v) {
    case Verb::StartCouple: return "StartCouple";
    case Verb::Abort: return "Abort";
    case Verb::Jog: return "Jog";
    case Verb::SetSwitch: return "SetSwitch";
    case Verb::SetPolarization: return "SetPolarization";
    case Verb::SetTilt: return "SetTilt";
    case Verb::StartCampaign: return "StartCampaign";
    case Verb::Calibrate: return "Calibrate";
  }
  return "Abort";
}

std::optional<Verb> parse_verb(std::string_view s) {
  for (Verb v : kAllVerbs)
    if (to_string(v) == s) return v;
  return std::nullopt;
}

std::optional<Event> verb_event(Verb v) {
  switch (v) {
    case Verb::StartCouple: return Event::StartCouple;
    case Verb::Calibrate: return Event::StartCalibration;
    case Verb::Abort: return Event::Abort;
    default: return std::nullopt;
  }
}

namespace {

Legality reject(CouplingState s, std::string_view why) {
  return {false, std::string(why) + " (state " + std::string(to_string(s)) + ")"};
}

double number(const nlohmann::json& args, const char* key) {
  if (!args.is_object() || !args.contains(key) || !args[key].is_number()) return std::nan("");
  return args[key].get<double>();
}

std::string text(const nlohmann::json& args, const char* key) {
  if (!args.is_object() || !args.contains(key) || !args[key].is_string()) return {};
  return args[key].get<std::string>();
}

}  // namespace

Legality command_legality(CouplingState s, Verb v, const nlohmann::json& args) {
  using S = CouplingState;
  if (auto e = verb_event(v)) {
    if (next_state(s, *e)) return {true, {}};
    return reject(s, "illegal transition");
  }
  switch (v) {
    case Verb::Jog: {
      const double delta = number(args, "delta");
      if (!std::isfinite(delta) || std::abs(delta) > kJogClampUm) return reject(s, "jog clamp");
      if (!hal::AxisId::parse(text(args, "axis"))) return reject(s, "unknown axis");
      if (s != S::Idle) return reject(s, "motion only in Idle");
      return {true, {}};
    }
    case Verb::SetSwitch: {
      const auto r = parse_route(text(args, "route"));
      if (!r) return reject(s, "unknown route");
      if (*r == SwitchRoute::Daq) return s == S::Locked ? Legality{true, {}} : reject(s, "route gate");
      if (s == S::Idle || s == S::Fault) return {true, {}};
      return reject(s, "route gate");
    }
    case Verb::SetPolarization: {
      const nlohmann::json* p = args.is_object() && args.contains("paddles") ? &args["paddles"] : nullptr;
      if (!p || !p->is_array() || p->size() != 3) return reject(s, "paddles must be three angles");
      for (const auto& a : *p)
        if (!a.is_number() || !(a.get<double>() >= 0.0 && a.get<double>() < 360.0)) return reject(s, "paddle range");
      if (s == S::Idle) return {true, {}};
      return reject(s, "polarization only in Idle");
    }
    case Verb::SetTilt: {
      const double deg = number(args, "degrees");
      if (!(deg >= 0.0 && deg <= hal::kGoniometerTravelDeg)) return reject(s, "tilt range");
      if (s == S::Idle || s == S::Locked) return {true, {}};
      return reject(s, "tilt only in Idle or Locked");
    }
    case Verb::StartCampaign:
      if (s == S::Idle) return {true, {}};
      return reject(s, "campaign only from Idle");
    default:
      break;
  }
  return reject(s, "unknown verb");
}

}  // namespace atomics::align
