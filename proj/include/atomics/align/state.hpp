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
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "atomics/core/types.hpp"

namespace atomics::align {

enum class CouplingState {
  Idle,
  Calibrating,
  CoarseAlign,
  SafeApproach,
  SearchFirstLight,
  FineAlign,
  PolarizationOpt,
  Locked,
  Realigning,
  Fault,
};

inline constexpr std::array<CouplingState, 10> kAllStates = {
    CouplingState::Idle,      CouplingState::Calibrating,     CouplingState::CoarseAlign,
    CouplingState::SafeApproach, CouplingState::SearchFirstLight, CouplingState::FineAlign,
    CouplingState::PolarizationOpt, CouplingState::Locked,     CouplingState::Realigning,
    CouplingState::Fault};

enum class Event {
  StartCouple,
  StartCalibration,
  PhaseDone,
  FirstLightFound,
  FitConverged,
  PolDone,
  StabilityOk,
  DriftAlarm,
  PowerLost,
  FaultRaised,
  Abort,
  Reset,
};

inline constexpr std::array<Event, 12> kAllEvents = {
    Event::StartCouple, Event::StartCalibration, Event::PhaseDone,  Event::FirstLightFound,
    Event::FitConverged, Event::PolDone,         Event::StabilityOk, Event::DriftAlarm,
    Event::PowerLost,   Event::FaultRaised,      Event::Abort,       Event::Reset};

std::string_view to_string(CouplingState s);
std::string_view to_string(Event e);
std::optional<CouplingState> parse_state(std::string_view s);

/// The fixed transition graph. nullopt when the event is not legal in `from`.
std::optional<CouplingState> next_state(CouplingState from, Event e);

/// Side effects the command loop must carry out for a transition.
struct Transition {
  CouplingState from;
  CouplingState to;
  Event event;
  std::optional<SwitchRoute> route;  // switch command, if any
  bool retract_z = false;            // back both fibers off
};

/// Holds the current state and the coupling context. Routing follows the
/// state: Daq on entry to Locked, PowerMeter whenever Locked is left and on
/// every abort, reset or fault.
class StateMachine {
 public:
  CouplingState state() const { return state_; }
  const std::string& target_device() const { return target_; }
  double entered_at() const { return entered_at_; }
  int retries() const { return retries_; }
  void count_retry() { ++retries_; }

  /// Applies `e`. Throws IllegalTransition (state unchanged) when the edge
  /// does not exist.
  Transition dispatch(Event e, double now, const std::string& device = {});

 private:
  CouplingState state_ = CouplingState::Idle;
  std::string target_;
  double entered_at_ = 0.0;
  int retries_ = 0;
};

/// Operator verbs accepted by the service.
enum class Verb { StartCouple, Abort, Jog, SetSwitch, SetPolarization, SetTilt, StartCampaign, Calibrate };

inline constexpr std::array<Verb, 8> kAllVerbs = {Verb::StartCouple,     Verb::Abort,   Verb::Jog,
                                                  Verb::SetSwitch,       Verb::SetPolarization, Verb::SetTilt,
                                                  Verb::StartCampaign,   Verb::Calibrate};

std::string_view to_string(Verb v);
std::optional<Verb> parse_verb(std::string_view s);

inline constexpr double kJogClampUm = 5.0;

struct Legality {
  bool ok = false;
  std::string reason;  // empty when ok
};

/// Whether `verb` with `args` may run in `state`. Shared by the command loop
/// and the service so both reject exactly the same requests.
Legality command_legality(CouplingState state, Verb verb, const nlohmann::json& args = nlohmann::json::object());

/// The dispatch event a verb maps to, for verbs that drive the machine.
std::optional<Event> verb_event(Verb v);

}  // namespace atomics::align
