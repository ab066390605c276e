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

#include <string>

#include <nlohmann/json.hpp>

#include "atomics/align/state.hpp"

namespace atomics::service {

/// One operator request, as posted to `POST /command`:
///
///     {"id": "c-17", "verb": "Jog", "args": {"axis": "LeftFiber.X", "delta": 2.5}, "issued_by": "console-1"}
///
/// Verb arguments:
///   StartCouple, Calibrate  {"device": "D3"}
///   Jog                     {"axis": "<Tower>.<X|Y|Z|Theta>", "delta": µm, |delta| ≤ 5}
///   SetSwitch               {"route": "PowerMeter" | "Daq"}
///   SetPolarization         {"paddles": [deg, deg, deg]}, each in [0, 360)
///   SetTilt                 {"degrees": 0-10}
///   StartCampaign           {"resume": "<run id>", "fail_fast": bool, "devices": ["D0", ...]}, all optional
///   Abort                   {}
struct CommandEnvelope {
  std::string id;
  align::Verb verb = align::Verb::Abort;
  nlohmann::json args = nlohmann::json::object();
  std::string issued_by;

  /// Throws ValidationError naming the offending field.
  static CommandEnvelope from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Accepted(id) or Rejected(reason). A rejection names the state the
/// decision was taken in.
struct SubmitResult {
  bool accepted = false;
  std::string id;
  std::string reason;
  align::CouplingState state = align::CouplingState::Idle;

  nlohmann::json to_json() const;
};

enum class CommandStatus { Queued, Running, Done, Failed, Cancelled };

std::string_view to_string(CommandStatus s);

/// Progress of an accepted command. `result` carries verb output such as a
/// campaign's run id; `error` the failure message.
struct CommandRecord {
  CommandEnvelope command;
  CommandStatus status = CommandStatus::Queued;
  nlohmann::json result;
  std::string error;

  nlohmann::json to_json() const;
};

}  // namespace atomics::service
