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

#include "atomics/service/command.hpp"

#include "atomics/core/error.hpp"

namespace atomics::service {

using nlohmann::json;

CommandEnvelope CommandEnvelope::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ValidationError, "command must be a JSON object");
  CommandEnvelope c;
  if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty())
    throw Error(ErrorCode::ValidationError, "id: non-empty string required");
  c.id = j["id"].get<std::string>();
  if (!j.contains("verb") || !j["verb"].is_string()) throw Error(ErrorCode::ValidationError, "verb: string required");
  const auto verb = align::parse_verb(j["verb"].get<std::string>());
  if (!verb) throw Error(ErrorCode::ValidationError, "verb: unknown '" + j["verb"].get<std::string>() + "'");
  c.verb = *verb;
  if (j.contains("args")) {
    if (!j["args"].is_object()) throw Error(ErrorCode::ValidationError, "args: object required");
    c.args = j["args"];
  }
  if (j.contains("issued_by")) {
    if (!j["issued_by"].is_string()) throw Error(ErrorCode::ValidationError, "issued_by: string required");
    c.issued_by = j["issued_by"].get<std::string>();
  }
  return c;
}

json CommandEnvelope::to_json() const {
  return {{"id", id}, {"verb", std::string(align::to_string(verb))}, {"args", args}, {"issued_by", issued_by}};
}

json SubmitResult::to_json() const {
  json j{{"accepted", accepted}, {"id", id}, {"state", std::string(align::to_string(state))}};
  if (!accepted) j["reason"] = reason;
  return j;
}

std::string_view to_string(CommandStatus s) {
  switch (s) {
    case CommandStatus::Queued: return "Queued";
    case CommandStatus::Running: return "Running";
    case CommandStatus::Done: return "Done";
    case CommandStatus::Failed: return "Failed";
    case CommandStatus::Cancelled: return "Cancelled";
  }
  return "Failed";
}

json CommandRecord::to_json() const {
  json j = command.to_json();
  j["status"] = std::string(service::to_string(status));
  if (!result.is_null()) j["result"] = result;
  if (!error.empty()) j["error"] = error;
  return j;
}

}  // namespace atomics::service
