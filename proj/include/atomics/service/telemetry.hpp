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
#include <set>
#include <string_view>

#include <nlohmann/json.hpp>

#include "atomics/core/broadcast.hpp"
#include "atomics/vision/detection.hpp"

namespace atomics::service {

enum class TelemetryKind { Power, State, Detection, AxisState, Alarm };

inline constexpr std::array<TelemetryKind, 5> kAllKinds = {TelemetryKind::Power, TelemetryKind::State,
                                                           TelemetryKind::Detection, TelemetryKind::AxisState,
                                                           TelemetryKind::Alarm};

std::string_view to_string(TelemetryKind k);
std::optional<TelemetryKind> parse_kind(std::string_view s);

/// Comma-separated kind list; empty selects every kind. Throws
/// ValidationError on an unknown name.
std::set<TelemetryKind> parse_kinds(std::string_view list);

/// Payloads:
///   Power      {"timestamp", "watts", "route"}
///   State      {"from", "to", "event", "device", "route"}
///   Detection  {"exposure_id", "width", "height", "detections": [...]}
///   AxisState  {"axis", "commanded", "estimated", "uncertainty", "moving"}
///   Alarm      {"timestamp", "power", "reference", "g_plus", "action"}
struct TelemetryEvent {
  TelemetryKind kind = TelemetryKind::Power;
  nlohmann::json payload;
};

using TelemetryBus = Broadcast<TelemetryEvent>;

/// `{"kind", "sequence", "payload"}` as sent on the telemetry socket.
nlohmann::json to_json(const TelemetryBus::Delivered& d);

/// `{"class", "bbox": [x_min, y_min, x_max, y_max], "centroid": [x, y], "score", "variant"}`
nlohmann::json to_json(const vision::Detection& d);
nlohmann::json to_json(const std::vector<vision::Detection>& ds);

}  // namespace atomics::service
