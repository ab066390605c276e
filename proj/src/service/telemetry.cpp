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

#include "atomics/service/telemetry.hpp"

#include "atomics/core/error.hpp"

namespace atomics::service {

using nlohmann::json;

std::string_view to_string(TelemetryKind k) {
  switch (k) {
    case TelemetryKind::Power: return "Power";
    case TelemetryKind::State: return "State";
    case TelemetryKind::Detection: return "Detection";
    case TelemetryKind::AxisState: return "AxisState";
    case TelemetryKind::Alarm: return "Alarm";
  }
  return "Power";
}

std::optional<TelemetryKind> parse_kind(std::string_view s) {
  for (TelemetryKind k : kAllKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

std::set<TelemetryKind> parse_kinds(std::string_view list) {
  std::set<TelemetryKind> out;
  while (!list.empty()) {
    const auto comma = list.find(',');
    const std::string_view item = list.substr(0, comma);
    if (!item.empty()) {
      const auto k = parse_kind(item);
      if (!k) throw Error(ErrorCode::ValidationError, "unknown telemetry kind '" + std::string(item) + "'");
      out.insert(*k);
    }
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 1);
  }
  if (out.empty()) out.insert(kAllKinds.begin(), kAllKinds.end());
  return out;
}

json to_json(const TelemetryBus::Delivered& d) {
  return {{"kind", std::string(to_string(d.event.kind))}, {"sequence", d.sequence}, {"payload", d.event.payload}};
}

json to_json(const vision::Detection& d) {
  return {{"class", std::string(vision::to_string(d.cls))},
          {"bbox", {d.bbox.x_min, d.bbox.y_min, d.bbox.x_max, d.bbox.y_max}},
          {"centroid", {d.centroid.x, d.centroid.y}},
          {"score", d.score},
          {"variant", d.variant}};
}

json to_json(const std::vector<vision::Detection>& ds) {
  json a = json::array();
  for (const auto& d : ds) a.push_back(to_json(d));
  return a;
}

}  // namespace atomics::service
