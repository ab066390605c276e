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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "atomics/core/types.hpp"

namespace atomics::campaign {

/// One device on the chiplet; couplers in chip coordinates (µm).
struct LayoutDevice {
  std::string id;
  Vec2 input;
  Vec2 output;
  std::string notes;
};

/// Machine-readable chiplet geometry.
///
///     {"chiplet": "C1", "extent": [1000, 2000],
///      "facets": {"left": 0, "right": 1000},
///      "devices": [{"id": "D0", "input": [0, 125], "output": [1000, 125],
///                   "notes": ""}, ...]}
struct ChipLayout {
  std::string chiplet;
  Vec2 extent;  // width, height
  double left_facet = 0.0;
  double right_facet = 0.0;
  std::vector<LayoutDevice> devices;

  nlohmann::json to_json() const;
};

/// Throws ParseError (with line or field) for malformed text or wrong types,
/// ValidationError for duplicate ids, couplers off their facet or devices
/// outside the extent.
ChipLayout parse_layout(std::string_view text);
ChipLayout load_layout(const std::filesystem::path& path);
void validate(const ChipLayout& layout);

/// Devices sorted column by column: by input x, then y.
std::vector<LayoutDevice> column_major(const ChipLayout& layout);

}  // namespace atomics::campaign
