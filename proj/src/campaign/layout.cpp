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

#include "atomics/campaign/layout.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "atomics/core/error.hpp"

namespace atomics::campaign {

namespace {

constexpr double kFacetTolerance = 1e-6;

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::ParseError, field + ": " + what);
}

const nlohmann::json& member(const nlohmann::json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) field_error(path + key, "missing");
  return j.at(key);
}

double number(const nlohmann::json& j, const std::string& field) {
  if (!j.is_number()) field_error(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) field_error(field, "not finite");
  return v;
}

Vec2 point(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2) field_error(field, "expected [x, y]");
  return {number(j[0], field + "[0]"), number(j[1], field + "[1]")};
}

std::string text(const nlohmann::json& j, const std::string& field) {
  if (!j.is_string()) field_error(field, "expected a string");
  return j.get<std::string>();
}

/// 1-based line of a byte offset, for parse errors.
std::size_t line_of(std::string_view s, std::size_t byte) {
  byte = std::min(byte, s.size());
  return 1 + static_cast<std::size_t>(std::count(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

bool inside(const ChipLayout& l, Vec2 p) {
  return p.x >= -kFacetTolerance && p.y >= -kFacetTolerance && p.x <= l.extent.x + kFacetTolerance &&
         p.y <= l.extent.y + kFacetTolerance;
}

}  // namespace

ChipLayout parse_layout(std::string_view source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(source.begin(), source.end());
  } catch (const nlohmann::json::parse_error& e) {
    // nlohmann reports the offset one past the offending byte.
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_of(source, at)) + ": malformed JSON");
  }
  if (!j.is_object()) field_error("layout", "expected an object");

  ChipLayout l;
  l.chiplet = text(member(j, "", "chiplet"), "chiplet");
  l.extent = point(member(j, "", "extent"), "extent");
  const auto& facets = member(j, "", "facets");
  if (!facets.is_object()) field_error("facets", "expected an object");
  l.left_facet = number(member(facets, "facets.", "left"), "facets.left");
  l.right_facet = number(member(facets, "facets.", "right"), "facets.right");
  const auto& devices = member(j, "", "devices");
  if (!devices.is_array()) field_error("devices", "expected an array");
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const std::string p = "devices[" + std::to_string(i) + "].";
    const auto& d = devices[i];
    if (!d.is_object()) field_error("devices[" + std::to_string(i) + "]", "expected an object");
    LayoutDevice dev;
    dev.id = text(member(d, p, "id"), p + "id");
    dev.input = point(member(d, p, "input"), p + "input");
    dev.output = point(member(d, p, "output"), p + "output");
    if (d.contains("notes")) dev.notes = text(d.at("notes"), p + "notes");
    l.devices.push_back(std::move(dev));
  }
  validate(l);
  return l;
}

ChipLayout load_layout(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_layout(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.filename().string() + ": " + e.what());
  }
}

void validate(const ChipLayout& l) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::ValidationError, what); };
  if (l.chiplet.empty()) fail("chiplet id is empty");
  if (!(l.extent.x > 0 && l.extent.y > 0)) fail("extent must be positive");
  if (!(l.left_facet >= 0 && l.left_facet < l.right_facet && l.right_facet <= l.extent.x))
    fail("facets must satisfy 0 <= left < right <= width");
  std::set<std::string> ids;
  for (const LayoutDevice& d : l.devices) {
    if (d.id.empty()) fail("device id is empty");
    if (!ids.insert(d.id).second) fail("duplicate device id " + d.id);
    if (!inside(l, d.input) || !inside(l, d.output)) fail(d.id + ": coupler outside the chiplet extent");
    if (std::abs(d.input.x - l.left_facet) > kFacetTolerance) fail(d.id + ": input coupler is not on the left facet");
    if (std::abs(d.output.x - l.right_facet) > kFacetTolerance)
      fail(d.id + ": output coupler is not on the right facet");
  }
}

std::vector<LayoutDevice> column_major(const ChipLayout& layout) {
  std::vector<LayoutDevice> out = layout.devices;
  std::stable_sort(out.begin(), out.end(), [](const LayoutDevice& a, const LayoutDevice& b) {
    if (a.input.x != b.input.x) return a.input.x < b.input.x;
    return a.input.y < b.input.y;
  });
  return out;
}

nlohmann::json ChipLayout::to_json() const {
  nlohmann::json devs = nlohmann::json::array();
  for (const LayoutDevice& d : devices)
    devs.push_back({{"id", d.id}, {"input", {d.input.x, d.input.y}}, {"output", {d.output.x, d.output.y}},
                    {"notes", d.notes}});
  return {{"chiplet", chiplet},
          {"extent", {extent.x, extent.y}},
          {"facets", {{"left", left_facet}, {"right", right_facet}}},
          {"devices", std::move(devs)}};
}

}  // namespace atomics::campaign
