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

#include <cmath>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace atomics {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
  double norm() const { return std::hypot(x, y); }
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend bool operator==(Vec3, Vec3) = default;
  Vec2 xy() const { return {x, y}; }
};

enum class SwitchRoute { PowerMeter, Daq };

constexpr std::string_view to_string(SwitchRoute r) {
  return r == SwitchRoute::PowerMeter ? "PowerMeter" : "Daq";
}

constexpr std::optional<SwitchRoute> parse_route(std::string_view s) {
  if (s == "PowerMeter") return SwitchRoute::PowerMeter;
  if (s == "Daq") return SwitchRoute::Daq;
  return std::nullopt;
}

/// One reading of the output light. `route` is where the switch pointed when
/// the reading was taken.
struct PowerSample {
  double timestamp = 0.0;  // seconds, monotonic per stream
  double power = 0.0;      // watts
  SwitchRoute route = SwitchRoute::PowerMeter;
};

/// 8-bit grayscale, row-major. `camera_encoder` is the microscope encoder
/// readout (µm) at capture.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
  Vec3 camera_encoder;
  std::uint64_t exposure_id = 0;

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool valid() const {
    return width > 0 && height > 0 && pixels.size() == static_cast<std::size_t>(width) * height;
  }
};

inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts / 1e-3); }

/// 10·log10(a/b); negative when a < b.
inline double ratio_db(double a, double b) { return 10.0 * std::log10(a / b); }

}  // namespace atomics
