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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "atomics/core/types.hpp"

namespace atomics::vision {

/// pixel = linear · stage + offset, with stage in µm.
class AffineMap2 {
 public:
  AffineMap2() = default;
  /// Throws IllConditioned when `linear` is singular or its condition number
  /// reaches 1e6.
  AffineMap2(std::array<double, 4> linear, Vec2 offset);

  static AffineMap2 identity() { return AffineMap2({1, 0, 0, 1}, {0, 0}); }
  /// Uniform scale (px/µm), rotation (deg) and offset (px).
  static AffineMap2 similarity(double scale, double rotation_deg, Vec2 offset);

  Vec2 stage_to_pixel(Vec2 stage) const;
  Vec2 pixel_to_stage(Vec2 pixel) const;
  /// Linear part only, for displacements.
  Vec2 apply_linear(Vec2 d) const;
  Vec2 apply_inverse_linear(Vec2 d) const;

  const std::array<double, 4>& linear() const { return a_; }  // row-major 2×2
  Vec2 offset() const { return b_; }
  double condition_number() const { return cond_; }

 private:
  std::array<double, 4> a_{1, 0, 0, 1};
  std::array<double, 4> inv_{1, 0, 0, 1};
  Vec2 b_;
  double cond_ = 1.0;
};

inline constexpr double kMaxConditionNumber = 1e6;

struct Correspondence {
  Vec2 stage;  // µm
  Vec2 pixel;
};

struct Calibration {
  AffineMap2 map;
  double rms_residual = 0.0;  // px
};

/// Least-squares affine fit. Degenerate with fewer than three points or
/// collinear stage points; IllConditioned when the fit is.
Calibration calibrate(const std::vector<Correspondence>& correspondences);

Vec2 pixel_to_stage(const AffineMap2& map, Vec2 pixel);

/// Bench position of a pixel: the encoder position of the camera plus the
/// inverse-linear image of the pixel's offset from the frame centre.
/// Throws Uncalibrated when `map` is empty.
Vec2 global_position(Vec2 camera_encoder, const std::optional<AffineMap2>& map, Vec2 pixel, Vec2 frame_center);

inline Vec2 frame_center(const Frame& f) { return {(f.width - 1) / 2.0, (f.height - 1) / 2.0}; }

/// A stored calibration for one microscope objective.
struct CalibrationRecord {
  std::string objective = "default";
  int version = 1;
  std::string timestamp;  // ISO 8601 UTC
  double sim_time = 0.0;  // bench clock at calibration
  Calibration calibration;
};

void save_calibration(const std::filesystem::path& path, const CalibrationRecord& record);
/// Throws MalformedConfig on unreadable or invalid files.
CalibrationRecord load_calibration(const std::filesystem::path& path);

}  // namespace atomics::vision
