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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "atomics/core/rng.hpp"
#include "atomics/core/types.hpp"

namespace atomics::sim {

enum class Facet { Left, Right };

/// A coupler glyph anchored at the facet, tapering into the chip.
struct SceneCoupler {
  std::string device_id;
  Vec2 position;  // bench µm
  Facet facet = Facet::Left;
};

/// What the microscope sees, in bench micrometers. The image plane is the
/// bench XY plane; fiber Z is axial and does not show.
struct Scene {
  Vec2 chip_min{0.0, 0.0};
  Vec2 chip_size{1000.0, 2000.0};
  std::vector<SceneCoupler> couplers;
  std::optional<Vec3> left_tip;   // apex, bench µm
  std::optional<Vec3> right_tip;
  std::optional<Vec2> scale_bar;  // left end of the 200 µm ruler

  double pixels_per_um = 2.0;
  double rotation_deg = 0.0;
  int width = 1024;
  int height = 768;
  double noise_sigma = 2.0;  // gray levels
  double margin = 600.0;     // camera travel allowed beyond the chip

  bool camera_in_bounds(Vec2 camera) const;
};

inline constexpr double kScaleBarLength = 200.0;

// Gray levels of the flat-shaded glyphs.
inline constexpr double kBackgroundLevel = 20.0;
inline constexpr double kChipLevel = 120.0;
inline constexpr double kRingLevel = 0.0;
inline constexpr double kCouplerLevel = 250.0;
inline constexpr double kFiberLevel = 220.0;
inline constexpr double kScaleBarLevel = 255.0;

/// Bench µm → pixel for a camera centered at `camera`. Pixel centers sit on
/// integer coordinates; the camera axis hits ((W−1)/2, (H−1)/2).
Vec2 bench_to_pixel(const Scene& scene, Vec2 camera, Vec2 bench);
Vec2 pixel_to_bench(const Scene& scene, Vec2 camera, Vec2 pixel);

/// Rasterizes the scene with coverage antialiasing plus additive Gaussian
/// pixel noise drawn from `noise` (none when null). Throws CameraOutOfScene.
Frame render_frame(const Scene& scene, Vec3 camera_encoder, Rng* noise = nullptr);

enum class Glyph {
  FiberTipLeft,
  FiberTipRight,
  CouplerLeft,
  CouplerRight,
  ChipCornerTopLeft,
  ChipCornerTopRight,
  ChipCornerBottomLeft,
  ChipCornerBottomRight,
};

inline constexpr Glyph kAllGlyphs[] = {Glyph::FiberTipLeft,         Glyph::FiberTipRight,
                                       Glyph::CouplerLeft,          Glyph::CouplerRight,
                                       Glyph::ChipCornerTopLeft,    Glyph::ChipCornerTopRight,
                                       Glyph::ChipCornerBottomLeft, Glyph::ChipCornerBottomRight};

std::string to_string(Glyph g);

/// Noise-free crop of one glyph in its usual surroundings. `hotspot` is the
/// pixel (integer) where the glyph's anchor lands: fiber apex, coupler facet
/// point, or chip corner.
struct GlyphImage {
  Glyph glyph;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
  Vec2 hotspot;
};

GlyphImage render_glyph(Glyph glyph, double pixels_per_um);

}  // namespace atomics::sim
