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

#include <vector>

#include "atomics/sim/render.hpp"
#include "atomics/vision/detection.hpp"

namespace atomics::sim {

inline vision::DetectionClass detection_class(Glyph g) {
  switch (g) {
    case Glyph::FiberTipLeft: return vision::DetectionClass::FiberTipLeft;
    case Glyph::FiberTipRight: return vision::DetectionClass::FiberTipRight;
    case Glyph::CouplerLeft:
    case Glyph::CouplerRight: return vision::DetectionClass::EdgeCoupler;
    default: return vision::DetectionClass::ChipletEdge;
  }
}

/// Detector templates cut from the renderer's own glyphs.
inline std::vector<vision::Template> glyph_templates(double pixels_per_um) {
  std::vector<vision::Template> out;
  for (Glyph g : kAllGlyphs) {
    GlyphImage img = render_glyph(g, pixels_per_um);
    out.push_back({detection_class(g), to_string(g), img.width, img.height, std::move(img.pixels), img.hotspot});
  }
  return out;
}

}  // namespace atomics::sim
