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
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "atomics/core/types.hpp"

namespace atomics::vision {

enum class DetectionClass { FiberTipLeft, FiberTipRight, EdgeCoupler, ChipletEdge };

inline constexpr DetectionClass kAllClasses[] = {DetectionClass::FiberTipLeft, DetectionClass::FiberTipRight,
                                                 DetectionClass::EdgeCoupler, DetectionClass::ChipletEdge};

std::string_view to_string(DetectionClass c);
std::optional<DetectionClass> parse_class(std::string_view s);

struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double area() const { return (x_max - x_min) * (y_max - y_min); }
  bool contains(Vec2 p) const { return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max; }
};

double iou(const BBox& a, const BBox& b);

struct Detection {
  DetectionClass cls = DetectionClass::FiberTipLeft;
  BBox bbox;
  double score = 0.0;  // [0, 1]
  Vec2 centroid;       // pixels
  std::string variant; // template that produced it
};

/// Grayscale glyph template. `hotspot` is the pixel reported as the
/// detection centroid when the template matches.
struct Template {
  DetectionClass cls = DetectionClass::FiberTipLeft;
  std::string name;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
  Vec2 hotspot;
};

/// Pixel rectangle; clipped to the frame.
struct Roi {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

struct DetectOptions {
  double threshold = 0.6;
  double nms_iou = 0.3;
  double cross_class_iou = 0.5;
  std::set<DetectionClass> classes;  // empty: all
  std::set<std::string> variants;    // empty: all
  std::optional<Roi> roi;            // search window; coordinates stay frame-relative
};

/// Normalized cross-correlation per template, local maxima above the
/// threshold, 3×3 centre-of-mass refinement, then NMS. Sorted by score
/// descending, ties by (y, x). Throws TemplateTooLarge.
std::vector<Detection> detect(const Frame& frame, const std::vector<Template>& templates,
                              const DetectOptions& options = {});

/// Greedy same-class suppression: keeps the best box and drops same-class
/// boxes overlapping it by more than `iou_threshold`.
std::vector<Detection> nms(std::vector<Detection> detections, double iou_threshold);

/// Orders by score descending, then (y, x) of the centroid.
void sort_detections(std::vector<Detection>& detections);

// PNG (8-bit grayscale) I/O.
std::vector<std::uint8_t> encode_png(int width, int height, const std::vector<std::uint8_t>& pixels);
std::vector<std::uint8_t> encode_png(const Frame& frame);
Frame decode_png(const std::vector<std::uint8_t>& bytes);

/// Reads `templates.json` and the PNGs it names from `dir`.
std::vector<Template> load_templates(const std::filesystem::path& dir);
void save_templates(const std::filesystem::path& dir, const std::vector<Template>& templates);

}  // namespace atomics::vision
