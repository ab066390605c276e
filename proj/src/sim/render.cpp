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

#include "atomics/sim/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "atomics/core/error.hpp"

namespace atomics::sim {

namespace {

struct Box {
  Vec2 min;
  Vec2 max;
};

// Convex shapes in bench µm.
struct RectShape {
  Box box;
  bool contains(Vec2 p) const { return p.x >= box.min.x && p.x <= box.max.x && p.y >= box.min.y && p.y <= box.max.y; }
  Box bounds() const { return box; }
};

struct DiscShape {
  Vec2 center;
  double radius;
  bool contains(Vec2 p) const {
    const double dx = p.x - center.x, dy = p.y - center.y;
    return dx * dx + dy * dy <= radius * radius;
  }
  Box bounds() const { return {{center.x - radius, center.y - radius}, {center.x + radius, center.y + radius}}; }
};

// Quadrilateral, vertices in counter-clockwise or clockwise order.
struct QuadShape {
  std::array<Vec2, 4> v;
  bool contains(Vec2 p) const {
    int sign = 0;
    for (int i = 0; i < 4; ++i) {
      const Vec2 a = v[i], b = v[(i + 1) % 4];
      const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
      if (cross == 0.0) continue;
      const int s = cross > 0 ? 1 : -1;
      if (sign == 0) sign = s;
      else if (s != sign) return false;
    }
    return true;
  }
  Box bounds() const {
    Box b{v[0], v[0]};
    for (const Vec2& p : v) {
      b.min = {std::min(b.min.x, p.x), std::min(b.min.y, p.y)};
      b.max = {std::max(b.max.x, p.x), std::max(b.max.y, p.y)};
    }
    return b;
  }
};

class Canvas {
 public:
  Canvas(int width, int height, Vec2 camera, double ppu, double rotation_deg, Vec2 center)
      : width_(width), height_(height), camera_(camera), ppu_(ppu), center_(center),
        pixels_(static_cast<std::size_t>(width) * height, static_cast<float>(kBackgroundLevel)) {
    const double r = rotation_deg * std::numbers::pi / 180.0;
    cos_ = std::cos(r);
    sin_ = std::sin(r);
  }

  Vec2 to_pixel(Vec2 b) const {
    const double dx = b.x - camera_.x, dy = b.y - camera_.y;
    return {center_.x + ppu_ * (cos_ * dx - sin_ * dy), center_.y + ppu_ * (sin_ * dx + cos_ * dy)};
  }

  Vec2 to_bench(Vec2 p) const {
    const double u = (p.x - center_.x) / ppu_, v = (p.y - center_.y) / ppu_;
    return {camera_.x + cos_ * u + sin_ * v, camera_.y - sin_ * u + cos_ * v};
  }

  template <typename Shape>
  void fill(const Shape& shape, double level) {
    const Box b = shape.bounds();
    double px0 = 1e300, py0 = 1e300, px1 = -1e300, py1 = -1e300;
    for (Vec2 c : {b.min, b.max, Vec2{b.min.x, b.max.y}, Vec2{b.max.x, b.min.y}}) {
      const Vec2 p = to_pixel(c);
      px0 = std::min(px0, p.x);
      py0 = std::min(py0, p.y);
      px1 = std::max(px1, p.x);
      py1 = std::max(py1, p.y);
    }
    const int i0 = std::max(0, static_cast<int>(std::floor(px0 - 0.5)));
    const int j0 = std::max(0, static_cast<int>(std::floor(py0 - 0.5)));
    const int i1 = std::min(width_ - 1, static_cast<int>(std::ceil(px1 + 0.5)));
    const int j1 = std::min(height_ - 1, static_cast<int>(std::ceil(py1 + 0.5)));
    const float value = static_cast<float>(level);

    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        int corners = 0;
        for (double oy : {-0.5, 0.5})
          for (double ox : {-0.5, 0.5}) corners += shape.contains(to_bench({i + ox, j + oy}));
        double coverage;
        if (corners == 4) {
          coverage = 1.0;
        } else {
          constexpr int kSub = 4;
          int hits = 0;
          for (int sy = 0; sy < kSub; ++sy)
            for (int sx = 0; sx < kSub; ++sx)
              hits += shape.contains(to_bench({i - 0.5 + (sx + 0.5) / kSub, j - 0.5 + (sy + 0.5) / kSub}));
          coverage = static_cast<double>(hits) / (kSub * kSub);
        }
        if (coverage <= 0.0) continue;
        float& px = pixels_[static_cast<std::size_t>(j) * width_ + i];
        px = static_cast<float>(px * (1.0 - coverage) + value * coverage);
      }
    }
  }

  std::vector<std::uint8_t> quantize(Rng* noise, double sigma) const {
    std::vector<std::uint8_t> out(pixels_.size());
    for (std::size_t k = 0; k < pixels_.size(); ++k) {
      double v = pixels_[k];
      if (noise && sigma > 0) v += sigma * noise->normal();
      out[k] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
    return out;
  }

 private:
  int width_;
  int height_;
  Vec2 camera_;
  double ppu_;
  Vec2 center_;
  double cos_ = 1.0;
  double sin_ = 0.0;
  std::vector<float> pixels_;
};

// Glyph outlines relative to their anchor, for the left-hand variant.
// `sx` = −1 mirrors them for the right facet.

void draw_fiber(Canvas& c, Vec2 apex, double sx) {
  auto rect = [&](double x0, double x1, double h) {
    const double a = apex.x + sx * x0, b = apex.x + sx * x1;
    return RectShape{{{std::min(a, b), apex.y - h}, {std::max(a, b), apex.y + h}}};
  };
  const Vec2 lens{apex.x - sx * 2.5, apex.y};
  c.fill(rect(-41.5, -2.5, 4.5), kRingLevel);
  c.fill(DiscShape{lens, 4.0}, kRingLevel);
  c.fill(rect(-40.0, -2.5, 3.0), kFiberLevel);
  c.fill(DiscShape{lens, 2.5}, kFiberLevel);
}

void draw_coupler(Canvas& c, Vec2 anchor, double sx) {
  auto quad = [&](double x0, double h0, double x1, double h1) {
    return QuadShape{{Vec2{anchor.x + sx * x0, anchor.y - h0}, Vec2{anchor.x + sx * x1, anchor.y - h1},
                      Vec2{anchor.x + sx * x1, anchor.y + h1}, Vec2{anchor.x + sx * x0, anchor.y + h0}}};
  };
  c.fill(quad(-1.5, 2.0, 31.5, 4.5), kRingLevel);
  c.fill(quad(0.0, 0.5, 30.0, 3.0), kCouplerLevel);
}

void draw_scene(Canvas& c, const Scene& s) {
  c.fill(RectShape{{s.chip_min, s.chip_min + s.chip_size}}, kChipLevel);
  for (const SceneCoupler& k : s.couplers) draw_coupler(c, k.position, k.facet == Facet::Left ? 1.0 : -1.0);
  if (s.left_tip) draw_fiber(c, s.left_tip->xy(), 1.0);
  if (s.right_tip) draw_fiber(c, s.right_tip->xy(), -1.0);
  if (s.scale_bar)
    c.fill(RectShape{{*s.scale_bar - Vec2{0.0, 2.0}, *s.scale_bar + Vec2{kScaleBarLength, 2.0}}}, kScaleBarLevel);
}

Vec2 frame_center(const Scene& s) { return {(s.width - 1) / 2.0, (s.height - 1) / 2.0}; }

}  // namespace

bool Scene::camera_in_bounds(Vec2 camera) const {
  return camera.x >= chip_min.x - margin && camera.x <= chip_min.x + chip_size.x + margin &&
         camera.y >= chip_min.y - margin && camera.y <= chip_min.y + chip_size.y + margin;
}

Vec2 bench_to_pixel(const Scene& s, Vec2 camera, Vec2 bench) {
  return Canvas(1, 1, camera, s.pixels_per_um, s.rotation_deg, frame_center(s)).to_pixel(bench);
}

Vec2 pixel_to_bench(const Scene& s, Vec2 camera, Vec2 pixel) {
  return Canvas(1, 1, camera, s.pixels_per_um, s.rotation_deg, frame_center(s)).to_bench(pixel);
}

Frame render_frame(const Scene& scene, Vec3 camera_encoder, Rng* noise) {
  if (!scene.camera_in_bounds(camera_encoder.xy()))
    throw Error(ErrorCode::CameraOutOfScene, "camera at (" + std::to_string(camera_encoder.x) + ", " +
                                                 std::to_string(camera_encoder.y) + ") is outside the scene");
  Canvas canvas(scene.width, scene.height, camera_encoder.xy(), scene.pixels_per_um, scene.rotation_deg,
                frame_center(scene));
  draw_scene(canvas, scene);
  Frame f;
  f.width = scene.width;
  f.height = scene.height;
  f.pixels = canvas.quantize(noise, scene.noise_sigma);
  f.camera_encoder = camera_encoder;
  return f;
}

std::string to_string(Glyph g) {
  switch (g) {
    case Glyph::FiberTipLeft: return "fiber_tip_left";
    case Glyph::FiberTipRight: return "fiber_tip_right";
    case Glyph::CouplerLeft: return "coupler_left";
    case Glyph::CouplerRight: return "coupler_right";
    case Glyph::ChipCornerTopLeft: return "chip_corner_tl";
    case Glyph::ChipCornerTopRight: return "chip_corner_tr";
    case Glyph::ChipCornerBottomLeft: return "chip_corner_bl";
    case Glyph::ChipCornerBottomRight: return "chip_corner_br";
  }
  return "unknown";
}

GlyphImage render_glyph(Glyph glyph, double ppu) {
  // Extent of the crop around the anchor (µm) and the chip region behind it.
  Box extent;
  std::optional<Box> chip;
  constexpr double kFar = 1e4;
  switch (glyph) {
    case Glyph::FiberTipLeft: extent = {{-41.5, -4.5}, {1.5, 4.5}}; break;
    case Glyph::FiberTipRight: extent = {{-1.5, -4.5}, {41.5, 4.5}}; break;
    case Glyph::CouplerLeft:
      extent = {{-4.0, -6.0}, {33.0, 6.0}};
      chip = Box{{0.0, -kFar}, {kFar, kFar}};
      break;
    case Glyph::CouplerRight:
      extent = {{-33.0, -6.0}, {4.0, 6.0}};
      chip = Box{{-kFar, -kFar}, {0.0, kFar}};
      break;
    case Glyph::ChipCornerTopLeft:
      extent = {{-10.0, -10.0}, {10.0, 10.0}};
      chip = Box{{0.0, 0.0}, {kFar, kFar}};
      break;
    case Glyph::ChipCornerTopRight:
      extent = {{-10.0, -10.0}, {10.0, 10.0}};
      chip = Box{{-kFar, 0.0}, {0.0, kFar}};
      break;
    case Glyph::ChipCornerBottomLeft:
      extent = {{-10.0, -10.0}, {10.0, 10.0}};
      chip = Box{{0.0, -kFar}, {kFar, 0.0}};
      break;
    case Glyph::ChipCornerBottomRight:
      extent = {{-10.0, -10.0}, {10.0, 10.0}};
      chip = Box{{-kFar, -kFar}, {0.0, 0.0}};
      break;
  }
  constexpr int kPad = 2;
  const int x0 = static_cast<int>(std::floor(extent.min.x * ppu)) - kPad;
  const int x1 = static_cast<int>(std::ceil(extent.max.x * ppu)) + kPad;
  const int y0 = static_cast<int>(std::floor(extent.min.y * ppu)) - kPad;
  const int y1 = static_cast<int>(std::ceil(extent.max.y * ppu)) + kPad;

  GlyphImage out;
  out.glyph = glyph;
  out.width = x1 - x0 + 1;
  out.height = y1 - y0 + 1;
  out.hotspot = {static_cast<double>(-x0), static_cast<double>(-y0)};

  Canvas canvas(out.width, out.height, {0.0, 0.0}, ppu, 0.0, out.hotspot);
  if (chip) canvas.fill(RectShape{*chip}, kChipLevel);
  switch (glyph) {
    case Glyph::FiberTipLeft: draw_fiber(canvas, {0.0, 0.0}, 1.0); break;
    case Glyph::FiberTipRight: draw_fiber(canvas, {0.0, 0.0}, -1.0); break;
    case Glyph::CouplerLeft: draw_coupler(canvas, {0.0, 0.0}, 1.0); break;
    case Glyph::CouplerRight: draw_coupler(canvas, {0.0, 0.0}, -1.0); break;
    default: break;
  }
  out.pixels = canvas.quantize(nullptr, 0.0);
  return out;
}

}  // namespace atomics::sim
