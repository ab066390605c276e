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

#include "atomics/vision/detection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "atomics/core/error.hpp"

namespace atomics::vision {

std::string_view to_string(DetectionClass c) {
  switch (c) {
    case DetectionClass::FiberTipLeft: return "FiberTipLeft";
    case DetectionClass::FiberTipRight: return "FiberTipRight";
    case DetectionClass::EdgeCoupler: return "EdgeCoupler";
    case DetectionClass::ChipletEdge: return "ChipletEdge";
  }
  return "?";
}

std::optional<DetectionClass> parse_class(std::string_view s) {
  for (DetectionClass c : kAllClasses)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

double iou(const BBox& a, const BBox& b) {
  const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (w <= 0 || h <= 0) return 0.0;
  const double inter = w * h;
  return inter / (a.area() + b.area() - inter);
}

void sort_detections(std::vector<Detection>& d) {
  std::stable_sort(d.begin(), d.end(), [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.centroid.y != b.centroid.y) return a.centroid.y < b.centroid.y;
    return a.centroid.x < b.centroid.x;
  });
}

std::vector<Detection> nms(std::vector<Detection> detections, double iou_threshold) {
  sort_detections(detections);
  std::vector<Detection> kept;
  for (const Detection& d : detections) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return k.cls == d.cls && iou(k.bbox, d.bbox) > iou_threshold;
    });
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

namespace {

cv::Mat as_mat(int width, int height, const std::vector<std::uint8_t>& pixels) {
  // matchTemplate does not write its inputs.
  return cv::Mat(height, width, CV_8UC1, const_cast<std::uint8_t*>(pixels.data()));
}

// Local maxima of the correlation surface at or above the threshold. On
// plateaus only the first pixel in raster order survives.
void collect_peaks(const cv::Mat& r, const Template& t, double threshold, std::vector<Detection>& out) {
  const int rows = r.rows, cols = r.cols;
  auto at = [&](int y, int x) {
    const float v = r.at<float>(y, x);
    return std::isfinite(v) ? static_cast<double>(v) : 0.0;
  };
  for (int y = 0; y < rows; ++y) {
    const float* row = r.ptr<float>(y);
    for (int x = 0; x < cols; ++x) {
      const double v = std::isfinite(row[x]) ? row[x] : 0.0;
      if (v < threshold) continue;
      bool peak = true;
      for (int dy = -1; dy <= 1 && peak; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= rows || xx < 0 || xx >= cols) continue;
          const double n = at(yy, xx);
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (n > v || (earlier && n == v)) {
            peak = false;
            break;
          }
        }
      if (!peak) continue;

      // Centre of mass of (R − min) over the 3×3 neighbourhood.
      double lo = v;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = std::clamp(y + dy, 0, rows - 1), xx = std::clamp(x + dx, 0, cols - 1);
          lo = std::min(lo, at(yy, xx));
        }
      double sw = 0, sx = 0, sy = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= rows || xx < 0 || xx >= cols) continue;
          const double w = at(yy, xx) - lo;
          sw += w;
          sx += w * dx;
          sy += w * dy;
        }
      const double ox = x + (sw > 0 ? sx / sw : 0.0);
      const double oy = y + (sw > 0 ? sy / sw : 0.0);

      Detection d;
      d.cls = t.cls;
      d.variant = t.name;
      d.score = std::clamp(v, 0.0, 1.0);
      d.bbox = {ox, oy, ox + t.width, oy + t.height};
      d.centroid = {ox + t.hotspot.x, oy + t.hotspot.y};
      out.push_back(d);
    }
  }
}

}  // namespace

std::vector<Detection> detect(const Frame& frame, const std::vector<Template>& templates, const DetectOptions& opt) {
  if (!frame.valid()) throw Error(ErrorCode::OutOfRange, "detect: invalid frame");
  cv::Rect window(0, 0, frame.width, frame.height);
  if (opt.roi) window &= cv::Rect(opt.roi->x, opt.roi->y, opt.roi->width, opt.roi->height);
  for (const Template& t : templates)
    if (t.width > window.width || t.height > window.height)
      throw Error(ErrorCode::TemplateTooLarge, "template " + t.name + " is larger than the search window");

  const cv::Mat image = as_mat(frame.width, frame.height, frame.pixels)(window);
  std::vector<Detection> candidates;
  cv::Mat response;
  for (const Template& t : templates) {
    if (!opt.classes.empty() && !opt.classes.contains(t.cls)) continue;
    if (!opt.variants.empty() && !opt.variants.contains(t.name)) continue;
    cv::matchTemplate(image, as_mat(t.width, t.height, t.pixels), response, cv::TM_CCOEFF_NORMED);
    collect_peaks(response, t, opt.threshold, candidates);
  }
  if (window.x != 0 || window.y != 0) {
    for (Detection& d : candidates) {
      d.centroid = d.centroid + Vec2{double(window.x), double(window.y)};
      d.bbox = {d.bbox.x_min + window.x, d.bbox.y_min + window.y, d.bbox.x_max + window.x, d.bbox.y_max + window.y};
    }
  }

  std::vector<Detection> same_class = nms(std::move(candidates), opt.nms_iou);
  // Overlapping boxes of different classes: the better score wins.
  std::vector<Detection> out;
  for (const Detection& d : same_class) {
    const bool clash = std::any_of(out.begin(), out.end(), [&](const Detection& k) {
      return k.cls != d.cls && iou(k.bbox, d.bbox) > opt.cross_class_iou;
    });
    if (!clash) out.push_back(d);
  }
  return out;
}

std::vector<std::uint8_t> encode_png(int width, int height, const std::vector<std::uint8_t>& pixels) {
  std::vector<std::uint8_t> out;
  cv::imencode(".png", as_mat(width, height, pixels), out);
  return out;
}

std::vector<std::uint8_t> encode_png(const Frame& f) { return encode_png(f.width, f.height, f.pixels); }

Frame decode_png(const std::vector<std::uint8_t>& bytes) {
  cv::Mat m = cv::imdecode(bytes, cv::IMREAD_GRAYSCALE);
  if (m.empty()) throw Error(ErrorCode::MalformedConfig, "not a decodable PNG");
  Frame f;
  f.width = m.cols;
  f.height = m.rows;
  f.pixels.assign(m.datastart, m.dataend);
  if (!m.isContinuous()) {
    f.pixels.clear();
    for (int y = 0; y < m.rows; ++y) f.pixels.insert(f.pixels.end(), m.ptr<std::uint8_t>(y), m.ptr<std::uint8_t>(y) + m.cols);
  }
  return f;
}

std::vector<Template> load_templates(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "templates.json";
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::MalformedConfig, "cannot open " + manifest_path.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedConfig, manifest_path.string() + ": " + e.what());
  }
  std::vector<Template> out;
  for (const auto& entry : manifest.at("templates")) {
    Template t;
    auto cls = parse_class(entry.at("class").get<std::string>());
    if (!cls) throw Error(ErrorCode::MalformedConfig, "unknown detection class " + entry.at("class").dump());
    t.cls = *cls;
    t.name = entry.at("name").get<std::string>();
    t.hotspot = {entry.at("hotspot").at(0).get<double>(), entry.at("hotspot").at(1).get<double>()};
    cv::Mat m = cv::imread((dir / entry.at("file").get<std::string>()).string(), cv::IMREAD_GRAYSCALE);
    if (m.empty()) throw Error(ErrorCode::MalformedConfig, "cannot read template image for " + t.name);
    t.width = m.cols;
    t.height = m.rows;
    t.pixels.resize(static_cast<std::size_t>(m.cols) * m.rows);
    for (int y = 0; y < m.rows; ++y) std::copy_n(m.ptr<std::uint8_t>(y), m.cols, t.pixels.begin() + y * m.cols);
    out.push_back(std::move(t));
  }
  return out;
}

void save_templates(const std::filesystem::path& dir, const std::vector<Template>& templates) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["templates"] = nlohmann::json::array();
  for (const Template& t : templates) {
    const std::string file = t.name + ".png";
    cv::imwrite((dir / file).string(), as_mat(t.width, t.height, t.pixels));
    manifest["templates"].push_back(
        {{"name", t.name}, {"class", to_string(t.cls)}, {"file", file}, {"hotspot", {t.hotspot.x, t.hotspot.y}}});
  }
  std::ofstream(dir / "templates.json") << manifest.dump(2) << "\n";
}

}  // namespace atomics::vision
