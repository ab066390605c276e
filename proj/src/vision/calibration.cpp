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

#include "atomics/vision/calibration.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "atomics/core/error.hpp"

namespace atomics::vision {

AffineMap2::AffineMap2(std::array<double, 4> linear, Vec2 offset) : a_(linear), b_(offset) {
  Eigen::Matrix2d m;
  m << a_[0], a_[1], a_[2], a_[3];
  const Eigen::Vector2d sv = Eigen::JacobiSVD<Eigen::Matrix2d>(m).singularValues();
  cond_ = sv(1) > 0 ? sv(0) / sv(1) : std::numeric_limits<double>::infinity();
  if (!(cond_ < kMaxConditionNumber))
    throw Error(ErrorCode::IllConditioned, "affine map condition number " + std::to_string(cond_) + " >= 1e6");
  const double det = a_[0] * a_[3] - a_[1] * a_[2];
  inv_ = {a_[3] / det, -a_[1] / det, -a_[2] / det, a_[0] / det};
}

AffineMap2 AffineMap2::similarity(double scale, double rotation_deg, Vec2 offset) {
  const double r = rotation_deg * std::numbers::pi / 180.0;
  const double c = scale * std::cos(r), s = scale * std::sin(r);
  return AffineMap2({c, -s, s, c}, offset);
}

Vec2 AffineMap2::apply_linear(Vec2 d) const { return {a_[0] * d.x + a_[1] * d.y, a_[2] * d.x + a_[3] * d.y}; }

Vec2 AffineMap2::apply_inverse_linear(Vec2 d) const {
  return {inv_[0] * d.x + inv_[1] * d.y, inv_[2] * d.x + inv_[3] * d.y};
}

Vec2 AffineMap2::stage_to_pixel(Vec2 stage) const { return apply_linear(stage) + b_; }

Vec2 AffineMap2::pixel_to_stage(Vec2 pixel) const { return apply_inverse_linear(pixel - b_); }

Calibration calibrate(const std::vector<Correspondence>& pts) {
  const std::size_t n = pts.size();
  if (n < 3) throw Error(ErrorCode::Degenerate, "calibration needs at least 3 correspondences");

  // Centre both point sets so the solve is well scaled.
  Vec2 sc{0, 0}, pc{0, 0};
  for (const auto& c : pts) {
    sc = sc + c.stage;
    pc = pc + c.pixel;
  }
  sc = (1.0 / n) * sc;
  pc = (1.0 / n) * pc;

  Eigen::MatrixXd s(n, 2), p(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    s(i, 0) = pts[i].stage.x - sc.x;
    s(i, 1) = pts[i].stage.y - sc.y;
    p(i, 0) = pts[i].pixel.x - pc.x;
    p(i, 1) = pts[i].pixel.y - pc.y;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::Vector2d sv = svd.singularValues();
  if (sv(0) == 0.0 || sv(1) <= 1e-9 * sv(0))
    throw Error(ErrorCode::Degenerate, "calibration stage points are collinear");

  // Rows of the linear part solve s · a_row = p_col.
  const Eigen::MatrixXd x = svd.solve(p);  // 2×2, column j = row j of the linear part
  const std::array<double, 4> linear{x(0, 0), x(1, 0), x(0, 1), x(1, 1)};
  const Vec2 lin_sc{linear[0] * sc.x + linear[1] * sc.y, linear[2] * sc.x + linear[3] * sc.y};
  Calibration out{AffineMap2(linear, pc - lin_sc), 0.0};

  double sum = 0;
  for (const auto& c : pts) {
    const Vec2 r = out.map.stage_to_pixel(c.stage) - c.pixel;
    sum += r.x * r.x + r.y * r.y;
  }
  out.rms_residual = std::sqrt(sum / n);
  return out;
}

Vec2 pixel_to_stage(const AffineMap2& map, Vec2 pixel) { return map.pixel_to_stage(pixel); }

Vec2 global_position(Vec2 camera_encoder, const std::optional<AffineMap2>& map, Vec2 pixel, Vec2 center) {
  if (!map) throw Error(ErrorCode::Uncalibrated, "no calibration for the current objective");
  return camera_encoder + map->apply_inverse_linear(pixel - center);
}

void save_calibration(const std::filesystem::path& path, const CalibrationRecord& r) {
  const auto& a = r.calibration.map.linear();
  nlohmann::json j{{"objective", r.objective},
                   {"version", r.version},
                   {"timestamp", r.timestamp},
                   {"sim_time", r.sim_time},
                   {"matrix", {{a[0], a[1]}, {a[2], a[3]}}},
                   {"offset", {r.calibration.map.offset().x, r.calibration.map.offset().y}},
                   {"condition_number", r.calibration.map.condition_number()},
                   {"rms_residual_px", r.calibration.rms_residual}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::MalformedConfig, "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

CalibrationRecord load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MalformedConfig, "cannot open " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    CalibrationRecord r;
    r.objective = j.at("objective").get<std::string>();
    r.version = j.at("version").get<int>();
    r.timestamp = j.value("timestamp", "");
    r.sim_time = j.value("sim_time", 0.0);
    const auto& m = j.at("matrix");
    r.calibration.map = AffineMap2({m.at(0).at(0).get<double>(), m.at(0).at(1).get<double>(),
                                    m.at(1).at(0).get<double>(), m.at(1).at(1).get<double>()},
                                   {j.at("offset").at(0).get<double>(), j.at("offset").at(1).get<double>()});
    r.calibration.rms_residual = j.at("rms_residual_px").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedConfig, path.string() + ": " + e.what());
  }
}

}  // namespace atomics::vision
