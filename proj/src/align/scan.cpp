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

#include "atomics/align/scan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "atomics/core/error.hpp"

namespace atomics::align {

QuadFit fit_quadratic(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 3 || y.size() != n) throw Error(ErrorCode::OutOfRange, "quadratic fit needs at least 3 points");
  // Centre and scale the abscissae so the design matrix stays well conditioned.
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double sx = 0.0;
  for (double v : x) sx = std::max(sx, std::abs(v - mx));
  if (!(sx > 0)) throw Error(ErrorCode::Degenerate, "quadratic fit needs distinct positions");

  Eigen::MatrixXd m(n, 3);
  Eigen::VectorXd rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (x[i] - mx) / sx;
    m(i, 0) = u * u;
    m(i, 1) = u;
    m(i, 2) = 1.0;
    rhs(i) = y[i];
  }
  const Eigen::Vector3d p = m.colPivHouseholderQr().solve(rhs);

  QuadFit f;
  // Undo the substitution u = (x - mx) / sx.
  f.a = p(0) / (sx * sx);
  f.b = p(1) / sx - 2.0 * p(0) * mx / (sx * sx);
  f.c = p(2) - p(1) * mx / sx + p(0) * mx * mx / (sx * sx);
  f.vertex = p(0) != 0.0 ? mx - p(1) * sx / (2.0 * p(0)) : std::numeric_limits<double>::quiet_NaN();
  f.peak = p(2) - p(1) * p(1) / (4.0 * p(0));

  const double mean = rhs.mean();
  const double ss_tot = (rhs.array() - mean).square().sum();
  const double ss_res = (m * p - rhs).squaredNorm();
  f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

std::optional<QuadFit> fit_log_quadratic(const ScanResult& scan, double dark) {
  if (scan.positions.size() < 3 || scan.powers.size() != scan.positions.size()) return std::nullopt;
  std::vector<double> y;
  y.reserve(scan.powers.size());
  for (double p : scan.powers) {
    if (!(p > dark)) return std::nullopt;
    y.push_back(std::log(p - dark));
  }
  const QuadFit f = fit_quadratic(scan.positions, y);
  if (!(f.a < 0)) return std::nullopt;
  if (!(std::abs(f.vertex - scan.center) <= scan.half_range * (1.0 + 1e-12))) return std::nullopt;
  if (f.r2 < kMinFitR2) return std::nullopt;
  return f;
}

std::vector<std::pair<int, int>> spiral_lattice(int max_ring) {
  std::vector<std::pair<int, int>> out{{0, 0}};
  for (int r = 1; r <= max_ring; ++r) {
    // Ring r starts right of the previous ring's last point (r-1, -(r-1)) and
    // walks up the right side, left across the top, down the left side,
    // right along the bottom.
    int x = r, y = -(r - 1);
    for (; y <= r; ++y) out.emplace_back(x, y);
    y = r;
    for (x = r - 1; x >= -r; --x) out.emplace_back(x, y);
    x = -r;
    for (y = r - 1; y >= -r; --y) out.emplace_back(x, y);
    y = -r;
    for (x = -r + 1; x <= r; ++x) out.emplace_back(x, y);
  }
  return out;
}

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Linear least squares for (c0, c1) at fixed theta; returns the residual.
PolarizationFit project(double theta, const std::vector<double>& ang, const std::vector<double>& p) {
  const std::size_t n = ang.size();
  double s1 = 0, su = 0, suu = 0, sy = 0, suy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = std::cos((ang[i] - theta) * kDeg);
    const double u = c * c;
    s1 += 1;
    su += u;
    suu += u * u;
    sy += p[i];
    suy += u * p[i];
  }
  const double det = s1 * suu - su * su;
  PolarizationFit f;
  f.theta = theta;
  if (std::abs(det) < 1e-300) {
    f.c0 = sy / s1;
    f.c1 = 0.0;
  } else {
    f.c1 = (s1 * suy - su * sy) / det;
    f.c0 = (sy - f.c1 * su) / s1;
  }
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = std::cos((ang[i] - theta) * kDeg);
    const double r = f.c0 + f.c1 * c * c - p[i];
    rss += r * r;
  }
  f.rss = rss;
  return f;
}

double wrap180(double t) {
  t = std::fmod(t, 180.0);
  return t < 0 ? t + 180.0 : t;
}

}  // namespace

PolarizationFit fit_polarization(const std::vector<double>& angles, const std::vector<double>& powers) {
  if (angles.size() < 3 || powers.size() != angles.size())
    throw Error(ErrorCode::OutOfRange, "polarization fit needs at least 3 angles");

  // A negative c1 is the same curve as a positive one shifted by 90°, so only
  // fits with c1 >= 0 are admissible on the grid.
  double best_t = 0.0, best_rss = std::numeric_limits<double>::infinity();
  for (int g = 0; g < 180; ++g) {
    const PolarizationFit f = project(g, angles, powers);
    if (f.c1 >= 0 && f.rss < best_rss) {
      best_rss = f.rss;
      best_t = g;
    }
  }

  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = best_t - 1.0, hi = best_t + 1.0;
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = project(x1, angles, powers).rss, f2 = project(x2, angles, powers).rss;
  while (hi - lo > 1e-7) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = project(x1, angles, powers).rss;
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = project(x2, angles, powers).rss;
    }
  }
  PolarizationFit out = project(0.5 * (lo + hi), angles, powers);
  out.theta = wrap180(out.theta);
  return out;
}

}  // namespace atomics::align
