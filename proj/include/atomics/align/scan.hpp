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

#include <optional>
#include <vector>

#include "atomics/core/types.hpp"
#include "atomics/hal/axis.hpp"

namespace atomics::align {

/// y = a·x² + b·x + c over the scan positions, with its goodness of fit.
struct QuadFit {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double r2 = 0.0;
  double vertex = 0.0;
  double peak = 0.0;  // fitted y at the vertex
};

struct ScanResult {
  hal::AxisId axis = hal::axes::left_x;
  double center = 0.0;
  double half_range = 0.0;
  std::vector<double> positions;  // µm, strictly increasing
  std::vector<double> powers;     // watts
  std::optional<QuadFit> fit;     // in ln(P - dark)
};

/// Least-squares parabola. Needs at least three distinct abscissae.
QuadFit fit_quadratic(const std::vector<double>& x, const std::vector<double>& y);

inline constexpr double kMinFitR2 = 0.5;

/// Parabola through (position, ln(power - dark)). nullopt (InvalidFit) when a
/// power is at or below dark, the curvature is not negative, the vertex lies
/// outside center ± half_range, or r² < 0.5.
std::optional<QuadFit> fit_log_quadratic(const ScanResult& scan, double dark);

/// Offsets (in units of the pitch) of the square spiral, outward from the
/// origin: (0,0), (1,0), (1,1), (0,1), (-1,1), (-1,0), (-1,-1), (0,-1),
/// (1,-1), (2,-1), ... Every ring of max-norm radius r is completed before
/// radius r+1 starts. Returns all points with radius <= max_ring.
std::vector<std::pair<int, int>> spiral_lattice(int max_ring);

/// T(θ) = c0 + c1·cos²(θ − θ*) with c1 ≥ 0 and θ* in [0, 180).
struct PolarizationFit {
  double theta = 0.0;
  double c0 = 0.0;
  double c1 = 0.0;
  double rss = 0.0;
};

/// Variable projection: for fixed θ* the model is linear in (c0, c1); θ* is
/// located by a 1° grid and refined by golden-section search.
PolarizationFit fit_polarization(const std::vector<double>& angles_deg, const std::vector<double>& powers);

}  // namespace atomics::align
