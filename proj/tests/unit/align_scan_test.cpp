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

#include <cmath>
#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "atomics/align/config.hpp"
#include "atomics/align/scan.hpp"
#include "test_util.hpp"

namespace atomics::align {
namespace {

TEST(FitQuadratic, ThreePointVertex) {
  const QuadFit f = fit_quadratic({-1.0, 0.0, 1.0}, {-1.69, -0.09, -0.49});
  // Closed form 0.5(y- - y+)/(y- - 2y0 + y+).
  EXPECT_NEAR(f.vertex, 0.5 * (-1.69 + 0.49) / (-1.69 + 0.18 - 0.49), 1e-12);
  EXPECT_NEAR(f.vertex, 0.3, 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
}

TEST(FitQuadratic, RandomParabolasRecovered) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = -0.1 - std::abs(u(gen)), v = 50.0 * u(gen), c = u(gen);
    const double h = 0.5 + std::abs(u(gen)) * 5.0;
    std::vector<double> x, y;
    for (int i = 0; i < 7; ++i) {
      x.push_back(v + 3.0 * u(gen) + h * (i - 3));
      y.push_back(a * (x.back() - v) * (x.back() - v) + c);
    }
    const QuadFit f = fit_quadratic(x, y);
    EXPECT_NEAR(f.vertex, v, 1e-7 * (1 + std::abs(v)));
    EXPECT_NEAR(f.peak, c, 1e-8);
  }
}

TEST(FitQuadratic, Degenerate) {
  EXPECT_ERROR_CODE(fit_quadratic({1.0, 2.0}, {0.0, 1.0}), ErrorCode::OutOfRange);
  EXPECT_ERROR_CODE(fit_quadratic({1.0, 1.0, 1.0}, {0.0, 1.0, 2.0}), ErrorCode::Degenerate);
}

ScanResult scan_of(const std::vector<double>& x, const std::vector<double>& p) {
  ScanResult s;
  s.positions = x;
  s.powers = p;
  s.center = 0.5 * (x.front() + x.back());
  s.half_range = 0.5 * (x.back() - x.front());
  return s;
}

TEST(FitLogQuadratic, GaussianPeakExact) {
  const double dark = 1e-9, w = 2.5, peak = 0.7;
  std::vector<double> x, p;
  for (int i = 0; i < 7; ++i) {
    x.push_back(-3.75 + 1.25 * i);
    p.push_back(dark + 1e-4 * std::exp(-(x.back() - peak) * (x.back() - peak) / (w * w)));
  }
  const auto f = fit_log_quadratic(scan_of(x, p), dark);
  ASSERT_TRUE(f);
  EXPECT_NEAR(f->vertex, peak, 1e-9);
}

TEST(FitLogQuadratic, InvalidCases) {
  const std::vector<double> x{-1.0, 0.0, 1.0};
  EXPECT_FALSE(fit_log_quadratic(scan_of(x, {1e-6, 2e-6, 3e-6}), 0.0));   // monotone
  EXPECT_FALSE(fit_log_quadratic(scan_of(x, {3e-6, 1e-6, 3e-6}), 0.0));   // convex
  EXPECT_FALSE(fit_log_quadratic(scan_of(x, {1e-6, 2e-6, 1e-9}), 1e-9));  // at dark
  // Concave but the vertex lies beyond the window.
  EXPECT_FALSE(fit_log_quadratic(scan_of(x, {1e-6, 2e-6, 2.9e-6}), 0.0));
}

TEST(FitLogQuadratic, PureNoiseRejectedByR2) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n(0.0, 1.0);
  int accepted = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x, p;
    for (int i = 0; i < 7; ++i) {
      x.push_back(i);
      p.push_back(1e-5 * (1.0 + 0.01 * n(gen)));
    }
    if (auto f = fit_log_quadratic(scan_of(x, p), 0.0); f) {
      EXPECT_GE(f->r2, kMinFitR2);
      ++accepted;
    }
  }
  EXPECT_LT(accepted, 200);
}

TEST(Spiral, FirstNineOffsets) {
  const auto s = spiral_lattice(1);
  const std::vector<std::pair<int, int>> expected{{0, 0}, {1, 0},  {1, 1},   {0, 1}, {-1, 1},
                                                  {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
  EXPECT_EQ(s, expected);
  EXPECT_EQ(spiral_lattice(2)[9], std::make_pair(2, -1));
}

TEST(Spiral, CoverageExactlyOncePerRingUpToTwenty) {
  for (int r_max = 0; r_max <= 20; ++r_max) {
    const auto s = spiral_lattice(r_max);
    ASSERT_EQ(s.size(), static_cast<std::size_t>((2 * r_max + 1) * (2 * r_max + 1)));
    std::set<std::pair<int, int>> seen;
    int ring = 0;
    for (const auto& [i, j] : s) {
      const int r = std::max(std::abs(i), std::abs(j));
      ASSERT_GE(r, ring) << "ring " << r << " revisited after " << ring;
      ring = r;
      ASSERT_LE(r, r_max);
      ASSERT_TRUE(seen.insert({i, j}).second) << i << "," << j;
    }
  }
}

TEST(Spiral, ConsecutivePointsAreNeighbours) {
  const auto s = spiral_lattice(20);
  for (std::size_t k = 1; k < s.size(); ++k)
    EXPECT_EQ(std::max(std::abs(s[k].first - s[k - 1].first), std::abs(s[k].second - s[k - 1].second)), 1);
}

TEST(Polarization, RecoversAngleNoiseless) {
  for (double theta : {0.0, 37.0, 89.5, 121.0, 179.0}) {
    std::vector<double> a, p;
    for (int k = 0; k < 12; ++k) {
      a.push_back(15.0 * k);
      const double c = std::cos((a.back() - theta) * M_PI / 180.0);
      p.push_back(0.05 + 0.95 * c * c);
    }
    const PolarizationFit f = fit_polarization(a, p);
    const double d = std::fmod(std::abs(f.theta - theta) + 90.0, 180.0) - 90.0;
    EXPECT_NEAR(d, 0.0, 1e-5) << theta;
    EXPECT_NEAR(f.c0, 0.05, 1e-6);
    EXPECT_NEAR(f.c1, 0.95, 1e-6);
    EXPECT_GE(f.theta, 0.0);
    EXPECT_LT(f.theta, 180.0);
  }
}

TEST(AlignConfigJson, DefaultsAndOverrides) {
  const AlignConfig d;
  EXPECT_DOUBLE_EQ(d.threshold(), 10 * d.dark_floor);
  EXPECT_DOUBLE_EQ(d.spiral_pitch, 2.5);
  EXPECT_EQ(d.scan_points, 7);
  const AlignConfig c = AlignConfig::from_json({{"scan_points", 9}, {"first_light_threshold", 5e-8}});
  EXPECT_EQ(c.scan_points, 9);
  EXPECT_DOUBLE_EQ(c.threshold(), 5e-8);
  EXPECT_ERROR_CODE(AlignConfig::from_json({{"scan_points", 2}}), ErrorCode::MalformedConfig);
  EXPECT_ERROR_CODE(AlignConfig::from_json({{"spiral_pitch", "wide"}}), ErrorCode::MalformedConfig);
  EXPECT_ERROR_CODE(AlignConfig::from_json(nlohmann::json::array()), ErrorCode::MalformedConfig);
}

}  // namespace
}  // namespace atomics::align
