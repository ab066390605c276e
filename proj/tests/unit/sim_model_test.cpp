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
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "atomics/sim/model.hpp"
#include "atomics/sim/sim_bench.hpp"
#include "test_util.hpp"

namespace atomics::sim {
namespace {

SimConfig noiseless() {
  SimConfig c;
  c.sigma_rel = 0.0;
  return c;
}

// Independent evaluation of the coupling model, written out term by term.
double oracle_power(double dx, double dy, double dz, double paddle, const SimConfig& c) {
  const double pi = std::acos(-1.0);
  const double a = 1.0 / (1.0 + (dz / c.z_r) * (dz / c.z_r));
  const double w = c.w0 * std::sqrt(1.0 + (dz / c.z_r) * (dz / c.z_r));
  const double t = c.eps_pol + (1.0 - c.eps_pol) * std::pow(std::cos((paddle - c.theta_opt) * pi / 180.0), 2);
  return c.p_dark + c.p_in * c.eta0 * c.eta0 * t * a * std::exp(-(dx * dx + dy * dy) / (w * w));
}

TEST(CoupledPower, ZeroOffsetIsPeak) {
  const SimConfig c = noiseless();
  EXPECT_DOUBLE_EQ(coupled_power({0, 0, 0}, c.theta_opt, c), 1e-9 + 0.25e-3);
}

TEST(CoupledPower, OneWaistLateralIsOneOverE) {
  const SimConfig c = noiseless();
  const double peak = coupled_power({0, 0, 0}, c.theta_opt, c) - c.p_dark;
  const double p = coupled_power({c.w0, 0, 0}, c.theta_opt, c) - c.p_dark;
  EXPECT_NEAR(p / peak, std::exp(-1.0), 1e-12);
  EXPECT_NEAR(p / peak, 0.3679, 5e-5);
}

TEST(CoupledPower, OneRayleighRangeAxialIsHalf) {
  const SimConfig c = noiseless();
  const double peak = coupled_power({0, 0, 0}, c.theta_opt, c) - c.p_dark;
  EXPECT_NEAR((coupled_power({0, 0, c.z_r}, c.theta_opt, c) - c.p_dark) / peak, 0.5, 1e-12);
}

TEST(CoupledPower, MatchesIndependentOracle) {
  const SimConfig c = noiseless();
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> lat(-10, 10), ax(-40, 40), pad(0, 360);
  for (int i = 0; i < 1000; ++i) {
    const double dx = lat(gen), dy = lat(gen), dz = ax(gen), p = pad(gen);
    EXPECT_NEAR(coupled_power({dx, dy, dz}, p, c), oracle_power(dx, dy, dz, p, c), 1e-18);
  }
}

TEST(CoupledPower, RadialMonotonicity) {
  const SimConfig c = noiseless();
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> ang(0, 2 * std::acos(-1.0)), r(0, 8), z(-30, 30), pad(0, 360);
  for (int i = 0; i < 1000; ++i) {
    const double phi = ang(gen), r1 = r(gen), r2 = r1 + 1e-3 + r(gen), dz = z(gen), p = pad(gen);
    const double p1 = coupled_power({r1 * std::cos(phi), r1 * std::sin(phi), dz}, p, c);
    const double p2 = coupled_power({r2 * std::cos(phi), r2 * std::sin(phi), dz}, p, c);
    EXPECT_GT(p1 - c.p_dark, p2 - c.p_dark);
  }
}

TEST(CoupledPower, Symmetry) {
  const SimConfig c = noiseless();
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> lat(-6, 6), z(-30, 30), pad(0, 360);
  for (int i = 0; i < 1000; ++i) {
    const double dx = lat(gen), dy = lat(gen), dz = z(gen), p = pad(gen);
    const double base = coupled_power({dx, dy, dz}, p, c);
    EXPECT_DOUBLE_EQ(base, coupled_power({-dx, -dy, dz}, p, c));
    EXPECT_DOUBLE_EQ(base, coupled_power({dy, dx, dz}, p, c));
  }
}

TEST(CoupledPower, LogPowerIsExactlyQuadraticInOffset) {
  // Three-point parabola through ln(P − dark) recovers the true peak.
  const SimConfig c = noiseless();
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> off(-3, 3), z(-20, 20);
  for (int i = 0; i < 200; ++i) {
    const double peak = off(gen), dy = off(gen), dz = z(gen), h = 1.0;
    auto y = [&](double x) { return std::log(coupled_power({x - peak, dy, dz}, 10.0, c) - c.p_dark); };
    const double ym = y(-h), y0 = y(0), yp = y(h);
    const double vertex = 0.5 * h * (ym - yp) / (ym - 2 * y0 + yp);
    EXPECT_NEAR(vertex, peak, 1e-9);
  }
}

TEST(CoupledPower, NoiseIsMultiplicativeOnSignal) {
  SimConfig c;
  c.sigma_rel = 0.01;
  Rng rng(1);
  std::vector<double> r;
  const double clean = coupled_power({0, 0, 0}, c.theta_opt, noiseless()) - c.p_dark;
  for (int i = 0; i < 20000; ++i) r.push_back((coupled_power({0, 0, 0}, c.theta_opt, c, &rng) - c.p_dark) / clean);
  const double mean = std::accumulate(r.begin(), r.end(), 0.0) / r.size();
  double var = 0;
  for (double v : r) var += (v - mean) * (v - mean);
  EXPECT_NEAR(mean, 1.0, 5e-4);
  EXPECT_NEAR(std::sqrt(var / (r.size() - 1)), 0.01, 5e-4);
}

TEST(SimConfig, ValidationAndJson) {
  SimConfig c;
  EXPECT_NO_THROW(c.validate());
  c.eta0 = 1.5;
  EXPECT_ERROR_CODE(c.validate(), ErrorCode::MalformedConfig);
  c = SimConfig{};
  c.eps_pol = 1.0;
  EXPECT_ERROR_CODE(c.validate(), ErrorCode::MalformedConfig);
  c = SimConfig{};
  c.w0 = 0.0;
  EXPECT_ERROR_CODE(c.validate(), ErrorCode::MalformedConfig);
  auto round = SimConfig::from_json(SimConfig{}.to_json());
  EXPECT_EQ(round.to_json(), SimConfig{}.to_json());
  EXPECT_ERROR_CODE(SimConfig::from_json({{"p_in", "lots"}}), ErrorCode::MalformedConfig);
}

TEST(SimConfig, DefaultDriftIsTwoMicronsStationary) {
  EXPECT_NEAR(SimConfig{}.stationary_drift_stddev(), 2.0, 1e-9);
}

TEST(StepDrift, ZeroDiffusionLeavesOffsetUnchanged) {
  SimConfig c;
  c.drift_sigma = 0.0;
  Rng rng(1);
  DriftState s;
  s.offset = {Vec2{1.5, -2.0}, Vec2{0.25, 3.0}};
  DriftState n = step_drift(s, 10.0, c, rng);
  EXPECT_EQ(n.offset[0], s.offset[0]);
  EXPECT_EQ(n.offset[1], s.offset[1]);
  EXPECT_DOUBLE_EQ(n.last_update, 10.0);
}

TEST(StepDrift, FastReversionPullsToZero) {
  SimConfig c;
  c.drift_theta = 1e6;
  c.drift_sigma = 0.01;
  Rng rng(1);
  DriftState s;
  s.offset = {Vec2{50.0, -50.0}, Vec2{20.0, 20.0}};
  DriftState n = step_drift(s, 1.0, c, rng);
  for (const Vec2& o : n.offset) {
    EXPECT_LT(std::abs(o.x), 1e-3);
    EXPECT_LT(std::abs(o.y), 1e-3);
  }
}

TEST(StepDrift, StationaryStddevMatchesAnalytic) {
  // One relaxation time per step keeps samples weakly correlated.
  const SimConfig c;
  Rng rng(2024);
  DriftState s;
  const double dt = 1.0 / c.drift_theta;
  for (int i = 0; i < 50; ++i) s = step_drift(s, dt, c, rng);
  double sum = 0, sum2 = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    s = step_drift(s, dt, c, rng);
    sum += s.offset[0].x;
    sum2 += s.offset[0].x * s.offset[0].x;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sum2 / n - mean * mean);
  const double analytic = c.drift_sigma / std::sqrt(2 * c.drift_theta);
  EXPECT_NEAR(sd / analytic, 1.0, 0.05);
}

TEST(ApplyStageStep, IdealStageIsExact) {
  SimConfig c;
  c.backlash = 0.0;
  c.step_noise_rel = 0.0;
  Rng rng(1);
  PiezoAxis a;
  for (double d : {1.0, -2.5, 0.125, 7.0, -7.0}) EXPECT_DOUBLE_EQ(apply_stage_step(a, d, c, rng), d);
}

TEST(ApplyStageStep, ReversalEatsBacklashFirst) {
  SimConfig c;
  c.backlash = 0.2;
  c.step_noise_rel = 0.0;
  Rng rng(1);
  PiezoAxis a;
  EXPECT_DOUBLE_EQ(apply_stage_step(a, 10.0, c, rng), 10.0);
  EXPECT_NEAR(apply_stage_step(a, -1.0, c, rng), -0.8, 1e-12);
  EXPECT_DOUBLE_EQ(apply_stage_step(a, -1.0, c, rng), -1.0);
  // A reversal smaller than the deadband produces no motion.
  EXPECT_DOUBLE_EQ(apply_stage_step(a, 0.1, c, rng), 0.0);
  EXPECT_NEAR(apply_stage_step(a, 0.3, c, rng), 0.2, 1e-12);
}

TEST(ApplyStageStep, StepNoiseSpread) {
  SimConfig c;
  c.backlash = 0.2;
  c.step_noise_rel = 0.02;
  Rng rng(77);
  PiezoAxis a;
  std::vector<double> v;
  for (int i = 0; i < 1000; ++i) v.push_back(apply_stage_step(a, 1.0, c, rng));
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double var = 0;
  for (double x : v) var += (x - mean) * (x - mean);
  EXPECT_NEAR(std::sqrt(var / (v.size() - 1)), 0.02, 0.005);
  EXPECT_LE(std::abs(mean - 1.0), c.backlash);
}

TEST(ApplyStageStep, SignNeverFlips) {
  SimConfig c;
  Rng rng(5);
  PiezoAxis a;
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> d(-3, 3);
  for (int i = 0; i < 5000; ++i) {
    const double req = d(gen);
    const double act = apply_stage_step(a, req, c, rng);
    EXPECT_TRUE(act == 0.0 || (act > 0) == (req > 0));
  }
}

TEST(SimBench, IdenticalSeedsGiveBitIdenticalStreams) {
  auto run = [](std::uint64_t seed) {
    SimSetup s;
    s.physics.seed = seed;
    auto rig = make_rig(s);
    std::vector<double> powers;
    std::vector<std::uint8_t> pixels;
    for (int i = 0; i < 5; ++i) {
      rig.bench->move_relative(hal::axes::left_y, -100.0 - i);
      powers.push_back(rig.bench->read_power().power);
    }
    rig.bench->move_absolute(hal::axes::scope_y, 1000.0);
    pixels = rig.bench->grab_frame().pixels;
    powers.push_back(rig.sim->drift().offset[0].x);
    return std::make_pair(powers, pixels);
  };
  auto a = run(99), b = run(99), c = run(100);
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  EXPECT_NE(a.second, c.second);
}

TEST(SimBench, TiltShiftsBothFibers) {
  SimSetup s;
  s.physics.drift_sigma = 0.0;
  auto rig = make_rig(s);
  const Vec3 l0 = rig.sim->tip_position(hal::Tower::LeftFiber);
  const Vec3 r0 = rig.sim->tip_position(hal::Tower::RightFiber);
  rig.bench->move_absolute(hal::axes::tilt, 5.0);
  EXPECT_NEAR(rig.sim->tip_position(hal::Tower::LeftFiber).y - l0.y, 0.5, 1e-12);
  EXPECT_NEAR(rig.sim->tip_position(hal::Tower::RightFiber).y - r0.y, 0.5, 1e-12);
}

TEST(SimBench, DaqTraceShapes) {
  auto rig = make_rig(SimSetup{});
  rig.bench->set_switch(SwitchRoute::Daq);
  auto scope = rig.bench->acquire({hal::DaqKind::Oscilloscope, 1.0, {{"sample_rate", 1000.0}}});
  EXPECT_EQ(scope.rows(), 1000u);
  auto counter = rig.bench->acquire({hal::DaqKind::FrequencyCounter, 10.0, {}});
  EXPECT_EQ(counter.rows(), 10u);
  auto spectrum = rig.bench->acquire({hal::DaqKind::SpectrumAnalyzer, 0.5, {{"points", 101.0}}});
  EXPECT_EQ(spectrum.rows(), 101u);
  rig.bench->set_switch(SwitchRoute::PowerMeter);
  EXPECT_ERROR_CODE(rig.bench->acquire({hal::DaqKind::Oscilloscope, 1.0, {}}), ErrorCode::WrongRoute);
}

}  // namespace
}  // namespace atomics::sim
