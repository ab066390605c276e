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
#include <random>

#include <gtest/gtest.h>

#include "atomics/monitor/monitor.hpp"
#include "test_util.hpp"

namespace atomics::monitor {
namespace {

CusumState unit_cusum(double k = 0.5, double h = 8.0) {
  CusumState s;
  s.reference = 0.0;
  s.sigma = 1.0;
  s.k = k;
  s.h = h;
  return s;
}

std::vector<PowerSample> window_of(std::vector<double> powers) {
  std::vector<PowerSample> w;
  for (std::size_t i = 0; i < powers.size(); ++i) w.push_back({0.1 * i, powers[i], SwitchRoute::Daq});
  return w;
}

TEST(Ewma, ConstantStreamIsAFixedPoint) {
  EwmaState s{1e-3, 0.0, 0.05, 1};
  for (int i = 0; i < 100; ++i) s = ewma_update(s, 1e-3);
  EXPECT_DOUBLE_EQ(s.mean, 1e-3);
  EXPECT_DOUBLE_EQ(s.variance, 0.0);
}

TEST(Ewma, StepResponseCrossesHalfwayAtFourteenSamples) {
  EwmaState s{1e-3, 0.0, 0.05, 1};
  int k = 0;
  while (s.mean < 1.5e-3) {
    s = ewma_update(s, 2e-3);
    ++k;
  }
  EXPECT_EQ(k, 14);
  EXPECT_EQ(ewma_half_life(0.05), 14);
}

TEST(Ewma, UnitLambdaTracksLastSample) {
  EwmaState s{5.0, 0.0, 1.0, 1};
  for (double x : {3.0, 7.0, 1.25}) {
    s = ewma_update(s, x);
    EXPECT_DOUBLE_EQ(s.mean, x);
  }
}

TEST(Ewma, HalfLifeHoldsForRandomLambdas) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.01, 0.9);
  for (int trial = 0; trial < 200; ++trial) {
    const double lambda = u(gen);
    const int n = ewma_half_life(lambda);
    EwmaState s{0.0, 0.0, lambda, 1};
    double err = 1.0;
    for (int rep = 0; rep < 3; ++rep) {
      for (int i = 0; i < n; ++i) s = ewma_update(s, 1.0);
      const double now = std::abs(1.0 - s.mean);
      EXPECT_LE(now, 0.5 * err + 1e-15);
      err = now;
    }
    EXPECT_GE(s.variance, 0.0);
  }
}

TEST(Cusum, OnReferenceNeverAlarms) {
  CusumState s = unit_cusum();
  for (int i = 0; i < 10000; ++i) {
    auto step = cusum_update(s, 0.0);
    ASSERT_FALSE(step.alarm);
    s = step.state;
  }
  EXPECT_EQ(s.g_plus, 0.0);
}

TEST(Cusum, OneSigmaShiftAlarmsAtSampleTen) {
  CusumState s = unit_cusum(0.5, 5.0);
  int alarm_at = 0;
  for (int i = 1; i <= 20 && !alarm_at; ++i) {
    auto step = cusum_update(s, -1.0);
    if (step.alarm) alarm_at = i;
    else EXPECT_DOUBLE_EQ(step.state.g_plus, 0.5 * i);
    s = step.state;
  }
  EXPECT_EQ(alarm_at, 10);
  EXPECT_EQ(s.g_plus, 0.0);
  EXPECT_EQ(s.g_minus, 0.0);
}

TEST(Cusum, UnsetReferenceIsRejected) {
  CusumState s;
  EXPECT_ERROR_CODE(cusum_update(s, 1.0), ErrorCode::ReferenceUnset);
}

TEST(Cusum, UpwardShiftIsReportedButDoesNotAlarm) {
  CusumState s = unit_cusum();
  bool upward = false;
  for (int i = 0; i < 50; ++i) {
    auto step = cusum_update(s, 3.0);
    EXPECT_FALSE(step.alarm);
    upward |= step.upward;
    s = step.state;
  }
  EXPECT_TRUE(upward);
}

TEST(Cusum, FalseAlarmRateAtDefaults) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> n(0.0, 1.0);
  CusumState s = unit_cusum();
  int alarms = 0;
  for (int i = 0; i < 100000; ++i) {
    auto step = cusum_update(s, n(gen));
    alarms += step.alarm;
    s = step.state;
  }
  EXPECT_LE(alarms, 10);  // fewer than 1 per 1e4 samples
}

TEST(Cusum, TwoSigmaShiftDetectedQuickly) {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> n(0.0, 1.0);
  double total = 0;
  const int runs = 2000;
  for (int r = 0; r < runs; ++r) {
    CusumState s = unit_cusum();
    int k = 0;
    for (bool alarm = false; !alarm;) {
      auto step = cusum_update(s, -2.0 + n(gen));
      alarm = step.alarm;
      s = step.state;
      ++k;
    }
    total += k;
  }
  EXPECT_LE(total / runs, 10.0);
}

TEST(MadSigma, MatchesGaussianScale) {
  EXPECT_DOUBLE_EQ(mad_sigma(std::vector<double>{1, 1, 1}), 0.0);
  EXPECT_DOUBLE_EQ(mad_sigma(std::vector<double>{1, 2, 3, 4}), 1.4826);
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n(0.0, 3.0);
  std::vector<double> v(20000);
  for (double& x : v) x = n(gen);
  EXPECT_NEAR(mad_sigma(v), 3.0, 0.1);
}

TEST(Stability, ConstantWindowIsStable) {
  auto v = stability_check(window_of(std::vector<double>(20, 1e-3)), 1e-3);
  EXPECT_EQ(v.verdict, Verdict::Stable);
  EXPECT_EQ(v.window_rsd, 0.0);
  EXPECT_EQ(v.window_len, 20u);
}

TEST(Stability, SingleDeepSampleBreaksTheGate) {
  std::vector<double> p(20, 1e-3);
  p[7] = 1e-3 * std::pow(10.0, -0.2);
  EXPECT_EQ(stability_check(window_of(p), 1e-3).verdict, Verdict::Unstable);
}

TEST(Stability, ShortWindowIsRejected) {
  EXPECT_ERROR_CODE(stability_check(window_of(std::vector<double>(19, 1e-3)), 1e-3), ErrorCode::WindowTooShort);
}

TEST(Stability, NoisyLockedStreamIsStable) {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> n(0.0, 0.01);
  int stable = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p(20);
    for (double& x : p) x = 2.5e-4 * (1.0 + n(gen));
    stable += stability_check(window_of(p), 2.5e-4).verdict == Verdict::Stable;
  }
  EXPECT_GE(stable, 99);
}

TEST(Stability, NeverStableWhileASampleBreaches) {
  std::mt19937_64 gen(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> p(20 + trial % 30);
    for (double& x : p) x = 1.0 - 0.3 * u(gen) * u(gen) * u(gen);
    const bool breach = std::any_of(p.begin(), p.end(), [](double x) { return x < std::pow(10.0, -0.1); });
    if (breach) {
      EXPECT_EQ(stability_check(window_of(p), 1.0).verdict, Verdict::Unstable);
    }
  }
}

TEST(Realign, RuleTable) {
  const double thr = 1e-8;
  EXPECT_EQ(realign_decision(false, 2e-4, thr), RealignAction::None);
  EXPECT_EQ(realign_decision(true, 2.5e-4 * std::pow(10.0, -0.15), thr), RealignAction::FineRealign);
  EXPECT_EQ(realign_decision(true, 1e-9, thr), RealignAction::FullRecouple);
}

TEST(Monitor, LearnsSigmaThenDetectsDrop) {
  Monitor m;
  m.lock(1.0, 1e-6);
  std::mt19937_64 gen(2);
  std::normal_distribution<double> n(0.0, 0.01);
  double t = 0;
  for (int i = 0; i < 100; ++i) EXPECT_FALSE(m.push({t += 0.1, 1.0 + n(gen)}));
  ASSERT_TRUE(m.sigma_rel());
  EXPECT_NEAR(*m.sigma_rel(), 0.01, 0.003);
  for (int i = 0; i < 1000; ++i) m.push({t += 0.1, 1.0 + n(gen)});
  int k = 0;
  std::optional<Alarm> a;
  while (!a && k < 50) {
    a = m.push({t += 0.1, 0.97 + n(gen)});
    ++k;
  }
  ASSERT_TRUE(a);
  EXPECT_LE(k, 10);
  EXPECT_EQ(a->action, RealignAction::FineRealign);
  m.lock(0.5, 1e-6);
  EXPECT_DOUBLE_EQ(m.cusum().sigma, 0.5 * *m.sigma_rel());
}

TEST(Monitor, DecimatesLogging) {
  Monitor m;
  int logged = 0;
  for (int i = 0; i < 100; ++i) {
    m.push({0.1 * i, 1.0});
    logged += m.should_log();
  }
  EXPECT_EQ(logged, 10);
}

TEST(MonitorConfig, RejectsBadValues) {
  EXPECT_EQ(MonitorConfig::from_json(nlohmann::json::object()).cusum_h, 8.0);
  EXPECT_ERROR_CODE(MonitorConfig::from_json({{"ewma_lambda", 0.0}}), ErrorCode::MalformedConfig);
  EXPECT_ERROR_CODE(MonitorConfig::from_json({{"cusum_h", "x"}}), ErrorCode::MalformedConfig);
}

}  // namespace
}  // namespace atomics::monitor
