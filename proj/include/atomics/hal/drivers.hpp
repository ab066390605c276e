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

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "atomics/core/types.hpp"
#include "atomics/hal/axis.hpp"

namespace atomics::hal {

// Driver interfaces. Implementations are invoked from the command loop only
// and report failures by throwing Error(DriverFault).

/// Time source for the command loop. Simulated benches hand out an
/// accelerable clock; hardware uses wall time.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() const = 0;
  /// Lets `dt` seconds pass (sleeping or advancing simulated time).
  virtual void wait(double dt) = 0;
};

class StageDriver {
 public:
  virtual ~StageDriver() = default;
  virtual void begin_move(AxisId axis, double target) = 0;
  virtual void wait_settled(AxisId axis) = 0;
  /// Encoder readout where the axis has one (microscope); nullopt for
  /// open-loop piezo axes.
  virtual std::optional<double> read_encoder(AxisId axis) = 0;
};

class GoniometerDriver {
 public:
  virtual ~GoniometerDriver() = default;
  virtual void begin_move(double degrees) = 0;
  virtual void wait_settled() = 0;
  virtual double read_angle() = 0;
};

class PowerMeterDriver {
 public:
  virtual ~PowerMeterDriver() = default;
  virtual double read_watts() = 0;
};

class SwitchDriver {
 public:
  virtual ~SwitchDriver() = default;
  virtual void set_route(SwitchRoute route) = 0;
};

class PolarizationDriver {
 public:
  virtual ~PolarizationDriver() = default;
  virtual void set_paddles(const std::array<double, 3>& degrees) = 0;
};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

class CameraDriver {
 public:
  virtual ~CameraDriver() = default;
  virtual Image capture() = 0;
};

class TempControllerDriver {
 public:
  virtual ~TempControllerDriver() = default;
  virtual void set_setpoint(double kelvin) = 0;
  virtual double read_kelvin() = 0;
};

enum class DaqKind { Oscilloscope, FrequencyCounter, SpectrumAnalyzer, GenericDaq };

std::string_view to_string(DaqKind k);
std::optional<DaqKind> parse_daq_kind(std::string_view s);

struct DaqRequest {
  DaqKind kind = DaqKind::GenericDaq;
  double duration = 1.0;  // seconds
  std::map<std::string, double> parameters;
};

/// Columnar trace; every column has the same length.
struct DaqTrace {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;
  double sample_rate = 0.0;

  std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }
};

class DaqDriver {
 public:
  virtual ~DaqDriver() = default;
  /// DC level of the optical detector, calibrated to watts. This is the only
  /// power reading available while the switch routes light to the DAQ.
  virtual double read_monitor_watts() = 0;
  virtual DaqTrace acquire(const DaqRequest& request) = 0;
};

}  // namespace atomics::hal
