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

#include <stdexcept>
#include <string>
#include <string_view>

namespace atomics {

enum class ErrorCode {
  // hal
  LimitViolation,
  AxisBusy,
  DriverFault,
  WrongRoute,
  OutOfRange,
  CampaignActive,
  UnknownDriver,
  RegistryIncomplete,
  MalformedConfig,
  // simbench
  CameraOutOfScene,
  // vision
  TemplateTooLarge,
  Degenerate,
  IllConditioned,
  Uncalibrated,
  // align
  DetectionLost,
  CalibrationStale,
  KeepoutViolation,
  MeterFault,
  Diverged,
  FlatResponse,
  IllegalTransition,
  Aborted,
  NotFound,
  // monitor
  ReferenceUnset,
  WindowTooShort,
  // campaign
  ParseError,
  ValidationError,
  NotLocked,
  DaqFault,
  IllegalInState,
  // service
  EngineDown,
  SubscriberOverflow,
  NoFrameYet,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::LimitViolation: return "LimitViolation";
    case ErrorCode::AxisBusy: return "AxisBusy";
    case ErrorCode::DriverFault: return "DriverFault";
    case ErrorCode::WrongRoute: return "WrongRoute";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::CampaignActive: return "CampaignActive";
    case ErrorCode::UnknownDriver: return "UnknownDriver";
    case ErrorCode::RegistryIncomplete: return "RegistryIncomplete";
    case ErrorCode::MalformedConfig: return "MalformedConfig";
    case ErrorCode::CameraOutOfScene: return "CameraOutOfScene";
    case ErrorCode::TemplateTooLarge: return "TemplateTooLarge";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::Uncalibrated: return "Uncalibrated";
    case ErrorCode::DetectionLost: return "DetectionLost";
    case ErrorCode::CalibrationStale: return "CalibrationStale";
    case ErrorCode::KeepoutViolation: return "KeepoutViolation";
    case ErrorCode::MeterFault: return "MeterFault";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::FlatResponse: return "FlatResponse";
    case ErrorCode::IllegalTransition: return "IllegalTransition";
    case ErrorCode::Aborted: return "Aborted";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::ReferenceUnset: return "ReferenceUnset";
    case ErrorCode::WindowTooShort: return "WindowTooShort";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::NotLocked: return "NotLocked";
    case ErrorCode::DaqFault: return "DaqFault";
    case ErrorCode::IllegalInState: return "IllegalInState";
    case ErrorCode::EngineDown: return "EngineDown";
    case ErrorCode::SubscriberOverflow: return "SubscriberOverflow";
    case ErrorCode::NoFrameYet: return "NoFrameYet";
  }
  return "Unknown";
}

/// Every failure surfaced by the engine carries one of the codes above; the
/// message is free text for logs.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace atomics
