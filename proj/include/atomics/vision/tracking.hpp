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

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "atomics/vision/detection.hpp"

namespace atomics::vision {

struct Track {
  int id = 0;
  Vec2 centroid;
  std::uint64_t last_seen = 0;  // exposure id
  int misses = 0;
};

/// At most one track per class. A detection outside the gate does not steal
/// the track; it is held as a candidate that takes over once the track has
/// missed `max_misses` frames.
struct TrackState {
  std::map<DetectionClass, Track> tracks;
  std::map<DetectionClass, Detection> candidates;
  double gate_px = 20.0;
  int max_misses = 5;
  double open_score = 0.6;
  int next_id = 1;
};

struct TrackUpdate {
  TrackState state;
  std::map<DetectionClass, Detection> assigned;  // per class, this frame
};

TrackUpdate track(TrackState state, const std::vector<Detection>& detections, std::uint64_t exposure_id);

}  // namespace atomics::vision
