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

#include "atomics/vision/tracking.hpp"

#include <limits>

namespace atomics::vision {

TrackUpdate track(TrackState state, const std::vector<Detection>& detections, std::uint64_t exposure_id) {
  TrackUpdate out;
  for (DetectionClass cls : kAllClasses) {
    std::vector<const Detection*> mine;
    for (const Detection& d : detections)
      if (d.cls == cls) mine.push_back(&d);

    auto it = state.tracks.find(cls);
    if (it == state.tracks.end()) {
      // Open on the best-scoring detection (input is score-sorted).
      const Detection* best = nullptr;
      for (const Detection* d : mine)
        if (d->score >= state.open_score && (!best || d->score > best->score)) best = d;
      if (best) {
        state.tracks[cls] = Track{state.next_id++, best->centroid, exposure_id, 0};
        state.candidates.erase(cls);
        out.assigned[cls] = *best;
      }
      continue;
    }

    Track& t = it->second;
    const Detection* nearest = nullptr;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const Detection* d : mine) {
      const double dist = (d->centroid - t.centroid).norm();
      if (dist <= state.gate_px && dist < best_dist) {
        best_dist = dist;
        nearest = d;
      }
    }
    if (nearest) {
      t.centroid = nearest->centroid;
      t.last_seen = exposure_id;
      t.misses = 0;
      state.candidates.erase(cls);
      out.assigned[cls] = *nearest;
      continue;
    }

    ++t.misses;
    for (const Detection* d : mine)
      if (d->score >= state.open_score) {
        auto c = state.candidates.find(cls);
        if (c == state.candidates.end() || d->score > c->second.score) state.candidates[cls] = *d;
      }
    if (t.misses > state.max_misses) {
      state.tracks.erase(it);
      auto c = state.candidates.find(cls);
      if (c != state.candidates.end()) {
        state.tracks[cls] = Track{state.next_id++, c->second.centroid, exposure_id, 0};
        state.candidates.erase(c);
      }
    }
  }
  out.state = std::move(state);
  return out;
}

}  // namespace atomics::vision
