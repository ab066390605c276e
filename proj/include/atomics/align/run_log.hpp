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

#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <vector>

#include <nlohmann/json.hpp>

namespace atomics::align {

/// Append-only JSON Lines log. Entries go to the file (if one is open) and
/// to every listener.
class RunLog {
 public:
  RunLog() = default;
  explicit RunLog(const std::filesystem::path& path);

  void open(const std::filesystem::path& path);
  void append(const nlohmann::json& entry);
  void add_listener(std::function<void(const nlohmann::json&)> listener);
  /// Keeps every entry in memory as well (tests and replay checks).
  void set_retain(bool retain) { retain_ = retain; }
  const std::vector<nlohmann::json>& retained() const { return retained_; }

 private:
  std::mutex mutex_;
  std::ofstream out_;
  bool retain_ = false;
  std::vector<nlohmann::json> retained_;
  std::vector<std::function<void(const nlohmann::json&)>> listeners_;
};

/// Reads a JSON Lines file back. Throws ParseError with the line number.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

}  // namespace atomics::align
