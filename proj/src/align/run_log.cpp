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

#include "atomics/align/run_log.hpp"

#include <string>

#include "atomics/core/error.hpp"

namespace atomics::align {

RunLog::RunLog(const std::filesystem::path& path) { open(path); }

void RunLog::open(const std::filesystem::path& path) {
  std::lock_guard lock(mutex_);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.close();
  out_.open(path, std::ios::app);
  if (!out_) throw Error(ErrorCode::MalformedConfig, "cannot open run log " + path.string());
}

void RunLog::append(const nlohmann::json& entry) {
  std::vector<std::function<void(const nlohmann::json&)>> listeners;
  {
    std::lock_guard lock(mutex_);
    if (out_.is_open()) out_ << entry.dump() << '\n' << std::flush;
    if (retain_) retained_.push_back(entry);
    listeners = listeners_;
  }
  for (auto& l : listeners) l(entry);
}

void RunLog::add_listener(std::function<void(const nlohmann::json&)> listener) {
  std::lock_guard lock(mutex_);
  listeners_.push_back(std::move(listener));
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::vector<nlohmann::json> out;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace atomics::align
