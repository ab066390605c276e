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

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "atomics/hal/drivers.hpp"

namespace atomics::campaign {

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::vector<std::uint8_t>& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Writes `bytes` to a temporary sibling and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_atomic(const std::filesystem::path& path, const std::string& text);

/// Column after column of little-endian float64, `rows` values each.
std::vector<std::uint8_t> encode_columns(const hal::DaqTrace& trace);
hal::DaqTrace decode_columns(const std::vector<std::uint8_t>& bytes, const std::vector<std::string>& columns);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// Runs file writes on one background thread in submission order.
class Writer {
 public:
  Writer();
  ~Writer();
  Writer(const Writer&) = delete;
  Writer& operator=(const Writer&) = delete;

  std::future<void> submit(std::function<void()> job);
  /// Blocks until every job submitted so far has run.
  void drain();

 private:
  void loop();

  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::packaged_task<void()>> jobs_;
  bool stop_ = false;
  std::thread thread_;
};

}  // namespace atomics::campaign
