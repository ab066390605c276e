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

#include "atomics/campaign/persist.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "atomics/core/error.hpp"

namespace atomics::campaign {

static_assert(std::endian::native == std::endian::little, "dataset encoding assumes a little-endian host");

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::DaqFault, "sha256 failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return out.str();
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, path.string() + ": cannot open");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

void write_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::DaqFault, tmp.string() + ": write failed");
  }
  std::filesystem::rename(tmp, path);
}

void write_atomic(const std::filesystem::path& path, const std::string& text) {
  write_atomic(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<std::uint8_t> encode_columns(const hal::DaqTrace& trace) {
  const std::size_t rows = trace.rows();
  std::vector<std::uint8_t> out(trace.data.size() * rows * sizeof(double));
  std::size_t at = 0;
  for (const auto& col : trace.data) {
    if (col.size() != rows) throw Error(ErrorCode::DaqFault, "ragged trace columns");
    std::memcpy(out.data() + at, col.data(), rows * sizeof(double));
    at += rows * sizeof(double);
  }
  return out;
}

hal::DaqTrace decode_columns(const std::vector<std::uint8_t>& bytes, const std::vector<std::string>& columns) {
  hal::DaqTrace t;
  t.columns = columns;
  if (columns.empty()) return t;
  const std::size_t per = bytes.size() / columns.size();
  if (per * columns.size() != bytes.size() || per % sizeof(double) != 0)
    throw Error(ErrorCode::ValidationError, "dataset size does not match its columns");
  const std::size_t rows = per / sizeof(double);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    std::vector<double> col(rows);
    std::memcpy(col.data(), bytes.data() + c * per, per);
    t.data.push_back(std::move(col));
  }
  return t;
}

Writer::Writer() : thread_([this] { loop(); }) {}

Writer::~Writer() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  cv_.notify_all();
  thread_.join();
}

std::future<void> Writer::submit(std::function<void()> job) {
  std::packaged_task<void()> task(std::move(job));
  auto f = task.get_future();
  {
    std::lock_guard lock(mutex_);
    jobs_.push_back(std::move(task));
  }
  cv_.notify_one();
  return f;
}

void Writer::drain() { submit([] {}).get(); }

void Writer::loop() {
  for (;;) {
    std::packaged_task<void()> job;
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [&] { return stop_ || !jobs_.empty(); });
      if (jobs_.empty()) return;
      job = std::move(jobs_.front());
      jobs_.pop_front();
    }
    job();
  }
}

}  // namespace atomics::campaign
