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

#include "atomics/service/lease.hpp"

#include <chrono>
#include <cstdio>

#include <openssl/crypto.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>

#include "atomics/core/error.hpp"

namespace atomics::service {

namespace {

std::string hex(const unsigned char* p, std::size_t n) {
  std::string s(2 * n, '0');
  for (std::size_t i = 0; i < n; ++i) std::snprintf(&s[2 * i], 3, "%02x", p[i]);
  return s;
}

std::string random_bytes(std::size_t n) {
  std::string s(n, '\0');
  if (RAND_bytes(reinterpret_cast<unsigned char*>(s.data()), static_cast<int>(n)) != 1)
    throw Error(ErrorCode::DriverFault, "no entropy for the operator lease");
  return s;
}

double steady_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

bool same(const std::string& a, const std::string& b) {
  return a.size() == b.size() && CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace

OperatorLease::OperatorLease(std::string secret, double ttl, Clock clock)
    : secret_(secret.empty() ? random_bytes(32) : std::move(secret)),
      ttl_(ttl),
      clock_(clock ? std::move(clock) : Clock(steady_seconds)) {}

bool OperatorLease::live() const { return !token_.empty() && clock_() < expires_; }

std::string OperatorLease::mint(const std::string& client) {
  const std::string nonce = random_bytes(16);
  const std::string msg = client + '\n' + nonce;
  unsigned char mac[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  HMAC(EVP_sha256(), secret_.data(), static_cast<int>(secret_.size()),
       reinterpret_cast<const unsigned char*>(msg.data()), msg.size(), mac, &len);
  return hex(mac, len);
}

OperatorLease::Grant OperatorLease::acquire(const std::string& client) {
  std::lock_guard lock(mutex_);
  if (live() && holder_ != client) return {false, {}, holder_, expires_ - clock_()};
  if (!live() || holder_ != client) {
    token_ = mint(client);
    holder_ = client;
  }
  expires_ = clock_() + ttl_;
  return {true, token_, holder_, ttl_};
}

OperatorLease::Grant OperatorLease::renew(const std::string& token) {
  std::lock_guard lock(mutex_);
  if (!live() || !same(token, token_)) return {false, {}, live() ? holder_ : std::string(), 0.0};
  expires_ = clock_() + ttl_;
  return {true, token_, holder_, ttl_};
}

bool OperatorLease::release(const std::string& token) {
  std::lock_guard lock(mutex_);
  if (!live() || !same(token, token_)) return false;
  token_.clear();
  holder_.clear();
  return true;
}

bool OperatorLease::authorized(const std::string& token) const {
  std::lock_guard lock(mutex_);
  return live() && same(token, token_);
}

std::optional<std::string> OperatorLease::holder() const {
  std::lock_guard lock(mutex_);
  if (!live()) return std::nullopt;
  return holder_;
}

}  // namespace atomics::service
