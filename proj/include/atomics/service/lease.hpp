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

#include <functional>
#include <mutex>
#include <optional>
#include <string>

namespace atomics::service {

/// The single operator role. A client acquires a token and must renew it
/// within `ttl` seconds; an expired lease is free for anyone. Tokens are
/// HMAC-SHA256 of a random nonce under the operator secret.
class OperatorLease {
 public:
  using Clock = std::function<double()>;  // seconds, monotonic

  struct Grant {
    bool granted = false;
    std::string token;
    std::string holder;
    double expires_in = 0.0;
  };

  /// An empty secret is replaced by a random one.
  explicit OperatorLease(std::string secret, double ttl = 30.0, Clock clock = {});

  /// Grants when the role is free, expired or already held by `client`.
  Grant acquire(const std::string& client);
  /// Heartbeat; fails once the token has expired or been superseded.
  Grant renew(const std::string& token);
  bool release(const std::string& token);
  bool authorized(const std::string& token) const;
  std::optional<std::string> holder() const;
  double ttl() const { return ttl_; }

 private:
  bool live() const;
  std::string mint(const std::string& client);

  std::string secret_;
  double ttl_;
  Clock clock_;
  mutable std::mutex mutex_;
  std::string token_;
  std::string holder_;
  double expires_ = 0.0;
};

}  // namespace atomics::service
