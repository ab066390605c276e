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

#include <atomic>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "atomics/service/lease.hpp"
#include "atomics/service/service.hpp"

namespace atomics::service {

/// Listener settings; `from_env` reads ATOMICS_BIND, ATOMICS_PORT and
/// ATOMICS_OPERATOR_SECRET.
struct HttpOptions {
  std::string bind = "127.0.0.1";
  std::uint16_t port = 8080;  // 0 picks a free port
  std::string operator_secret;
  double lease_ttl = 30.0;

  static HttpOptions from_env();
};

/// HTTP and WebSocket front end of a Service:
///
///     POST /command[?dry_run=1]     CommandEnvelope → 202 Accepted | 409 Rejected | 403 no lease
///     GET  /state                   snapshot
///     GET  /frame?annotated=0|1     image/png; X-Detections header carries the sidecar
///     WS   /telemetry?kinds=a,b     {"kind", "sequence", "payload"} messages
///     GET  /runs/<id>/report        report.json
///     POST /lease                   {"client"} acquire, {"token"} renew, {"token", "release": true}
///
/// Mutating commands need `Authorization: Bearer <token>` from the
/// operator lease; Abort and dry runs do not. One thread per connection.
class HttpServer {
 public:
  HttpServer(Service& service, HttpOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  void start();
  void stop();
  std::uint16_t port() const { return port_; }
  OperatorLease& lease() { return lease_; }

 private:
  struct Impl;
  Service& service_;
  HttpOptions options_;
  OperatorLease lease_;
  std::uint16_t port_ = 0;
  std::unique_ptr<Impl> impl_;
};

}  // namespace atomics::service
