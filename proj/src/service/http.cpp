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

#include "atomics/service/http.hpp"

#include <sys/socket.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "atomics/core/error.hpp"

namespace atomics::service {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

HttpOptions HttpOptions::from_env() {
  HttpOptions o;
  if (const char* v = std::getenv("ATOMICS_BIND"); v && *v) o.bind = v;
  if (const char* v = std::getenv("ATOMICS_PORT"); v && *v) {
    char* end = nullptr;
    const long port = std::strtol(v, &end, 10);
    if (*end != '\0' || port < 0 || port > 65535)
      throw Error(ErrorCode::MalformedConfig, std::string("ATOMICS_PORT: not a port number: ") + v);
    o.port = static_cast<std::uint16_t>(port);
  }
  if (const char* v = std::getenv("ATOMICS_OPERATOR_SECRET")) o.operator_secret = v;
  return o;
}

namespace {

struct Target {
  std::string path;
  std::map<std::string, std::string> query;
};

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string url_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size() && hex_value(s[i + 1]) >= 0 && hex_value(s[i + 2]) >= 0) {
      out += static_cast<char>(hex_value(s[i + 1]) * 16 + hex_value(s[i + 2]));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

Target parse_target(std::string_view t) {
  Target out;
  const auto q = t.find('?');
  out.path = url_decode(t.substr(0, q));
  if (q == std::string_view::npos) return out;
  std::string_view rest = t.substr(q + 1);
  while (!rest.empty()) {
    const auto amp = rest.find('&');
    const std::string_view kv = rest.substr(0, amp);
    const auto eq = kv.find('=');
    out.query[url_decode(kv.substr(0, eq))] = eq == std::string_view::npos ? "" : url_decode(kv.substr(eq + 1));
    if (amp == std::string_view::npos) break;
    rest.remove_prefix(amp + 1);
  }
  return out;
}

bool truthy(const std::map<std::string, std::string>& q, const std::string& key) {
  auto it = q.find(key);
  return it != q.end() && (it->second == "1" || it->second == "true" || it->second.empty());
}

Response json_response(const Request& req, http::status status, const json& body) {
  Response res{status, req.version()};
  res.set(http::field::content_type, "application/json");
  res.keep_alive(req.keep_alive());
  res.body() = body.dump();
  res.prepare_payload();
  return res;
}

Response error_response(const Request& req, http::status status, ErrorCode code, const std::string& message) {
  return json_response(req, status, {{"error", std::string(to_string(code))}, {"message", message}});
}

std::string bearer(const Request& req) {
  const auto it = req.find(http::field::authorization);
  if (it == req.end()) return {};
  const std::string_view v(it->value().data(), it->value().size());
  constexpr std::string_view kPrefix = "Bearer ";
  if (v.substr(0, kPrefix.size()) != kPrefix) return {};
  return std::string(v.substr(kPrefix.size()));
}

}  // namespace

struct HttpServer::Impl {
  struct Session {
    std::thread thread;
    int fd = -1;
    std::atomic<bool> done{false};
  };

  HttpServer& owner;
  asio::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::thread accept_thread;
  std::atomic<bool> stopping{false};
  std::mutex sessions_mutex;
  std::list<Session> sessions;

  explicit Impl(HttpServer& o) : owner(o) {}

  void accept_loop() {
    while (!stopping) {
      tcp::socket socket(ioc);
      beast::error_code ec;
      acceptor.accept(socket, ec);
      if (ec) {
        if (stopping) return;
        continue;
      }
      std::lock_guard lock(sessions_mutex);
      reap();
      Session& s = sessions.emplace_back();
      s.fd = socket.native_handle();
      s.thread = std::thread([this, &s, sock = std::move(socket)]() mutable {
        serve(std::move(sock));
        s.done = true;
      });
    }
  }

  // Caller holds sessions_mutex.
  void reap() {
    for (auto it = sessions.begin(); it != sessions.end();) {
      if (it->done) {
        it->thread.join();
        it = sessions.erase(it);
      } else {
        ++it;
      }
    }
  }

  void stop() {
    stopping = true;
    beast::error_code ec;
    ::shutdown(acceptor.native_handle(), SHUT_RDWR);
    if (accept_thread.joinable()) accept_thread.join();
    acceptor.close(ec);
    std::lock_guard lock(sessions_mutex);
    for (Session& s : sessions)
      if (!s.done) ::shutdown(s.fd, SHUT_RDWR);
    for (Session& s : sessions) s.thread.join();
    sessions.clear();
  }

  void serve(tcp::socket socket) {
    beast::flat_buffer buffer;
    beast::error_code ec;
    while (!stopping) {
      Request req;
      http::read(socket, buffer, req, ec);
      if (ec) return;
      const Target target = parse_target(std::string_view(req.target().data(), req.target().size()));
      if (websocket::is_upgrade(req)) {
        if (target.path != "/telemetry") {
          http::write(socket, error_response(req, http::status::not_found, ErrorCode::NotFound, "no such stream"), ec);
          return;
        }
        std::set<TelemetryKind> kinds;
        try {
          kinds = parse_kinds(target.query.count("kinds") ? target.query.at("kinds") : "");
        } catch (const Error& e) {
          http::write(socket, error_response(req, http::status::bad_request, e.code(), e.what()), ec);
          return;
        }
        stream(std::move(socket), req, kinds);
        return;
      }
      Response res = handle(req, target);
      http::write(socket, res, ec);
      if (ec || !res.keep_alive()) break;
    }
    socket.shutdown(tcp::socket::shutdown_both, ec);
  }

  void stream(tcp::socket socket, const Request& req, const std::set<TelemetryKind>& kinds) {
    websocket::stream<tcp::socket> ws(std::move(socket));
    beast::error_code ec;
    auto sub = owner.service_.subscribe(kinds);
    ws.accept(req, ec);
    if (ec) return;
    ws.text(true);
    while (!stopping) {
      // Client frames are read only to answer pings and a close.
      if (ws.next_layer().available(ec) > 0 && !ec) {
        beast::flat_buffer in;
        ws.read(in, ec);
        if (ec) return;
      }
      if (auto d = sub->pop(std::chrono::milliseconds(100))) {
        ws.write(asio::buffer(to_json(*d).dump()), ec);
        if (ec) return;
        continue;
      }
      if (sub->overflowed()) {
        ws.write(asio::buffer(json{{"error", "SubscriberOverflow"},
                                   {"message", "subscriber fell more than 256 events behind"}}
                                  .dump()),
                 ec);
        ws.close(websocket::close_reason(websocket::close_code::policy_error, "SubscriberOverflow"), ec);
        return;
      }
      if (!owner.service_.running()) break;
    }
    ws.close(websocket::close_code::going_away, ec);
  }

  Response handle(const Request& req, const Target& t) {
    try {
      if (t.path == "/state" && req.method() == http::verb::get)
        return json_response(req, http::status::ok, owner.service_.state());
      if (t.path == "/command" && req.method() == http::verb::post) return command(req, t);
      if (t.path == "/frame" && req.method() == http::verb::get) return frame(req, t);
      if (t.path == "/lease" && req.method() == http::verb::post) return lease(req);
      if (t.path.rfind("/runs/", 0) == 0 && req.method() == http::verb::get) return report(req, t);
      return error_response(req, http::status::not_found, ErrorCode::NotFound, "no endpoint " + t.path);
    } catch (const Error& e) {
      const http::status s = e.code() == ErrorCode::EngineDown   ? http::status::service_unavailable
                             : e.code() == ErrorCode::NotFound   ? http::status::not_found
                             : e.code() == ErrorCode::NoFrameYet ? http::status::not_found
                                                                 : http::status::bad_request;
      return error_response(req, s, e.code(), e.what());
    } catch (const json::exception& e) {
      return error_response(req, http::status::bad_request, ErrorCode::ValidationError, e.what());
    }
  }

  Response command(const Request& req, const Target& t) {
    const CommandEnvelope c = CommandEnvelope::from_json(json::parse(req.body()));
    const bool dry = truthy(t.query, "dry_run");
    if (!dry && c.verb != align::Verb::Abort && !owner.lease_.authorized(bearer(req))) {
      SubmitResult r;
      r.id = c.id;
      r.state = owner.service_.coupling_state();
      r.reason = "operator lease required";
      return json_response(req, http::status::forbidden, r.to_json());
    }
    const SubmitResult r = owner.service_.submit(c, dry);
    return json_response(req, r.accepted ? (dry ? http::status::ok : http::status::accepted) : http::status::conflict,
                         r.to_json());
  }

  Response frame(const Request& req, const Target& t) {
    const EncodedFrame f = owner.service_.frame(truthy(t.query, "annotated"));
    Response res{http::status::ok, req.version()};
    res.set(http::field::content_type, "image/png");
    res.set("X-Frame-Width", std::to_string(f.width));
    res.set("X-Frame-Height", std::to_string(f.height));
    res.set("X-Exposure-Id", std::to_string(f.exposure_id));
    if (f.detections) res.set("X-Detections", to_json(*f.detections).dump());
    res.keep_alive(req.keep_alive());
    res.body().assign(f.png.begin(), f.png.end());
    res.prepare_payload();
    return res;
  }

  Response lease(const Request& req) {
    const json body = req.body().empty() ? json::object() : json::parse(req.body());
    if (!body.is_object()) throw Error(ErrorCode::ValidationError, "lease request must be an object");
    OperatorLease& l = owner.lease_;
    OperatorLease::Grant g;
    if (body.contains("token")) {
      const std::string token = body["token"].get<std::string>();
      if (body.value("release", false)) {
        const bool ok = l.release(token);
        return json_response(req, ok ? http::status::ok : http::status::conflict, {{"released", ok}});
      }
      g = l.renew(token);
    } else {
      if (!body.contains("client") || !body["client"].is_string())
        throw Error(ErrorCode::ValidationError, "client: string required");
      g = l.acquire(body["client"].get<std::string>());
    }
    json out{{"granted", g.granted}, {"holder", g.holder}, {"expires_in", g.expires_in}};
    if (g.granted) out["token"] = g.token;
    return json_response(req, g.granted ? http::status::ok : http::status::conflict, out);
  }

  Response report(const Request& req, const Target& t) {
    // /runs/<id>/report
    const std::string rest = t.path.substr(6);
    const auto slash = rest.find('/');
    if (slash == std::string::npos || rest.substr(slash) != "/report")
      return error_response(req, http::status::not_found, ErrorCode::NotFound, "no endpoint " + t.path);
    const std::filesystem::path p = owner.service_.report_path(rest.substr(0, slash));
    std::ifstream in(p, std::ios::binary);
    std::ostringstream body;
    body << in.rdbuf();
    Response res{http::status::ok, req.version()};
    res.set(http::field::content_type, "application/json");
    res.keep_alive(req.keep_alive());
    res.body() = body.str();
    res.prepare_payload();
    return res;
  }
};

HttpServer::HttpServer(Service& service, HttpOptions options)
    : service_(service), options_(std::move(options)), lease_(options_.operator_secret, options_.lease_ttl) {}

HttpServer::~HttpServer() { stop(); }

void HttpServer::start() {
  if (impl_) return;
  auto impl = std::make_unique<Impl>(*this);
  beast::error_code ec;
  const auto address = asio::ip::make_address(options_.bind, ec);
  if (ec) throw Error(ErrorCode::MalformedConfig, "bind address '" + options_.bind + "': " + ec.message());
  const tcp::endpoint ep{address, options_.port};
  impl->acceptor.open(ep.protocol(), ec);
  if (!ec) impl->acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) impl->acceptor.bind(ep, ec);
  if (!ec) impl->acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) throw Error(ErrorCode::DriverFault, "cannot listen on " + options_.bind + ":" + std::to_string(options_.port) + ": " + ec.message());
  port_ = impl->acceptor.local_endpoint().port();
  Impl* raw = impl.get();
  impl->accept_thread = std::thread([raw] { raw->accept_loop(); });
  impl_ = std::move(impl);
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->stop();
  impl_.reset();
}

}  // namespace atomics::service
