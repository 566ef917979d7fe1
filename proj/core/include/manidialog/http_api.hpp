#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "manidialog/session.hpp"

namespace manidialog {

struct HttpResponse {
  int status = 200;
  std::string body;  // JSON
};

/// Routes one request against `sessions`:
///   GET /scenarios, POST /sessions, GET /sessions/{id},
///   POST /sessions/{id}/message, DELETE /sessions/{id}, GET /healthz.
/// Errors are {"error": code, "detail": text}.
HttpResponse route_request(SessionManager& sessions, std::string_view method, std::string_view path,
                           std::string_view body);

/// "host:port" -> parts; MANIDIALOG_ADDR overrides the configured value.
struct BindAddress {
  std::string host = "127.0.0.1";
  int port = 8080;
};
BindAddress parse_bind_address(std::string_view text);
BindAddress bind_address_from_environment(BindAddress configured);

/// Blocking HTTP server around route_request.
class HttpServer {
 public:
  explicit HttpServer(SessionManager& sessions);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port or throws IoError.
  int bind(const BindAddress& address);
  /// Serves until stop(). Requires a prior bind().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace manidialog
