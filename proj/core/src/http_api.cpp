#include "manidialog/http_api.hpp"

#include <cstdlib>

#include <httplib.h>

#include "manidialog/error.hpp"

namespace manidialog {

using nlohmann::json;

namespace {

HttpResponse reply(int status, const json& body) { return {status, body.dump()}; }

HttpResponse error_reply(int status, std::string_view code, std::string_view detail) {
  return reply(status, {{"error", code}, {"detail", detail}});
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::SessionNotFound: return 404;
    case ErrorCode::UnknownScenario:
    case ErrorCode::UnknownBackend:
    case ErrorCode::ParseError:
    case ErrorCode::PreconditionFailed: return 400;
    case ErrorCode::BackendUnavailable:
    case ErrorCode::TransportError: return 503;
    default: return 500;
  }
}

std::vector<std::string_view> split_path(std::string_view path) {
  if (auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
  std::vector<std::string_view> parts;
  while (!path.empty()) {
    while (!path.empty() && path.front() == '/') path.remove_prefix(1);
    const auto slash = path.find('/');
    auto part = path.substr(0, slash);
    if (!part.empty()) parts.push_back(part);
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash);
  }
  return parts;
}

json parse_body(std::string_view body) {
  try {
    json j = json::parse(body.empty() ? std::string_view("{}") : body);
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("request body: ") + e.what());
  }
}

std::string required_string(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw Error(ErrorCode::ParseError, std::string("field '") + key + "' must be a string");
  }
  return j.at(key).get<std::string>();
}

}  // namespace

HttpResponse route_request(SessionManager& sessions, std::string_view method, std::string_view path,
                           std::string_view body) {
  const auto parts = split_path(path);
  try {
    if (parts.size() == 1 && parts[0] == "healthz") {
      if (method != "GET") return error_reply(405, "MethodNotAllowed", "use GET");
      return reply(200, {{"status", "ok"}, {"sessions", sessions.session_count()}});
    }
    if (parts.size() == 1 && parts[0] == "scenarios") {
      if (method != "GET") return error_reply(405, "MethodNotAllowed", "use GET");
      json list = json::array();
      for (const auto& s : sessions.scenarios().scenes()) list.push_back(to_json(s));
      return reply(200, {{"scenarios", list}, {"backends", sessions.backend_names()}});
    }
    if (parts.size() == 1 && parts[0] == "sessions") {
      if (method != "POST") return error_reply(405, "MethodNotAllowed", "use POST");
      const json req = parse_body(body);
      const std::string scenario = required_string(req, "scenario_id");
      const std::string backend = req.contains("backend") ? required_string(req, "backend") : "oracle";
      const std::string id = sessions.create_session(scenario, backend);
      json out = to_json(sessions.get_state(id));
      out.erase("events");
      return reply(201, out);
    }
    if (parts.size() == 2 && parts[0] == "sessions") {
      if (method == "GET") return reply(200, to_json(sessions.get_state(parts[1])));
      if (method == "DELETE") {
        if (!sessions.delete_session(parts[1])) {
          return error_reply(404, "SessionNotFound", "no session '" + std::string(parts[1]) + "'");
        }
        return reply(200, {{"deleted", parts[1]}});
      }
      return error_reply(405, "MethodNotAllowed", "use GET or DELETE");
    }
    if (parts.size() == 3 && parts[0] == "sessions" && parts[2] == "message") {
      if (method != "POST") return error_reply(405, "MethodNotAllowed", "use POST");
      const json req = parse_body(body);
      return reply(200, to_json(sessions.handle_message(parts[1], required_string(req, "text"))));
    }
    return error_reply(404, "NotFound", "no route for " + std::string(method) + " " + std::string(path));
  } catch (const Error& e) {
    return error_reply(status_for(e.code()), to_string(e.code()), e.detail());
  } catch (const std::exception& e) {
    return error_reply(500, "InternalError", e.what());
  }
}

BindAddress parse_bind_address(std::string_view text) {
  BindAddress out;
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos) throw Error(ErrorCode::ConfigError, "address must be host:port");
  out.host = std::string(text.substr(0, colon));
  const std::string port(text.substr(colon + 1));
  char* end = nullptr;
  const long p = std::strtol(port.c_str(), &end, 10);
  if (port.empty() || *end != '\0' || p < 0 || p > 65535) {
    throw Error(ErrorCode::ConfigError, "invalid port in address '" + std::string(text) + "'");
  }
  out.port = static_cast<int>(p);
  if (out.host.empty()) out.host = "0.0.0.0";
  return out;
}

BindAddress bind_address_from_environment(BindAddress configured) {
  if (const char* addr = std::getenv("MANIDIALOG_ADDR"); addr && *addr) return parse_bind_address(addr);
  return configured;
}

struct HttpServer::Impl {
  SessionManager& sessions;
  httplib::Server server;
  explicit Impl(SessionManager& s) : sessions(s) {}
};

HttpServer::HttpServer(SessionManager& sessions) : impl_(std::make_unique<Impl>(sessions)) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    const HttpResponse out = route_request(impl_->sessions, req.method, req.path, req.body);
    res.status = out.status;
    res.set_content(out.body, "application/json");
  };
  impl_->server.Get(R"(/.*)", handler);
  impl_->server.Post(R"(/.*)", handler);
  impl_->server.Delete(R"(/.*)", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const BindAddress& address) {
  int port = address.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(address.host);
  } else if (!impl_->server.bind_to_port(address.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw Error(ErrorCode::IoError, "cannot bind " + address.host + ":" + std::to_string(address.port));
  }
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace manidialog
