#include "manidialog/chat_client.hpp"

#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "manidialog/error.hpp"

namespace manidialog {

using nlohmann::json;

json to_json(const ChatRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", request.model},
          {"messages", messages},
          {"temperature", request.temperature},
          {"max_tokens", request.max_tokens}};
}

std::string parse_chat_response(const json& body) {
  try {
    return body.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::TransportError, std::string("malformed chat response: ") + e.what());
  }
}

RemoteEndpoint apply_environment(RemoteEndpoint endpoint) {
  if (const char* url = std::getenv("MANIDIALOG_LLM_URL"); url && *url) endpoint.url = url;
  if (const char* key = std::getenv("MANIDIALOG_LLM_KEY"); key && *key) endpoint.api_key = key;
  return endpoint;
}

HttpChatTransport::HttpChatTransport(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  const std::string& url = endpoint_.url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::ConfigError, "remote url must look like http://host:port/path, got '" + url + "'");
  }
  if (url.compare(0, scheme_end, "http") != 0) {
    throw Error(ErrorCode::ConfigError, "only http:// endpoints are supported, got '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::string HttpChatTransport::complete(const ChatRequest& request) {
  httplib::Client client(origin_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (!endpoint_.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.api_key);

  auto res = client.Post(path_, headers, to_json(request).dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::TransportError,
                "request to " + endpoint_.url + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::TransportError,
                "endpoint " + endpoint_.url + " answered HTTP " + std::to_string(res->status));
  }
  json body;
  try {
    body = json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::TransportError, std::string("response is not JSON: ") + e.what());
  }
  return parse_chat_response(body);
}

}  // namespace manidialog
