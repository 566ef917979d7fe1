#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace manidialog {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 256;
};

nlohmann::json to_json(const ChatRequest& request);
/// Extracts choices[0].message.content; throws TransportError on a malformed body.
std::string parse_chat_response(const nlohmann::json& body);

/// Chat-completion transport. Implementations throw Error{TransportError}
/// when the endpoint is unreachable, times out, or answers with garbage.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

struct RemoteEndpoint {
  std::string url;  // http://host:port/path
  std::string api_key;
  std::string model = "gpt-3.5-turbo";
  std::chrono::milliseconds timeout{30000};
  double temperature = 0.0;
  int max_tokens = 256;
};

/// Overrides `url` and `api_key` from MANIDIALOG_LLM_URL / MANIDIALOG_LLM_KEY when set.
RemoteEndpoint apply_environment(RemoteEndpoint endpoint);

/// POSTs the OpenAI-style body to `endpoint.url`. Safe for concurrent use;
/// each call opens its own connection.
class HttpChatTransport final : public ChatTransport {
 public:
  explicit HttpChatTransport(RemoteEndpoint endpoint);
  std::string complete(const ChatRequest& request) override;

  const RemoteEndpoint& endpoint() const { return endpoint_; }

 private:
  RemoteEndpoint endpoint_;
  std::string origin_;  // scheme://host:port
  std::string path_;
};

}  // namespace manidialog
