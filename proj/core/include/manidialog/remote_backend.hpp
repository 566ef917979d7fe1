#pragma once

#include <memory>
#include <string>

#include "manidialog/chat_client.hpp"
#include "manidialog/policy.hpp"

namespace manidialog {

struct RemoteOptions {
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;
  int max_tokens = 256;
  /// Re-prompts after a grammar or validation failure before falling back to respond.
  int max_retries = 2;
};

/// Policy backed by an external chat-completion model. The decision stage
/// asks for an action string only and repairs bad output by re-prompting with
/// the parser's error; the response stage sends the chosen actions under the
/// Action tag before asking for the AI continuation.
class RemoteBackend final : public PolicyBackend {
 public:
  RemoteBackend(std::shared_ptr<ChatTransport> transport, RemoteOptions options = {});

  std::string name() const override { return "remote"; }
  ActionSequence decide_actions(const PromptContext& context) override;
  std::string generate_response(const PromptContext& context, const ActionSequence& actions,
                                std::span<const GraspOutcome> outcomes) override;

 private:
  ChatRequest make_request(std::vector<ChatMessage> messages) const;

  std::shared_ptr<ChatTransport> transport_;
  RemoteOptions options_;
};

std::string action_system_prompt();
std::string response_system_prompt(std::span<const GraspOutcome> outcomes);

}  // namespace manidialog
