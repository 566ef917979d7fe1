#include "manidialog/remote_backend.hpp"

#include "manidialog/error.hpp"
#include "manidialog/text.hpp"

namespace manidialog {

std::string action_system_prompt() {
  return "You are the action decision module of a robot arm that helps a person at a table. "
         "Choose the manipulation actions for the person's latest message. Reply with the action "
         "string only, using this grammar:\n"
         "  seq := action (\"; \" action)*\n"
         "  action := grasp(<label>) | respond | refuse | confirm(<inner>)\n"
         "  inner := simple (\"; \" simple)*, simple := grasp(<label>) | respond\n"
         "Use grasp only for visible objects the person clearly wants, confirm when you have to guess "
         "what they need, respond for conversation or requests you cannot fulfil, and refuse alone for "
         "dangerous requests.";
}

std::string response_system_prompt(std::span<const GraspOutcome> outcomes) {
  std::string out =
      "You are the response module of a robot arm that helps a person at a table. The actions after "
      "the Action tag have already been chosen. Write the assistant's reply after AI: in one or two "
      "sentences, consistent with those actions.";
  if (!outcomes.empty()) {
    out += " Execution results:";
    for (const auto& o : outcomes) out += " " + o.target + " -> " + std::string(to_string(o.status)) + ";";
    out += " Report any failure to the person.";
  }
  return out;
}

RemoteBackend::RemoteBackend(std::shared_ptr<ChatTransport> transport, RemoteOptions options)
    : transport_(std::move(transport)), options_(std::move(options)) {
  if (!transport_) throw Error(ErrorCode::ConfigError, "remote backend needs a transport");
}

ChatRequest RemoteBackend::make_request(std::vector<ChatMessage> messages) const {
  ChatRequest req;
  req.model = options_.model;
  req.messages = std::move(messages);
  req.temperature = options_.temperature;
  req.max_tokens = options_.max_tokens;
  return req;
}

ActionSequence RemoteBackend::decide_actions(const PromptContext& context) {
  std::vector<ChatMessage> messages = {
      {"system", action_system_prompt()},
      {"user", action_request(context)},
  };
  for (int attempt = 0;; ++attempt) {
    const std::string reply = text::trim(transport_->complete(make_request(messages)));
    std::string problem;
    try {
      ActionSequence seq = parse_actions(reply);
      const auto violations = validate(context.scene, seq);
      if (violations.empty()) return seq;
      std::vector<std::string> parts;
      for (const auto& v : violations) parts.push_back(describe(v));
      problem = "the actions are not executable here: " + text::join(parts, ", ");
    } catch (const GrammarError& e) {
      problem = "the reply does not follow the action grammar (" + e.detail() + ")";
    }
    if (attempt >= options_.max_retries) return ActionSequence{{Action::respond()}};
    messages.push_back({"assistant", reply});
    messages.push_back({"user", "Invalid: " + problem + ". Reply again with the action string only."});
  }
}

std::string RemoteBackend::generate_response(const PromptContext& context, const ActionSequence& actions,
                                             std::span<const GraspOutcome> outcomes) {
  std::vector<ChatMessage> messages = {
      {"system", response_system_prompt(outcomes)},
      {"user", response_request(context, actions)},
  };
  std::string reply = text::trim(transport_->complete(make_request(std::move(messages))));
  if (reply.starts_with(kAiTag)) reply = text::trim(std::string_view(reply).substr(kAiTag.size()));
  return reply.empty() ? fallback_response() : reply;
}

}  // namespace manidialog
