#include "manidialog/dialogue.hpp"

#include "manidialog/error.hpp"
#include "manidialog/text.hpp"

namespace manidialog {

DialogueHistory append_turn(const DialogueHistory& history, Turn turn) {
  if (text::trim(turn.query).empty()) throw Error(ErrorCode::IncompleteTurn, "turn has an empty query");
  if (text::trim(turn.response).empty()) throw Error(ErrorCode::IncompleteTurn, "turn has no response");
  DialogueHistory out = history;
  out.turns_.push_back(std::move(turn));
  return out;
}

std::string render_object_list(const std::vector<std::string>& labels) {
  std::vector<std::string> parts;
  parts.reserve(labels.size());
  for (const auto& l : labels) parts.push_back((text::starts_with_vowel(l) ? "an " : "a ") + l);
  return text::join(parts, ", ");
}

namespace {
void replace_all(std::string& s, std::string_view what, std::string_view with) {
  for (std::size_t pos = s.find(what); pos != std::string::npos; pos = s.find(what, pos + with.size())) {
    s.replace(pos, what.size(), with);
  }
}
}  // namespace

std::string render_preamble(const PromptTemplate& tmpl, const Scene& scene) {
  const auto labels = scene.labels();
  std::string out = labels.empty() ? tmpl.empty_objects : tmpl.preamble;
  replace_all(out, "{description}", scene.description);
  replace_all(out, "{objects}", render_object_list(labels));
  return out;
}

std::string render_turn(const Turn& turn) {
  std::string out;
  out.append(kHumanTag).append(" ").append(turn.query).append("\n");
  out.append(kActionTag).append(" ").append(serialize_actions(turn.actions)).append("\n");
  out.append(kAiTag).append(" ").append(turn.response).append("\n");
  return out;
}

std::string render_history(const PromptTemplate& tmpl, const DialogueHistory& history) {
  const auto& turns = history.turns();
  const std::size_t window = std::max<std::size_t>(tmpl.max_turns, 1);
  const std::size_t first = turns.size() > window ? turns.size() - window : 0;
  std::string out;
  for (std::size_t i = first; i < turns.size(); ++i) out += render_turn(turns[i]);
  return out;
}

PromptContext build_prompt(const PromptTemplate& tmpl, const Scene& scene, const DialogueHistory& history,
                           std::string_view query) {
  PromptContext ctx;
  ctx.prompt = render_preamble(tmpl, scene);
  ctx.prompt += "\n";
  ctx.prompt += render_history(tmpl, history);
  ctx.prompt.append(kHumanTag).append(" ").append(query).append("\n");
  ctx.query = std::string(query);
  ctx.scene = scene;
  return ctx;
}

std::string action_request(const PromptContext& context) {
  return context.prompt + std::string(kActionTag);
}

std::string response_request(const PromptContext& context, const ActionSequence& actions) {
  std::string out = context.prompt;
  out.append(kActionTag).append(" ").append(serialize_actions(actions)).append("\n");
  out.append(kAiTag);
  return out;
}

}  // namespace manidialog
