#include "manidialog/toy_backend.hpp"

#include <algorithm>

#include "manidialog/error.hpp"

namespace manidialog {

ToyBackend::ToyBackend(std::shared_ptr<const toy::ToyModel> model, int max_action_tokens)
    : model_(std::move(model)), max_action_tokens_(max_action_tokens) {
  if (!model_) throw Error(ErrorCode::ConfigError, "toy backend needs a model");
}

std::vector<int> ToyBackend::encode(std::string_view text) const {
  std::vector<int> ids = {model_->vocab.begin_id()};
  const auto tokens = toy::tokenize(text);
  for (int id : model_->vocab.encode(tokens, /*map_unknown=*/true)) ids.push_back(id);
  return ids;
}

ActionSequence ToyBackend::decide_actions(const PromptContext& context) {
  toy::DecodeOptions options;
  options.max_tokens = max_action_tokens_;
  options.labels = context.scene.labels();
  try {
    return toy::decode_actions_constrained(model_->params, model_->vocab, encode(action_request(context)), options);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MaxLengthExceeded) throw;
    return ActionSequence{{Action::respond()}};
  }
}

std::string ToyBackend::generate_response(const PromptContext& context, const ActionSequence& actions,
                                          std::span<const GraspOutcome>) {
  std::string text = toy::decode_response(model_->params, model_->vocab, encode(response_request(context, actions)));
  return text.empty() ? fallback_response() : text;
}

toy::Vocab corpus_vocab(std::span<const DialogueRecord> records) {
  std::vector<std::string> texts;
  for (const auto& r : records) {
    texts.push_back(r.instruction);
    for (const auto& t : r.turns) {
      texts.push_back(t.human);
      texts.push_back(t.actions);
      texts.push_back(t.ai);
    }
  }
  return toy::Vocab::build(texts);
}

std::vector<toy::TrainingExample> corpus_examples(const toy::Vocab& vocab, std::span<const DialogueRecord> records,
                                                  std::size_t history_turns) {
  std::vector<toy::TrainingExample> out;
  for (const auto& r : records) {
    for (std::size_t i = 0; i < r.turns.size(); ++i) {
      std::string context = r.instruction + "\n";
      for (std::size_t k = i - std::min(i, history_turns); k < i; ++k) {
        const auto& t = r.turns[k];
        context.append(kHumanTag).append(" ").append(t.human).append("\n");
        context.append(kActionTag).append(" ").append(t.actions).append("\n");
        context.append(kAiTag).append(" ").append(t.ai).append("\n");
      }
      context.append(kHumanTag).append(" ").append(r.turns[i].human).append("\n");
      out.push_back(toy::make_example(vocab, context, r.turns[i].actions, r.turns[i].ai, /*map_unknown=*/true));
    }
  }
  return out;
}

}  // namespace manidialog
