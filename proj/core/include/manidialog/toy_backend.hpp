#pragma once

#include <memory>
#include <span>
#include <vector>

#include "manidialog/datagen.hpp"
#include "manidialog/policy.hpp"
#include "manidialog/toymodel.hpp"

namespace manidialog {

/// Policy served by a trained toy model: grammar-constrained greedy decoding
/// for the action stage (grasp targets limited to visible labels), greedy
/// free text for the response stage.
class ToyBackend final : public PolicyBackend {
 public:
  explicit ToyBackend(std::shared_ptr<const toy::ToyModel> model, int max_action_tokens = 32);

  std::string name() const override { return "toy"; }
  ActionSequence decide_actions(const PromptContext& context) override;
  std::string generate_response(const PromptContext& context, const ActionSequence& actions,
                                std::span<const GraspOutcome> outcomes) override;

 private:
  std::vector<int> encode(std::string_view text) const;

  std::shared_ptr<const toy::ToyModel> model_;
  int max_action_tokens_;
};

/// Vocabulary over the instructions and turns of `records`.
toy::Vocab corpus_vocab(std::span<const DialogueRecord> records);

/// One joint example per turn. The context is the instruction, at most
/// `history_turns` earlier turns and the Human line, as the engine renders it.
std::vector<toy::TrainingExample> corpus_examples(const toy::Vocab& vocab, std::span<const DialogueRecord> records,
                                                  std::size_t history_turns = 8);

}  // namespace manidialog
