#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "manidialog/actions.hpp"
#include "manidialog/scene.hpp"

namespace manidialog {

inline constexpr std::string_view kHumanTag = "Human:";
inline constexpr std::string_view kActionTag = "Action:";
inline constexpr std::string_view kAiTag = "AI:";

struct Turn {
  std::string query;
  ActionSequence actions;  // may be empty for pure chat turns
  std::string response;

  friend bool operator==(const Turn&, const Turn&) = default;
};

/// Append-only; the empty history is h_0.
class DialogueHistory {
 public:
  DialogueHistory() = default;

  const std::vector<Turn>& turns() const { return turns_; }
  std::size_t size() const { return turns_.size(); }
  bool empty() const { return turns_.empty(); }

  friend DialogueHistory append_turn(const DialogueHistory& history, Turn turn);
  friend bool operator==(const DialogueHistory&, const DialogueHistory&) = default;

 private:
  std::vector<Turn> turns_;
};

/// Throws IncompleteTurn if the query or response is empty.
DialogueHistory append_turn(const DialogueHistory& history, Turn turn);

struct PromptTemplate {
  // Placeholders: {description} and {objects}.
  std::string preamble = "You are in {description}. You can see {objects} on the table.";
  std::string empty_objects = "You are in {description}. You can see no objects.";
  std::size_t max_turns = 8;
};

/// Conditioning context (p, history, q_t) handed to a policy backend.
struct PromptContext {
  std::string prompt;
  std::string query;
  Scene scene;
  SessionPhase phase;
};

/// "an apple, a knife" with indefinite articles, comma separated.
std::string render_object_list(const std::vector<std::string>& labels);

std::string render_preamble(const PromptTemplate& tmpl, const Scene& scene);

/// One block per turn: "Human: q\nAction: a\nAI: r\n".
std::string render_turn(const Turn& turn);

/// Renders the most recent min(|history|, max_turns) turns.
std::string render_history(const PromptTemplate& tmpl, const DialogueHistory& history);

/// preamble "\n" history "Human: " query "\n"
PromptContext build_prompt(const PromptTemplate& tmpl, const Scene& scene, const DialogueHistory& history,
                           std::string_view query);

/// Decision-stage continuation: the prompt followed by "Action:".
std::string action_request(const PromptContext& context);

/// Response-stage continuation: the prompt, the chosen actions under the
/// Action tag, then "AI:".
std::string response_request(const PromptContext& context, const ActionSequence& actions);

}  // namespace manidialog
