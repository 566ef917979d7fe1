#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "manidialog/scene.hpp"

namespace manidialog {

// Wire grammar for the "Action" field (dataset records, prompts, logs, HTTP):
//
//   seq    := action (";" action)*
//   action := "grasp(" label ")" | "respond" | "refuse" | "confirm(" inner ")"
//   inner  := simple (";" simple)*
//   simple := grasp | respond
//
// with "refuse" only as the sole action and at most one confirm per sequence.

struct Action;

struct Grasp {
  std::string target;
  friend bool operator==(const Grasp&, const Grasp&) = default;
};
struct Respond {
  friend bool operator==(const Respond&, const Respond&) = default;
};
struct Refuse {
  friend bool operator==(const Refuse&, const Refuse&) = default;
};
struct Confirm {
  std::vector<Action> proposal;
  friend bool operator==(const Confirm&, const Confirm&);
};

enum class ActionKind { Grasp, Respond, Confirm, Refuse };

std::string_view to_string(ActionKind kind);
std::optional<ActionKind> action_kind_from_string(std::string_view s);

struct Action {
  std::variant<Grasp, Respond, Confirm, Refuse> value;

  static Action grasp(std::string target) { return Action{Grasp{std::move(target)}}; }
  static Action respond() { return Action{Respond{}}; }
  static Action refuse() { return Action{Refuse{}}; }
  static Action confirm(std::vector<Action> proposal) { return Action{Confirm{std::move(proposal)}}; }

  ActionKind kind() const { return static_cast<ActionKind>(value.index()); }
  const Grasp* as_grasp() const { return std::get_if<Grasp>(&value); }
  const Confirm* as_confirm() const { return std::get_if<Confirm>(&value); }

  friend bool operator==(const Action&, const Action&) = default;
};

inline bool operator==(const Confirm& a, const Confirm& b) { return a.proposal == b.proposal; }

struct ActionSequence {
  std::vector<Action> actions;

  bool empty() const { return actions.empty(); }
  std::size_t size() const { return actions.size(); }
  bool contains(ActionKind kind) const;
  const Confirm* confirm() const;

  friend bool operator==(const ActionSequence&, const ActionSequence&) = default;
};

/// Dominant variant used for scoring: refuse > confirm > grasp > respond.
ActionKind primary_kind(const ActionSequence& seq);

/// Throws GrammarError{position, expected} on any deviation from the grammar.
ActionSequence parse_actions(std::string_view text);

/// Canonical form: lowercase keywords, "; " separator.
std::string serialize_actions(const ActionSequence& seq);

struct Violation {
  enum class Kind {
    AbsentTarget,
    NotGraspable,
    InvalidLabel,
    RefuseNotAlone,
    MultipleConfirm,
    NestedConfirm,
    RefuseInProposal,
    EmptyProposal,
  };
  Kind kind;
  std::string label;  // set for target-related violations

  friend bool operator==(const Violation&, const Violation&) = default;
};

std::string_view to_string(Violation::Kind kind);
std::string describe(const Violation& v);

/// Structural invariants only (no scene).
std::vector<Violation> check_structure(const ActionSequence& seq);

/// Structural invariants plus every grasp target (including inside a confirm
/// proposal) present and graspable in `scene`.
std::vector<Violation> validate(const Scene& scene, const ActionSequence& seq);

// ---------------------------------------------------------------------------
// Incremental recognizer. Shared by the text parser and the toy model's
// constrained decoder so the grammar has a single definition.

enum class ActionToken { Grasp, Respond, Confirm, Refuse, LParen, RParen, Semicolon, Label, End };

std::string_view to_string(ActionToken token);

class ActionGrammarState {
 public:
  bool allows(ActionToken token) const;
  /// Requires allows(token).
  void advance(ActionToken token);
  std::vector<ActionToken> expected() const;
  /// The tokens so far form a complete sequence (End would be accepted).
  bool accepting() const;
  bool done() const { return pos_ == Pos::Done; }
  /// Fewest further tokens, End included, needed to finish from here.
  int min_tokens_to_finish() const;

 private:
  enum class Pos {
    ActionStart,
    GraspOpen,
    GraspLabel,
    GraspClose,
    ConfirmOpen,
    InnerStart,
    InnerGraspOpen,
    InnerGraspLabel,
    InnerGraspClose,
    InnerAfter,
    AfterAction,
    Done,
  };
  Pos pos_ = Pos::ActionStart;
  bool any_action_ = false;
  bool seen_confirm_ = false;
  bool refused_ = false;
};

// ---------------------------------------------------------------------------
// Confirm flow.

enum class ReplyClass { Agree, Decline, Other };

std::string_view to_string(ReplyClass reply);

struct Idle {
  friend bool operator==(const Idle&, const Idle&) = default;
};
struct AwaitingConfirmation {
  ActionSequence proposal;
  friend bool operator==(const AwaitingConfirmation&, const AwaitingConfirmation&) = default;
};

struct SessionPhase {
  std::variant<Idle, AwaitingConfirmation> state;

  bool awaiting() const { return std::holds_alternative<AwaitingConfirmation>(state); }
  const ActionSequence* pending() const;

  friend bool operator==(const SessionPhase&, const SessionPhase&) = default;
};

struct PhaseStep {
  SessionPhase next;
  /// Proposal released for execution by an Agree; empty otherwise.
  std::optional<ActionSequence> scheduled;
};

/// Pure transition function of the confirm flow.
///
/// Idle: entering AwaitingConfirmation iff `executed` carries a confirm.
/// AwaitingConfirmation: Agree releases the proposal once and returns to Idle;
/// Decline drops it; Other keeps it pending unless `executed` carries a new
/// confirm, which then replaces it. Throws MissingReply if awaiting and no
/// reply is given.
PhaseStep step_phase(const SessionPhase& phase, const ActionSequence& executed,
                     std::optional<ReplyClass> reply);

}  // namespace manidialog
