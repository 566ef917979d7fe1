#include "manidialog/actions.hpp"

#include <algorithm>
#include <cctype>

#include "manidialog/error.hpp"

namespace manidialog {

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::Grasp: return "grasp";
    case ActionKind::Respond: return "respond";
    case ActionKind::Confirm: return "confirm";
    case ActionKind::Refuse: return "refuse";
  }
  return "respond";
}

std::optional<ActionKind> action_kind_from_string(std::string_view s) {
  if (s == "grasp") return ActionKind::Grasp;
  if (s == "respond") return ActionKind::Respond;
  if (s == "confirm") return ActionKind::Confirm;
  if (s == "refuse") return ActionKind::Refuse;
  return std::nullopt;
}

bool ActionSequence::contains(ActionKind kind) const {
  return std::any_of(actions.begin(), actions.end(), [&](const Action& a) { return a.kind() == kind; });
}

const Confirm* ActionSequence::confirm() const {
  for (const auto& a : actions) {
    if (const auto* c = a.as_confirm()) return c;
  }
  return nullptr;
}

ActionKind primary_kind(const ActionSequence& seq) {
  if (seq.contains(ActionKind::Refuse)) return ActionKind::Refuse;
  if (seq.contains(ActionKind::Confirm)) return ActionKind::Confirm;
  if (seq.contains(ActionKind::Grasp)) return ActionKind::Grasp;
  return ActionKind::Respond;
}

// ---------------------------------------------------------------------------
// Recognizer

std::string_view to_string(ActionToken token) {
  switch (token) {
    case ActionToken::Grasp: return "'grasp'";
    case ActionToken::Respond: return "'respond'";
    case ActionToken::Confirm: return "'confirm'";
    case ActionToken::Refuse: return "'refuse'";
    case ActionToken::LParen: return "'('";
    case ActionToken::RParen: return "')'";
    case ActionToken::Semicolon: return "';'";
    case ActionToken::Label: return "label";
    case ActionToken::End: return "end of actions";
  }
  return "?";
}

bool ActionGrammarState::allows(ActionToken t) const {
  using T = ActionToken;
  switch (pos_) {
    case Pos::ActionStart:
      return t == T::Grasp || t == T::Respond || (t == T::Confirm && !seen_confirm_) ||
             (t == T::Refuse && !any_action_);
    case Pos::GraspOpen:
    case Pos::ConfirmOpen:
    case Pos::InnerGraspOpen:
      return t == T::LParen;
    case Pos::GraspLabel:
    case Pos::InnerGraspLabel:
      return t == T::Label;
    case Pos::GraspClose:
    case Pos::InnerGraspClose:
      return t == T::RParen;
    case Pos::InnerStart:
      return t == T::Grasp || t == T::Respond;
    case Pos::InnerAfter:
      return t == T::Semicolon || t == T::RParen;
    case Pos::AfterAction:
      return t == T::End || (t == T::Semicolon && !refused_);
    case Pos::Done:
      return false;
  }
  return false;
}

void ActionGrammarState::advance(ActionToken t) {
  using T = ActionToken;
  switch (pos_) {
    case Pos::ActionStart:
      any_action_ = true;
      if (t == T::Grasp) pos_ = Pos::GraspOpen;
      else if (t == T::Respond) pos_ = Pos::AfterAction;
      else if (t == T::Refuse) { refused_ = true; pos_ = Pos::AfterAction; }
      else { seen_confirm_ = true; pos_ = Pos::ConfirmOpen; }
      break;
    case Pos::GraspOpen: pos_ = Pos::GraspLabel; break;
    case Pos::GraspLabel: pos_ = Pos::GraspClose; break;
    case Pos::GraspClose: pos_ = Pos::AfterAction; break;
    case Pos::ConfirmOpen: pos_ = Pos::InnerStart; break;
    case Pos::InnerStart: pos_ = t == T::Grasp ? Pos::InnerGraspOpen : Pos::InnerAfter; break;
    case Pos::InnerGraspOpen: pos_ = Pos::InnerGraspLabel; break;
    case Pos::InnerGraspLabel: pos_ = Pos::InnerGraspClose; break;
    case Pos::InnerGraspClose: pos_ = Pos::InnerAfter; break;
    case Pos::InnerAfter: pos_ = t == T::Semicolon ? Pos::InnerStart : Pos::AfterAction; break;
    case Pos::AfterAction: pos_ = t == T::End ? Pos::Done : Pos::ActionStart; break;
    case Pos::Done: break;
  }
}

std::vector<ActionToken> ActionGrammarState::expected() const {
  std::vector<ActionToken> out;
  for (auto t : {ActionToken::Grasp, ActionToken::Respond, ActionToken::Confirm, ActionToken::Refuse,
                 ActionToken::LParen, ActionToken::RParen, ActionToken::Semicolon, ActionToken::Label,
                 ActionToken::End}) {
    if (allows(t)) out.push_back(t);
  }
  return out;
}

bool ActionGrammarState::accepting() const { return pos_ == Pos::AfterAction; }

int ActionGrammarState::min_tokens_to_finish() const {
  switch (pos_) {
    case Pos::ActionStart: return 2;       // respond End
    case Pos::GraspOpen: return 4;         // ( label ) End
    case Pos::GraspLabel: return 3;
    case Pos::GraspClose: return 2;
    case Pos::ConfirmOpen: return 4;       // ( respond ) End
    case Pos::InnerStart: return 3;        // respond ) End
    case Pos::InnerGraspOpen: return 5;    // ( label ) ) End
    case Pos::InnerGraspLabel: return 4;
    case Pos::InnerGraspClose: return 3;
    case Pos::InnerAfter: return 2;
    case Pos::AfterAction: return 1;
    case Pos::Done: return 0;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Text parser

namespace {

struct Lexeme {
  ActionToken token;
  std::size_t pos;
  std::string text;
  bool invalid = false;
};

bool label_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
}

std::string describe_expected(const ActionGrammarState& st) {
  std::string out;
  auto exp = st.expected();
  for (std::size_t i = 0; i < exp.size(); ++i) {
    if (i) out += i + 1 == exp.size() ? " or " : ", ";
    out += to_string(exp[i]);
  }
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  ActionSequence run() {
    ActionSequence seq;
    std::vector<Action> inner;
    bool in_confirm = false;
    bool in_grasp = false;

    for (;;) {
      const Lexeme lx = next();
      if (lx.invalid || !state_.allows(lx.token)) {
        throw GrammarError(lx.pos, describe_expected(state_), lx.text);
      }
      state_.advance(lx.token);
      std::vector<Action>& target = in_confirm ? inner : seq.actions;
      switch (lx.token) {
        case ActionToken::Respond: target.push_back(Action::respond()); break;
        case ActionToken::Refuse: target.push_back(Action::refuse()); break;
        case ActionToken::Confirm: in_confirm = true; break;
        case ActionToken::Label:
          target.push_back(Action::grasp(lx.text));
          in_grasp = true;
          break;
        case ActionToken::RParen:
          if (in_grasp) {
            in_grasp = false;
          } else {
            in_confirm = false;
            seq.actions.push_back(Action::confirm(std::move(inner)));
            inner.clear();
          }
          break;
        case ActionToken::End: return seq;
        default: break;
      }
    }
  }

 private:
  // Context-sensitive: in a label slot any word is a label, elsewhere words
  // are keywords.
  Lexeme next() {
    while (i_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[i_]))) ++i_;
    const std::size_t start = i_;
    if (i_ >= text_.size()) return {ActionToken::End, start, ""};
    const char c = text_[i_];
    if (c == '(') { ++i_; return {ActionToken::LParen, start, "("}; }
    if (c == ')') { ++i_; return {ActionToken::RParen, start, ")"}; }
    if (c == ';') { ++i_; return {ActionToken::Semicolon, start, ";"}; }
    if (label_char(c)) {
      while (i_ < text_.size() && label_char(text_[i_])) ++i_;
      std::string word(text_.substr(start, i_ - start));
      if (!state_.allows(ActionToken::Label)) {
        if (auto kind = action_kind_from_string(word)) {
          switch (*kind) {
            case ActionKind::Grasp: return {ActionToken::Grasp, start, word};
            case ActionKind::Respond: return {ActionToken::Respond, start, word};
            case ActionKind::Confirm: return {ActionToken::Confirm, start, word};
            case ActionKind::Refuse: return {ActionToken::Refuse, start, word};
          }
        }
      }
      return {ActionToken::Label, start, word};
    }
    // Anything else can never be accepted; report the offending character.
    ++i_;
    return {ActionToken::Label, start, std::string(1, c), true};
  }

  std::string_view text_;
  std::size_t i_ = 0;
  ActionGrammarState state_;
};

}  // namespace

ActionSequence parse_actions(std::string_view text) { return Parser(text).run(); }

std::string serialize_actions(const ActionSequence& seq) {
  std::string out;
  auto emit = [&](const Action& a, auto&& self) -> void {
    std::visit(
        [&](const auto& v) {
          using V = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<V, Grasp>) {
            out += "grasp(" + v.target + ")";
          } else if constexpr (std::is_same_v<V, Respond>) {
            out += "respond";
          } else if constexpr (std::is_same_v<V, Refuse>) {
            out += "refuse";
          } else {
            out += "confirm(";
            for (std::size_t i = 0; i < v.proposal.size(); ++i) {
              if (i) out += "; ";
              self(v.proposal[i], self);
            }
            out += ")";
          }
        },
        a.value);
  };
  for (std::size_t i = 0; i < seq.actions.size(); ++i) {
    if (i) out += "; ";
    emit(seq.actions[i], emit);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

std::string_view to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::AbsentTarget: return "AbsentTarget";
    case Violation::Kind::NotGraspable: return "NotGraspable";
    case Violation::Kind::InvalidLabel: return "InvalidLabel";
    case Violation::Kind::RefuseNotAlone: return "RefuseNotAlone";
    case Violation::Kind::MultipleConfirm: return "MultipleConfirm";
    case Violation::Kind::NestedConfirm: return "NestedConfirm";
    case Violation::Kind::RefuseInProposal: return "RefuseInProposal";
    case Violation::Kind::EmptyProposal: return "EmptyProposal";
  }
  return "?";
}

std::string describe(const Violation& v) {
  std::string out(to_string(v.kind));
  if (!v.label.empty()) out += "{" + v.label + "}";
  return out;
}

std::vector<Violation> check_structure(const ActionSequence& seq) {
  using K = Violation::Kind;
  std::vector<Violation> out;
  if (seq.contains(ActionKind::Refuse) && seq.size() > 1) out.push_back({K::RefuseNotAlone, {}});
  const auto confirms = std::count_if(seq.actions.begin(), seq.actions.end(),
                                      [](const Action& a) { return a.kind() == ActionKind::Confirm; });
  if (confirms > 1) out.push_back({K::MultipleConfirm, {}});
  auto check_label = [&](const std::string& label) {
    if (!is_valid_label(label)) out.push_back({K::InvalidLabel, label});
  };
  for (const auto& a : seq.actions) {
    if (const auto* g = a.as_grasp()) check_label(g->target);
    if (const auto* c = a.as_confirm()) {
      if (c->proposal.empty()) out.push_back({K::EmptyProposal, {}});
      for (const auto& inner : c->proposal) {
        if (inner.kind() == ActionKind::Confirm) out.push_back({K::NestedConfirm, {}});
        if (inner.kind() == ActionKind::Refuse) out.push_back({K::RefuseInProposal, {}});
        if (const auto* g = inner.as_grasp()) check_label(g->target);
      }
    }
  }
  return out;
}

std::vector<Violation> validate(const Scene& scene, const ActionSequence& seq) {
  auto out = check_structure(seq);
  auto check_target = [&](const std::string& label) {
    const ObjectInstance* obj = scene.find(label);
    if (!obj) out.push_back({Violation::Kind::AbsentTarget, label});
    else if (!obj->graspable) out.push_back({Violation::Kind::NotGraspable, label});
  };
  for (const auto& a : seq.actions) {
    if (const auto* g = a.as_grasp()) check_target(g->target);
    if (const auto* c = a.as_confirm()) {
      for (const auto& inner : c->proposal) {
        if (const auto* g = inner.as_grasp()) check_target(g->target);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Confirm flow

std::string_view to_string(ReplyClass reply) {
  switch (reply) {
    case ReplyClass::Agree: return "Agree";
    case ReplyClass::Decline: return "Decline";
    case ReplyClass::Other: return "Other";
  }
  return "Other";
}

const ActionSequence* SessionPhase::pending() const {
  if (const auto* a = std::get_if<AwaitingConfirmation>(&state)) return &a->proposal;
  return nullptr;
}

PhaseStep step_phase(const SessionPhase& phase, const ActionSequence& executed,
                     std::optional<ReplyClass> reply) {
  auto enter_if_confirm = [&](SessionPhase otherwise) -> SessionPhase {
    if (const Confirm* c = executed.confirm()) {
      return SessionPhase{AwaitingConfirmation{ActionSequence{c->proposal}}};
    }
    return otherwise;
  };

  const ActionSequence* pending = phase.pending();
  if (!pending) return {enter_if_confirm(SessionPhase{Idle{}}), std::nullopt};

  if (!reply) throw Error(ErrorCode::MissingReply, "a reply class is required while awaiting confirmation");
  switch (*reply) {
    case ReplyClass::Agree: return {SessionPhase{Idle{}}, *pending};
    case ReplyClass::Decline: return {SessionPhase{Idle{}}, std::nullopt};
    case ReplyClass::Other: return {enter_if_confirm(phase), std::nullopt};
  }
  return {phase, std::nullopt};
}

}  // namespace manidialog
