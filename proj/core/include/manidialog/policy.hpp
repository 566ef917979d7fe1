#pragma once

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "manidialog/actions.hpp"
#include "manidialog/dialogue.hpp"
#include "manidialog/scene.hpp"

namespace manidialog {

// Intent classes mirror the five interaction situations: explicit request,
// request for an absent item, ambiguous need, small talk, danger; plus the
// reply to a pending confirmation.
struct DirectRequest {
  std::string target;
  friend bool operator==(const DirectRequest&, const DirectRequest&) = default;
};
struct AmbiguousNeed {
  std::string purpose;
  friend bool operator==(const AmbiguousNeed&, const AmbiguousNeed&) = default;
};
struct NonexistentRequest {
  std::string target;
  friend bool operator==(const NonexistentRequest&, const NonexistentRequest&) = default;
};
struct SmallTalk {
  friend bool operator==(const SmallTalk&, const SmallTalk&) = default;
};
struct Dangerous {
  std::string pattern;
  friend bool operator==(const Dangerous&, const Dangerous&) = default;
};
struct ConfirmationReply {
  ReplyClass reply;
  friend bool operator==(const ConfirmationReply&, const ConfirmationReply&) = default;
};

using IntentClass =
    std::variant<DirectRequest, AmbiguousNeed, NonexistentRequest, SmallTalk, Dangerous, ConfirmationReply>;

std::string describe(const IntentClass& intent);

/// Phrase lists for agreement detection. Phrases match on word boundaries.
struct Lexicon {
  std::vector<std::string> agree = {"yes", "yeah", "yep", "sure", "ok", "okay", "please do", "go ahead",
                                    "alright", "of course", "that would be great", "sounds good"};
  std::vector<std::string> decline = {"no", "nope", "don't", "do not", "never mind", "nevermind",
                                      "not now", "cancel", "no thanks", "stop"};
};

/// Decline phrases win over agree phrases ("no, thanks" is a decline).
ReplyClass classify_reply(const Lexicon& lexicon, std::string_view text);

/// First hazard pattern of `scene` found in `query` (case-insensitive), or "".
std::string match_hazard(const Scene& scene, std::string_view query);

/// Deterministic rule-based intent classifier.
///
/// Order: hazard patterns; then, while a confirmation is pending, the
/// agree/decline lexicon; then object requests and affordance purposes;
/// otherwise small talk. A pending confirmation whose reply matches neither
/// lexicon falls through to the ordinary classes (a topic jump).
IntentClass classify_intent(const PromptContext& context, std::string_view query,
                            const Lexicon& lexicon = {});

/// Two-stage decision contract: actions first, then a response conditioned on
/// those actions. Implementations must be safe for concurrent calls from
/// different sessions.
class PolicyBackend {
 public:
  virtual ~PolicyBackend() = default;

  virtual std::string name() const = 0;

  /// Output must parse under the action grammar.
  virtual ActionSequence decide_actions(const PromptContext& context) = 0;

  /// `outcomes` holds one entry per grasp that ran or was rejected.
  virtual std::string generate_response(const PromptContext& context, const ActionSequence& actions,
                                        std::span<const GraspOutcome> outcomes) = 0;
};

/// Scripted policy constructed to satisfy the evaluation scoring rule.
class OracleBackend final : public PolicyBackend {
 public:
  explicit OracleBackend(Lexicon lexicon = {}) : lexicon_(std::move(lexicon)) {}

  std::string name() const override { return "oracle"; }
  ActionSequence decide_actions(const PromptContext& context) override;
  std::string generate_response(const PromptContext& context, const ActionSequence& actions,
                                std::span<const GraspOutcome> outcomes) override;

  const Lexicon& lexicon() const { return lexicon_; }

 private:
  Lexicon lexicon_;
};

ActionSequence oracle_decide_actions(const PromptContext& context, const Lexicon& lexicon = {});
std::string oracle_generate_response(const PromptContext& context, const ActionSequence& actions,
                                     std::span<const GraspOutcome> outcomes, const Lexicon& lexicon = {});

/// Text used when no valid action could be obtained.
std::string fallback_response();

}  // namespace manidialog
