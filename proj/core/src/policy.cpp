#include "manidialog/policy.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "manidialog/text.hpp"

namespace manidialog {

namespace {

using Words = std::vector<std::string>;

// True if `word` is `key` or a regular inflection of it (cuts, cutting,
// writing, drinks).
bool inflects(const std::string& word, const std::string& key) {
  if (word == key) return true;
  if (!word.starts_with(key)) {
    // write -> writing
    return key.size() > 2 && key.back() == 'e' && word == key.substr(0, key.size() - 1) + "ing";
  }
  const std::string rest = word.substr(key.size());
  if (rest == "s" || rest == "es" || rest == "ing" || rest == "ed") return true;
  // cut -> cutting
  return rest.size() == 4 && rest[0] == key.back() && rest.substr(1) == "ing";
}

// Index of the first occurrence of `phrase` in `words`, or npos. The last
// phrase word may match an inflected form.
std::size_t find_phrase(const Words& words, const Words& phrase, bool inflect_last = false) {
  if (phrase.empty() || phrase.size() > words.size()) return std::string::npos;
  for (std::size_t i = 0; i + phrase.size() <= words.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < phrase.size() && ok; ++k) {
      const bool last = k + 1 == phrase.size();
      ok = (last && inflect_last) ? inflects(words[i + k], phrase[k]) : words[i + k] == phrase[k];
    }
    if (ok) return i;
  }
  return std::string::npos;
}

bool contains_phrase(const Words& words, std::string_view phrase, bool inflect_last = false) {
  return find_phrase(words, text::words(phrase), inflect_last) != std::string::npos;
}

const std::set<std::string>& transfer_verbs() {
  static const std::set<std::string> v = {"give", "hand", "bring", "pass", "fetch", "get", "grab"};
  return v;
}

const std::set<std::string>& determiners() {
  static const std::set<std::string> v = {"the", "a", "an", "some", "my", "that", "this",
                                          "those", "these", "any", "your"};
  return v;
}

const std::set<std::string>& phrase_stops() {
  static const std::set<std::string> v = {"please", "for", "to", "from", "so", "and", "which", "now",
                                          "right", "here", "there", "over", "because", "if", "with",
                                          "on", "in", "when", "i", "me", "quickly", "too", "at"};
  return v;
}

const std::set<std::string>& generic_nouns() {
  static const std::set<std::string> v = {"something", "anything", "thing", "things", "stuff",
                                          "item", "one", "it", "them"};
  return v;
}

// Position just after a request cue, or npos.
std::size_t find_request(const Words& w) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (transfer_verbs().count(w[i])) return i + 1;
    const bool wants = w[i] == "need" || w[i] == "want" || w[i] == "i'd" || w[i] == "like";
    if (wants && i + 1 < w.size() && determiners().count(w[i + 1])) return i + 1;
    if ((w[i] == "can" || w[i] == "could" || w[i] == "may") && i + 2 < w.size() && w[i + 1] == "i" &&
        w[i + 2] == "have") {
      return i + 3;
    }
  }
  return std::string::npos;
}

// Head noun of the object phrase following a request cue.
std::string requested_noun(const Words& w, std::size_t from) {
  std::size_t i = from;
  while (i < w.size() && (w[i] == "me" || w[i] == "us" || w[i] == "over" || w[i] == "please")) ++i;
  if (i < w.size() && determiners().count(w[i])) ++i;
  std::string last;
  for (; i < w.size(); ++i) {
    if (phrase_stops().count(w[i]) || determiners().count(w[i])) break;
    last = w[i];
  }
  if (generic_nouns().count(last)) return {};
  return last;
}

// Present label named by `word` (exact or plural form).
const ObjectInstance* match_object(const Scene& scene, const std::string& word) {
  for (const auto& o : scene.objects) {
    if (word == o.label || word == o.label + "s" || word == o.label + "es" || o.label == word + "s") {
      return &o;
    }
  }
  return nullptr;
}

std::string matched_purpose(const Scene& scene, const Words& w) {
  for (const auto& word : w) {
    for (const auto& [purpose, labels] : scene.affordances) {
      const Words key = text::words(purpose);
      if (key.size() == 1 && inflects(word, key[0])) return purpose;
    }
  }
  for (const auto& [purpose, labels] : scene.affordances) {
    if (text::words(purpose).size() > 1 && contains_phrase(w, purpose, true)) return purpose;
  }
  return {};
}

}  // namespace

std::string describe(const IntentClass& intent) {
  return std::visit(
      [](const auto& v) -> std::string {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, DirectRequest>) return "DirectRequest{" + v.target + "}";
        else if constexpr (std::is_same_v<V, AmbiguousNeed>) return "AmbiguousNeed{" + v.purpose + "}";
        else if constexpr (std::is_same_v<V, NonexistentRequest>) return "NonexistentRequest{" + v.target + "}";
        else if constexpr (std::is_same_v<V, SmallTalk>) return "SmallTalk";
        else if constexpr (std::is_same_v<V, Dangerous>) return "Dangerous";
        else return "ConfirmationReply{" + std::string(to_string(v.reply)) + "}";
      },
      intent);
}

ReplyClass classify_reply(const Lexicon& lexicon, std::string_view text) {
  const Words w = text::words(text);
  for (const auto& p : lexicon.decline) {
    if (contains_phrase(w, p)) return ReplyClass::Decline;
  }
  for (const auto& p : lexicon.agree) {
    if (contains_phrase(w, p)) return ReplyClass::Agree;
  }
  return ReplyClass::Other;
}

std::string match_hazard(const Scene& scene, std::string_view query) {
  const Words w = text::words(query);
  for (const auto& pattern : scene.hazards) {
    if (contains_phrase(w, pattern, true)) return pattern;
  }
  return {};
}

IntentClass classify_intent(const PromptContext& context, std::string_view query, const Lexicon& lexicon) {
  const Scene& scene = context.scene;
  if (auto hazard = match_hazard(scene, query); !hazard.empty()) return Dangerous{hazard};

  if (context.phase.awaiting()) {
    const ReplyClass reply = classify_reply(lexicon, query);
    if (reply != ReplyClass::Other) return ConfirmationReply{reply};
  }

  const Words w = text::words(query);
  const std::size_t cue = find_request(w);
  std::string noun;
  if (cue != std::string::npos) {
    noun = requested_noun(w, cue);
    if (const ObjectInstance* obj = noun.empty() ? nullptr : match_object(scene, noun)) {
      if (obj->graspable) return DirectRequest{obj->label};
      return NonexistentRequest{obj->label};
    }
  }

  if (auto purpose = matched_purpose(scene, w); !purpose.empty()) return AmbiguousNeed{purpose};

  if (cue != std::string::npos) {
    for (const auto& word : w) {
      if (const ObjectInstance* obj = match_object(scene, word); obj && obj->graspable) {
        return DirectRequest{obj->label};
      }
    }
    if (!noun.empty()) return NonexistentRequest{noun};
  }
  return SmallTalk{};
}

// ---------------------------------------------------------------------------
// Oracle

ActionSequence oracle_decide_actions(const PromptContext& context, const Lexicon& lexicon) {
  const IntentClass intent = classify_intent(context, context.query, lexicon);
  return std::visit(
      [&](const auto& v) -> ActionSequence {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, DirectRequest>) {
          return {{Action::grasp(v.target)}};
        } else if constexpr (std::is_same_v<V, AmbiguousNeed>) {
          const auto candidates = resolve_affordance(context.scene, v.purpose);
          for (const auto& c : candidates) {
            const ObjectInstance* obj = context.scene.find(c);
            if (obj && obj->graspable) return {{Action::confirm({Action::grasp(c)})}};
          }
          return {{Action::respond()}};
        } else if constexpr (std::is_same_v<V, Dangerous>) {
          return {{Action::refuse()}};
        } else if constexpr (std::is_same_v<V, ConfirmationReply>) {
          const ActionSequence* pending = context.phase.pending();
          if (v.reply == ReplyClass::Agree && pending) return *pending;
          return {{Action::respond()}};
        } else {
          return {{Action::respond()}};
        }
      },
      intent);
}

namespace {

std::string outcome_sentence(const GraspOutcome& o) {
  switch (o.status) {
    case GraspStatus::Grasped: return "Here is the " + o.target + ". I have handed it over to you.";
    case GraspStatus::AbsentObject:
      return "Sorry, the " + o.target + " does not exist here, so I cannot get it for you.";
    case GraspStatus::NotGraspable: return "Sorry, I cannot pick up the " + o.target + ".";
  }
  return {};
}

std::string small_talk(std::string_view query) {
  const Words w = text::words(query);
  for (const char* greet : {"hello", "hi", "hey", "morning", "evening"}) {
    if (std::find(w.begin(), w.end(), greet) != w.end()) return "Hello! How can I help you today?";
  }
  if (std::find(w.begin(), w.end(), "thanks") != w.end() || contains_phrase(w, "thank you")) {
    return "You're welcome! Let me know if you need anything else.";
  }
  static constexpr std::array<const char*, 4> replies = {
      "That's an interesting question. I'm happy to chat with you.",
      "I'm doing well, thank you for asking. Is there anything I can get for you?",
      "Good point. I'm here if you need something from the table.",
      "I see. Tell me more, or let me know if I can hand you something.",
  };
  return replies[text::fnv1a(query) % replies.size()];
}

}  // namespace

std::string fallback_response() {
  return "Sorry, I could not work out what to do. Could you say that another way?";
}

std::string oracle_generate_response(const PromptContext& context, const ActionSequence& actions,
                                     std::span<const GraspOutcome> outcomes, const Lexicon& lexicon) {
  std::vector<std::string> sentences;
  if (actions.contains(ActionKind::Refuse)) {
    return "I'm sorry, but I can't help with that. It could hurt someone, so I have to refuse.";
  }
  for (const auto& o : outcomes) sentences.push_back(outcome_sentence(o));

  const IntentClass intent = classify_intent(context, context.query, lexicon);
  if (const Confirm* c = actions.confirm()) {
    std::vector<std::string> items;
    for (const auto& a : c->proposal) {
      if (const auto* g = a.as_grasp()) items.push_back("the " + g->target);
    }
    std::string offer = items.empty() ? std::string("help you with that")
                                      : "get you " + text::join(items, " and ");
    if (const auto* need = std::get_if<AmbiguousNeed>(&intent)) {
      sentences.push_back("It sounds like you want to " + need->purpose + ". Would you like me to " + offer + "?");
    } else {
      sentences.push_back("Would you like me to " + offer + "?");
    }
  }

  if (sentences.empty()) {
    if (const auto* miss = std::get_if<NonexistentRequest>(&intent)) {
      const ObjectInstance* obj = context.scene.find(miss->target);
      sentences.push_back(obj ? outcome_sentence({miss->target, GraspStatus::NotGraspable})
                              : outcome_sentence({miss->target, GraspStatus::AbsentObject}));
    } else if (const auto* need = std::get_if<AmbiguousNeed>(&intent)) {
      sentences.push_back("Sorry, I don't see anything here that would help you " + need->purpose + ".");
    } else if (const auto* reply = std::get_if<ConfirmationReply>(&intent);
               reply && reply->reply == ReplyClass::Decline) {
      sentences.push_back("Okay, I won't do that. Let me know if you need anything else.");
    } else if (std::holds_alternative<SmallTalk>(intent)) {
      sentences.push_back(small_talk(context.query));
    } else {
      sentences.push_back("Okay.");
    }
  }
  return text::join(sentences, " ");
}

ActionSequence OracleBackend::decide_actions(const PromptContext& context) {
  return oracle_decide_actions(context, lexicon_);
}

std::string OracleBackend::generate_response(const PromptContext& context, const ActionSequence& actions,
                                             std::span<const GraspOutcome> outcomes) {
  return oracle_generate_response(context, actions, outcomes, lexicon_);
}

}  // namespace manidialog
