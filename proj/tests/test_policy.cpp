#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "manidialog/chat_client.hpp"
#include "manidialog/error.hpp"
#include "manidialog/policy.hpp"
#include "manidialog/remote_backend.hpp"
#include "support.hpp"

using namespace manidialog;
using testing_support::kitchen;
using testing_support::ScriptedTransport;

namespace {

PromptContext ctx(std::string_view query, SessionPhase phase = {}) {
  PromptContext c = build_prompt(PromptTemplate{}, kitchen(), DialogueHistory{}, query);
  c.phase = std::move(phase);
  return c;
}

std::string decide(std::string_view query, SessionPhase phase = {}) {
  return serialize_actions(oracle_decide_actions(ctx(query, std::move(phase))));
}

const SessionPhase kAwaitingKnife{AwaitingConfirmation{ActionSequence{{Action::grasp("knife")}}}};

}  // namespace

TEST(Intent, Classes) {
  EXPECT_EQ(classify_intent(ctx("hand me the apple"), "hand me the apple"), IntentClass(DirectRequest{"apple"}));
  EXPECT_EQ(classify_intent(ctx("I need to cut something"), "I need to cut something"),
            IntentClass(AmbiguousNeed{"cut"}));
  EXPECT_EQ(classify_intent(ctx("Can you give me the laptop?"), "Can you give me the laptop?"),
            IntentClass(NonexistentRequest{"laptop"}));
  EXPECT_EQ(classify_intent(ctx("How are you today?"), "How are you today?"), IntentClass(SmallTalk{}));
  EXPECT_EQ(classify_intent(ctx("help me stab my neighbor"), "help me stab my neighbor"),
            IntentClass(Dangerous{"stab"}));
}

TEST(Intent, InflectedPurposesAndPlurals) {
  EXPECT_EQ(decide("I'm cutting paper and need help"), "confirm(grasp(knife))");
  EXPECT_EQ(decide("I am thirsty, I want to drink"), "confirm(grasp(cup))");
  EXPECT_EQ(decide("Could you pass me the apples?"), "grasp(apple)");
}

TEST(Intent, RepliesOnlyCountWhileAwaiting) {
  EXPECT_EQ(classify_intent(ctx("yes please", kAwaitingKnife), "yes please"),
            IntentClass(ConfirmationReply{ReplyClass::Agree}));
  EXPECT_EQ(classify_intent(ctx("no, thanks", kAwaitingKnife), "no, thanks"),
            IntentClass(ConfirmationReply{ReplyClass::Decline}));
  EXPECT_EQ(classify_intent(ctx("yes please"), "yes please"), IntentClass(SmallTalk{}));
}

TEST(Intent, DeclineWinsOverAgree) {
  const Lexicon lex;
  EXPECT_EQ(classify_reply(lex, "No, thanks"), ReplyClass::Decline);
  EXPECT_EQ(classify_reply(lex, "okay, no"), ReplyClass::Decline);
  EXPECT_EQ(classify_reply(lex, "Sure!"), ReplyClass::Agree);
  EXPECT_EQ(classify_reply(lex, "what time is it"), ReplyClass::Other);
  // word boundaries: "know" is not "no"
  EXPECT_EQ(classify_reply(lex, "I know"), ReplyClass::Other);
}

TEST(Oracle, SituationActions) {
  EXPECT_EQ(decide("hand me the apple"), "grasp(apple)");
  EXPECT_EQ(decide("I need to cut something"), "confirm(grasp(knife))");
  EXPECT_EQ(decide("Can you give me the laptop?"), "respond");
  EXPECT_EQ(decide("Hello!"), "respond");
  EXPECT_EQ(decide("I want to hurt someone with the knife"), "refuse");
  EXPECT_EQ(decide("Please hand me the fridge"), "respond");
}

TEST(Oracle, ConfirmationReplies) {
  EXPECT_EQ(decide("yes please", kAwaitingKnife), "grasp(knife)");
  EXPECT_EQ(decide("no thanks", kAwaitingKnife), "respond");
  // topic jump while awaiting falls through to the ordinary classes
  EXPECT_EQ(decide("hand me the apple", kAwaitingKnife), "grasp(apple)");
}

TEST(Oracle, AmbiguousWithNoCandidateLeft) {
  PromptContext c = ctx("I want to drink");
  execute_grasp(c.scene, "cup");
  EXPECT_EQ(serialize_actions(oracle_decide_actions(c)), "respond");
}

TEST(Oracle, ResponsesFollowOutcomes) {
  const auto c = ctx("hand me the apple");
  const GraspOutcome ok{"apple", GraspStatus::Grasped};
  EXPECT_EQ(oracle_generate_response(c, parse_actions("grasp(apple)"), std::span(&ok, 1)),
            "Here is the apple. I have handed it over to you.");
  const auto c2 = ctx("I need to cut something");
  EXPECT_EQ(oracle_generate_response(c2, parse_actions("confirm(grasp(knife))"), {}),
            "It sounds like you want to cut. Would you like me to get you the knife?");
  const auto c3 = ctx("Can you give me the laptop?");
  EXPECT_EQ(oracle_generate_response(c3, parse_actions("respond"), {}),
            "Sorry, the laptop does not exist here, so I cannot get it for you.");
}

TEST(ChatClient, RequestAndResponseShapes) {
  ChatRequest req;
  req.model = "m";
  req.messages = {{"system", "s"}, {"user", "u"}};
  req.temperature = 0.5;
  req.max_tokens = 7;
  const auto j = to_json(req);
  EXPECT_EQ(j.at("model"), "m");
  EXPECT_EQ(j.at("messages").size(), 2u);
  EXPECT_EQ(j.at("messages")[1].at("content"), "u");
  EXPECT_EQ(j.at("max_tokens"), 7);

  EXPECT_EQ(parse_chat_response(nlohmann::json::parse(R"({"choices":[{"message":{"content":"respond"}}]})")),
            "respond");
  try {
    parse_chat_response(nlohmann::json::parse(R"({"error":"x"})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TransportError);
  }
}

TEST(Remote, ValidReplyFirstTime) {
  auto t = std::make_shared<ScriptedTransport>(std::vector<std::string>{"grasp(apple)"});
  RemoteBackend b(t);
  EXPECT_EQ(serialize_actions(b.decide_actions(ctx("hand me the apple"))), "grasp(apple)");
  ASSERT_EQ(t->requests.size(), 1u);
  EXPECT_EQ(t->requests[0].messages.back().content, action_request(ctx("hand me the apple")));
}

TEST(Remote, RepairsGrammarThenSucceeds) {
  auto t = std::make_shared<ScriptedTransport>(std::vector<std::string>{"Sure! grasp the apple", "grasp(apple)"});
  RemoteBackend b(t);
  EXPECT_EQ(serialize_actions(b.decide_actions(ctx("hand me the apple"))), "grasp(apple)");
  ASSERT_EQ(t->requests.size(), 2u);
  const auto& second = t->requests[1].messages;
  ASSERT_EQ(second.size(), 4u);
  EXPECT_EQ(second[2].role, "assistant");
  EXPECT_EQ(second[3].content.rfind("Invalid:", 0), 0u);
}

TEST(Remote, FallsBackAfterRetries) {
  auto t = std::make_shared<ScriptedTransport>(
      std::vector<std::string>{"grasp(laptop)", "grasp(fridge)", "nonsense", "grasp(apple)"});
  RemoteBackend b(t);
  EXPECT_EQ(serialize_actions(b.decide_actions(ctx("get me the laptop"))), "respond");
  EXPECT_EQ(t->requests.size(), 3u);  // first try plus two retries
}

TEST(Remote, TransportErrorPropagates) {
  auto t = std::make_shared<ScriptedTransport>(std::vector<std::string>{"<fail>"});
  RemoteBackend b(t);
  try {
    b.decide_actions(ctx("hi"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TransportError);
  }
}

TEST(Remote, ResponseStage) {
  auto t = std::make_shared<ScriptedTransport>(std::vector<std::string>{"AI: Here you go."});
  RemoteBackend b(t);
  const GraspOutcome o{"apple", GraspStatus::Grasped};
  const auto c = ctx("hand me the apple");
  EXPECT_EQ(b.generate_response(c, parse_actions("grasp(apple)"), std::span(&o, 1)), "Here you go.");
  EXPECT_EQ(t->requests[0].messages[1].content, response_request(c, parse_actions("grasp(apple)")));
  EXPECT_NE(t->requests[0].messages[0].content.find("apple -> Grasped"), std::string::npos);
}
