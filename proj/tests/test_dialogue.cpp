#include <gtest/gtest.h>

#include "manidialog/dialogue.hpp"
#include "manidialog/error.hpp"
#include "support.hpp"

using namespace manidialog;
using testing_support::kitchen;

namespace {
DialogueHistory two_turns() {
  DialogueHistory h;
  h = append_turn(h, {"hand me the apple", parse_actions("grasp(apple)"), "Here is the apple."});
  h = append_turn(h, {"how are you?", parse_actions("respond"), "I'm fine."});
  return h;
}
}  // namespace

TEST(Dialogue, ObjectList) {
  EXPECT_EQ(render_object_list({"apple", "knife"}), "an apple, a knife");
  EXPECT_EQ(render_object_list({}), "");
}

TEST(Dialogue, GoldenPrompt) {
  const PromptContext ctx = build_prompt(PromptTemplate{}, kitchen(), two_turns(), "I need to cut something");
  EXPECT_EQ(ctx.prompt,
            "You are in a kitchen. You can see an apple, a knife, a scissors, a cup, a fridge on the table.\n"
            "Human: hand me the apple\n"
            "Action: grasp(apple)\n"
            "AI: Here is the apple.\n"
            "Human: how are you?\n"
            "Action: respond\n"
            "AI: I'm fine.\n"
            "Human: I need to cut something\n");
  EXPECT_EQ(action_request(ctx), ctx.prompt + "Action:");
  EXPECT_EQ(response_request(ctx, parse_actions("confirm(grasp(knife))")),
            ctx.prompt + "Action: confirm(grasp(knife))\nAI:");
}

TEST(Dialogue, EmptySceneUsesAlternatePreamble) {
  Scene s = kitchen();
  s.objects.clear();
  EXPECT_EQ(render_preamble(PromptTemplate{}, s), "You are in a kitchen. You can see no objects.");
}

TEST(Dialogue, EveryLabelAppearsOnceInPreamble) {
  const Scene s = kitchen();
  const std::string p = render_preamble(PromptTemplate{}, s);
  for (const auto& l : s.labels()) {
    const auto first = p.find(" " + l);
    ASSERT_NE(first, std::string::npos) << l;
    EXPECT_EQ(p.find(" " + l + ",", first + 1), std::string::npos) << l;
  }
}

TEST(Dialogue, HistoryWindow) {
  DialogueHistory h;
  for (int i = 0; i < 12; ++i) {
    h = append_turn(h, {"q" + std::to_string(i), parse_actions("respond"), "r" + std::to_string(i)});
  }
  PromptTemplate t;
  t.max_turns = 3;
  const std::string rendered = render_history(t, h);
  EXPECT_EQ(rendered.find("q8\n"), std::string::npos);
  EXPECT_NE(rendered.find("Human: q9\n"), std::string::npos);
  EXPECT_NE(rendered.find("Human: q11\n"), std::string::npos);
}

TEST(Dialogue, AppendIsPersistent) {
  const DialogueHistory h0;
  const DialogueHistory h1 = append_turn(h0, {"a", parse_actions("respond"), "b"});
  EXPECT_TRUE(h0.empty());
  EXPECT_EQ(h1.size(), 1u);
}

TEST(Dialogue, IncompleteTurnRejected) {
  try {
    append_turn({}, {"", parse_actions("respond"), "b"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IncompleteTurn);
  }
  EXPECT_THROW(append_turn({}, {"a", parse_actions("respond"), ""}), Error);
}
