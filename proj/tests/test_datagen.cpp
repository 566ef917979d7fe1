#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <mutex>

#include <nlohmann/json.hpp>

#include "manidialog/datagen.hpp"
#include "manidialog/error.hpp"
#include "manidialog/synthetic.hpp"
#include "support.hpp"

using namespace manidialog;
using testing_support::data_path;
using testing_support::kitchen;

namespace {

DialogueRecord two_turn() {
  return {"r1",
          "You are in a kitchen. You can see an apple, a knife on the table.",
          {"apple", "knife"},
          {{"hand me the apple", "grasp(apple)", "Here is the apple."},
           {"what is the capital of France?", "respond", "Paris."}},
          TaskCategory::Mixed};
}

DialogueRecord with_humans(std::string id, std::vector<std::string> humans) {
  DialogueRecord r{std::move(id), "instr", {"apple"}, {}, TaskCategory::Knowledge};
  for (auto& h : humans) r.turns.push_back({std::move(h), "respond", "ok"});
  return r;
}

std::vector<RecordViolation::Kind> kinds(const std::vector<RecordViolation>& v) {
  std::vector<RecordViolation::Kind> out;
  for (const auto& x : v) out.push_back(x.kind);
  return out;
}

// Returns the same reply for every prompt.
class EchoGenerator final : public TextGenerator {
 public:
  explicit EchoGenerator(std::string reply) : reply_(std::move(reply)) {}
  std::string generate(const std::string&) override {
    ++calls;
    return reply_;
  }
  std::atomic<int> calls{0};

 private:
  std::string reply_;
};

// Alternates a malformed reply with a valid, distinct record.
class FlakyGenerator final : public TextGenerator {
 public:
  std::string generate(const std::string&) override {
    std::lock_guard lock(mutex_);
    ++calls;
    if (calls % 2 == 1) return "I am not JSON at all";
    static const std::vector<std::string> words = {"apple", "banana", "cherry", "melon", "grape",
                                                   "lemon", "mango",  "peach",  "plum",  "kiwi"};
    const std::string w = words[static_cast<std::size_t>(calls / 2) % words.size()];
    nlohmann::json j = {{"turns", {{{"human", "tell me a fact about " + w + " number " + std::to_string(calls)},
                                    {"actions", "respond"},
                                    {"ai", "It is a fruit."}}}}};
    return "Here you go:\n" + j.dump();
  }
  int calls = 0;

 private:
  std::mutex mutex_;
};

SeedSet seeds() { return make_seed_set(read_corpus(data_path("seeds.jsonl"))); }

}  // namespace

TEST(Record, ValidateCases) {
  EXPECT_TRUE(validate_record(two_turn()).empty());
  DialogueRecord bad = two_turn();
  bad.turns[0].actions = "pick up apple";
  EXPECT_EQ(kinds(validate_record(bad)), std::vector{RecordViolation::Kind::GrammarViolation});
  bad = two_turn();
  bad.turns[0].actions = "grasp(scissors)";
  EXPECT_EQ(kinds(validate_record(bad)), std::vector{RecordViolation::Kind::UngroundedTarget});
  bad = two_turn();
  bad.turns.clear();
  EXPECT_EQ(kinds(validate_record(bad)), std::vector{RecordViolation::Kind::NoTurns});
  bad = two_turn();
  bad.turns[1].ai = "";
  EXPECT_EQ(kinds(validate_record(bad)), std::vector{RecordViolation::Kind::EmptyField});
}

TEST(Record, JsonFieldsExact) {
  const auto j = to_json(two_turn());
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"category", "id", "instruction", "objects", "turns"}));
  EXPECT_EQ(record_from_json(j), two_turn());
  auto extra = j;
  extra["score"] = 1;
  EXPECT_THROW(record_from_json(extra), Error);
}

TEST(Record, CorpusFileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "manidialog_corpus_test.jsonl";
  const std::vector<DialogueRecord> rs = {two_turn(), with_humans("r2", {"hi"})};
  write_corpus(path, rs);
  EXPECT_EQ(read_corpus(path), rs);
  std::filesystem::remove(path);
}

TEST(Categorize, Rules) {
  EXPECT_EQ(categorize(with_humans("a", {"how are you?", "tell me a joke"})), TaskCategory::Knowledge);
  DialogueRecord embodied{"b", "i", {"apple", "knife"},
                          {{"hand me the apple", "grasp(apple)", "ok"},
                           {"I need to cut", "confirm(grasp(knife))", "knife?"}},
                          TaskCategory::Knowledge};
  EXPECT_EQ(categorize(embodied), TaskCategory::Embodied);
  EXPECT_EQ(categorize(two_turn()), TaskCategory::Mixed);
}

TEST(Dedup, HandComputedJaccard) {
  // a = {the, red, apple, is, sweet, and, ripe, today, really, nice}
  // b = a minus "nice": |a & b| = 9, |a | b| = 10 -> 0.9
  // c = {the, weather, in, paris} shares only "the" with a: 1/13
  const auto a = with_humans("a", {"the red apple is sweet and ripe today really nice"});
  const auto b = with_humans("b", {"the red apple is sweet and ripe today really"});
  const auto c = with_humans("c", {"the weather in paris"});
  EXPECT_NEAR(human_similarity(a, b), 0.9, 1e-12);
  EXPECT_NEAR(human_similarity(a, c), 1.0 / 13.0, 1e-12);
  const std::vector<DialogueRecord> rs = {a, b, c};
  const auto kept = dedup(rs, 0.8);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].id, "a");
  EXPECT_EQ(kept[1].id, "c");
  EXPECT_EQ(dedup(rs, 1.0).size(), 3u);
  const std::vector<DialogueRecord> twins = {a, a};
  EXPECT_EQ(dedup(twins, 1.0).size(), 1u);
  EXPECT_EQ(dedup(kept, 0.8), kept);
}

TEST(DerivedTasks, CountsAndBlanking) {
  DialogueRecord r = two_turn();
  r.turns.push_back({"thanks", "respond", "You're welcome."});
  const auto tasks = derive_training_tasks(r);
  ASSERT_EQ(tasks.size(), 6u);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& t = tasks[i];
    EXPECT_EQ(t.turn, i / 2);
    if (t.kind == DerivedTask::Kind::ActionPrediction) {
      EXPECT_TRUE(t.context.ends_with("Action: "));
      EXPECT_EQ(t.target, r.turns[t.turn].actions);
    } else {
      EXPECT_TRUE(t.context.ends_with("Action: " + r.turns[t.turn].actions + "\nAI: "));
      EXPECT_EQ(t.target, r.turns[t.turn].ai);
    }
  }
  EXPECT_NE(tasks[4].context.find("Human: hand me the apple\nAction: grasp(apple)\nAI: Here is the apple.\n"
                                  "Human: what is the capital of France?\nAction: respond\nAI: Paris.\n"),
            std::string::npos);
}

TEST(Seeds, FixtureIsValid) {
  const SeedSet s = seeds();
  EXPECT_EQ(s.records.size(), 50u);
  for (const auto& r : s.records) EXPECT_TRUE(validate_record(r).empty()) << r.id;
  EXPECT_THROW(make_seed_set({}), Error);
}

TEST(Generate, PromptCarriesExemplarsAndScenario) {
  const SeedSet s = seeds();
  const std::string p = make_generation_prompt(std::span(s.records).first(3), kitchen());
  EXPECT_NE(p.find("Scenario id: kitchen-1\n"), std::string::npos);
  EXPECT_NE(p.find("Objects: apple, knife, scissors, cup, fridge\n"), std::string::npos);
  EXPECT_NE(p.find(s.records[0].turns[0].human), std::string::npos);
}

TEST(Generate, CountZeroRejected) {
  EchoGenerator g("{}");
  const Scene k = kitchen();
  EXPECT_THROW(generate(seeds(), std::span(&k, 1), g, 0), Error);
}

TEST(Generate, EchoedRecordExhaustsBudget) {
  const std::string reply = to_json(two_turn()).dump();
  EchoGenerator g(reply);
  const Scene k = kitchen();
  GenerateOptions opt;
  opt.retry_budget = 5;
  try {
    generate(seeds(), std::span(&k, 1), g, 3, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ExhaustedBudget);
  }
  EXPECT_EQ(g.calls, 1 + 6);  // first record kept, then duplicates until the budget runs out
}

TEST(Generate, RetriesMalformedReplies) {
  FlakyGenerator g;
  const Scene k = kitchen();
  const auto out = generate(seeds(), std::span(&k, 1), g, 4);
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(g.calls, 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_TRUE(validate_record(out[i]).empty());
    EXPECT_EQ(out[i].id, "gen-00000" + std::to_string(i + 1));
    EXPECT_EQ(out[i].instruction, render_preamble(PromptTemplate{}, k));
  }
}

TEST(Generate, SyntheticParallelMatchesSerial) {
  ScenarioStore store(load_scenarios(data_path("datagen_scenarios.json")));
  SyntheticGenerator g1(store, 3), g2(store, 3);
  GenerateOptions opt;
  opt.seed = 3;
  const auto serial = generate(seeds(), store.scenes(), g1, 40, opt);
  opt.parallelism = 6;
  const auto parallel = generate(seeds(), store.scenes(), g2, 40, opt);
  EXPECT_EQ(serial, parallel);
  for (const auto& r : serial) EXPECT_TRUE(validate_record(r).empty()) << r.id;
}

TEST(Synthetic, CoversAllSituations) {
  ScenarioStore store(load_scenarios(data_path("scenarios.json")));
  const auto corpus = synthesize_corpus(store, 200, 5);
  ASSERT_EQ(corpus.size(), 200u);
  bool grasp = false, confirm = false, refuse = false, respond = false;
  for (const auto& r : corpus) {
    EXPECT_TRUE(validate_record(r).empty()) << r.id;
    for (const auto& t : r.turns) {
      grasp |= t.actions.starts_with("grasp");
      confirm |= t.actions.starts_with("confirm");
      refuse |= t.actions == "refuse";
      respond |= t.actions == "respond";
    }
  }
  EXPECT_TRUE(grasp && confirm && refuse && respond);
}
