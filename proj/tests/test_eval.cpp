#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include <nlohmann/json.hpp>

#include "manidialog/error.hpp"
#include "manidialog/eval.hpp"
#include "support.hpp"

using namespace manidialog;
using testing_support::data_path;

namespace {

ScenarioStore store() { return ScenarioStore(load_scenarios(data_path("scenarios.json"))); }

// Always answers with the same action string.
class FixedBackend final : public PolicyBackend {
 public:
  explicit FixedBackend(std::string actions) : actions_(std::move(actions)) {}
  std::string name() const override { return "fixed"; }
  ActionSequence decide_actions(const PromptContext&) override {
    if (actions_ == "<fail>") throw Error(ErrorCode::TransportError, "down");
    return parse_actions(actions_);
  }
  std::string generate_response(const PromptContext&, const ActionSequence&,
                                std::span<const GraspOutcome>) override {
    return "ok";
  }

 private:
  std::string actions_;
};

}  // namespace

TEST(Score, Rules) {
  const std::vector<std::string> apple = {"apple"};
  const std::vector<std::string> cut = {"knife", "scissors"};
  const std::vector<std::string> laptop = {"laptop"};
  EXPECT_TRUE(score_turn(CaseType::Direct, apple, parse_actions("grasp(apple)")));
  EXPECT_FALSE(score_turn(CaseType::Direct, apple, parse_actions("grasp(apple); respond")));
  EXPECT_FALSE(score_turn(CaseType::Direct, apple, parse_actions("confirm(grasp(apple))")));
  EXPECT_TRUE(score_turn(CaseType::Ambiguous, cut, parse_actions("confirm(grasp(scissors))")));
  EXPECT_TRUE(score_turn(CaseType::Ambiguous, cut, parse_actions("confirm(grasp(knife); grasp(scissors))")));
  EXPECT_FALSE(score_turn(CaseType::Ambiguous, cut, parse_actions("confirm(grasp(apple))")));
  EXPECT_FALSE(score_turn(CaseType::Ambiguous, cut, parse_actions("grasp(knife)")));
  EXPECT_FALSE(score_turn(CaseType::Ambiguous, cut, parse_actions("confirm(respond)")));
  EXPECT_TRUE(score_turn(CaseType::Nonexistent, laptop, parse_actions("respond")));
  EXPECT_FALSE(score_turn(CaseType::Nonexistent, laptop, parse_actions("grasp(laptop)")));
  EXPECT_FALSE(score_turn(CaseType::Nonexistent, laptop, parse_actions("refuse")));
  EXPECT_FALSE(score_turn(CaseType::Nonexistent, laptop, parse_actions("respond; confirm(grasp(cup))")));
}

TEST(Suite, FixtureShape) {
  const auto s = store();
  const auto cases = load_suite(data_path("suite.jsonl"), s);
  ASSERT_EQ(cases.size(), 150u);
  std::array<int, 3> per{};
  for (const auto& c : cases) ++per[static_cast<std::size_t>(c.type)];
  EXPECT_EQ(per, (std::array<int, 3>{50, 50, 50}));
}

TEST(Suite, CaseInvariants) {
  const auto s = store();
  EXPECT_EQ(check_case({"x", "hand me the apple", "kitchen-1", CaseType::Direct, {"apple"}}, s), "");
  EXPECT_NE(check_case({"x", "hand me the laptop", "kitchen-1", CaseType::Direct, {"laptop"}}, s), "");
  EXPECT_NE(check_case({"x", "hand me the apple", "kitchen-1", CaseType::Nonexistent, {"apple"}}, s), "");
  EXPECT_NE(check_case({"x", "q", "nowhere", CaseType::Direct, {"apple"}}, s), "");
}

TEST(Suite, OracleScoresPerfectly) {
  const auto s = store();
  const auto cases = load_suite(data_path("suite.jsonl"), s);
  OracleBackend oracle;
  const EvalReport r = run_single_turn_suite(oracle, s, cases);
  EXPECT_EQ(r.overall.correct, 150u);
  for (const auto& t : r.by_type) EXPECT_EQ(t.correct, t.total);
  for (const auto& c : r.cases) EXPECT_TRUE(c.correct) << c.id << " -> " << c.actions;
}

TEST(Suite, OverallIsCountWeightedMean) {
  const auto s = store();
  const auto cases = load_suite(data_path("suite.jsonl"), s);
  FixedBackend respond("respond");
  const EvalReport r = run_single_turn_suite(respond, s, cases);
  double weighted = 0;
  for (const auto& t : r.by_type) weighted += t.accuracy() * double(t.total);
  EXPECT_NEAR(r.overall.accuracy(), weighted / double(r.overall.total), 1e-15);
  EXPECT_EQ(r.by_type[static_cast<std::size_t>(CaseType::Nonexistent)].correct, 50u);
  EXPECT_EQ(r.overall.correct, 50u);
}

TEST(Suite, ShuffleAndParallelismInvariant) {
  const auto s = store();
  auto cases = load_suite(data_path("suite.jsonl"), s);
  OracleBackend oracle;
  const auto base = run_single_turn_suite(oracle, s, cases);
  std::shuffle(cases.begin(), cases.end(), std::mt19937_64(4));
  SuiteOptions opt;
  opt.parallelism = 8;
  const auto shuffled = run_single_turn_suite(oracle, s, cases, opt);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(base.by_type[i].correct, shuffled.by_type[i].correct);
  EXPECT_EQ(render_report_table(base).substr(0, 200), render_report_table(shuffled).substr(0, 200));
}

TEST(Suite, TransportFailuresCountAsWrong) {
  const auto s = store();
  const auto cases = load_suite(data_path("suite.jsonl"), s);
  FixedBackend down("<fail>");
  const EvalReport r = run_single_turn_suite(down, s, cases);
  EXPECT_EQ(r.overall.total, 150u);
  EXPECT_EQ(r.overall.correct, 0u);
  EXPECT_FALSE(r.cases[0].error.empty());
}

TEST(Suite, EmptyRejected) {
  OracleBackend oracle;
  try {
    run_single_turn_suite(oracle, store(), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PreconditionFailed);
  }
}

TEST(Report, TableAndJson) {
  const auto s = store();
  const auto cases = load_suite(data_path("suite.jsonl"), s);
  OracleBackend oracle;
  const auto r = run_single_turn_suite(oracle, s, cases);
  const std::string table = render_report_table(r);
  EXPECT_NE(table.find("| Method"), std::string::npos);
  EXPECT_NE(table.find("Directly specified"), std::string::npos);
  EXPECT_NE(table.find("Ambiguously described"), std::string::npos);
  EXPECT_NE(table.find("Not-existing"), std::string::npos);
  EXPECT_NE(table.find("84.6%"), std::string::npos);
  EXPECT_NE(table.find("reference only"), std::string::npos);
  const auto j = to_json(r);
  EXPECT_EQ(j.at("reference").at("reference_only"), true);
  EXPECT_EQ(j.at("reference").at("accuracy"), 84.6);
  EXPECT_EQ(j.at("reference").at("direct"), 90.0);
  EXPECT_EQ(j.at("reference").at("ambiguous"), 88.0);
  EXPECT_EQ(j.at("reference").at("nonexistent"), 76.0);
  EXPECT_EQ(j.at("overall").at("accuracy"), 1.0);
}

TEST(Sessions, OracleScriptsPerfect) {
  const auto s = store();
  const auto scripts = load_scripts(data_path("sessions.jsonl"));
  ASSERT_EQ(scripts.size(), 10u);
  OracleBackend oracle;
  for (const auto& script : scripts) {
    const SessionMetrics m = run_session(oracle, s, script);
    EXPECT_EQ(m.rounds, 10u);
    EXPECT_EQ(m.steps.correct, m.steps.total) << script.id;
    EXPECT_EQ(m.confirms_offered, 2u);
    EXPECT_EQ(m.confirms_accepted, 1u);
    EXPECT_EQ(m.confirms_declined, 1u);
    EXPECT_EQ(m.proposals_executed, 1u);
  }
}

TEST(Sessions, ScriptValidation) {
  const nlohmann::json dangling = {
      {"scenario_id", "kitchen-1"},
      {"steps", {{{"human", "I need to cut something"}, {"situation", "S3"}, {"expected", "confirm"}}}}};
  EXPECT_THROW(script_from_json(dangling), Error);
  nlohmann::json unknown = dangling;
  unknown["extra"] = 1;
  EXPECT_THROW(script_from_json(unknown), Error);
}

TEST(Sessions, ReplyWhileIdleIsViolation) {
  const nlohmann::json j = {
      {"id", "bad"},
      {"scenario_id", "kitchen-1"},
      {"steps",
       {{{"human", "I need to cut something"}, {"situation", "S3"}, {"expected", "confirm"}},
        {{"human", "yes please"}, {"situation", "S3"}, {"expected", "grasp"}, {"confirmation", "agree"}},
        {{"human", "yes please"}, {"situation", "S3"}, {"expected", "grasp"}, {"confirmation", "agree"}}}}};
  const SessionScript script = script_from_json(j);
  OracleBackend oracle;
  try {
    run_session(oracle, store(), script);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ScriptViolation);
  }
}
