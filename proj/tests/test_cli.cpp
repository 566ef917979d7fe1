#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "manidialog/error.hpp"
#include "support.hpp"

using namespace manidialog;
using testing_support::data_path;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run_cli(std::vector<std::string> args, const std::string& input = "") {
  args.insert(args.begin(), "manidialog");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), in, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("manidialog_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> common() { return {"--scenarios", data_path("scenarios.json")}; }

}  // namespace

TEST(Cli, ReplTranscript) {
  auto args = common();
  args.insert(args.end(), {"repl", "--scenario", "kitchen-1"});
  const CliRun r = run_cli(args, "hand me the apple\nI need to cut something\nyes please\n/quit\n");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto first = r.out.find("> ");
  ASSERT_NE(first, std::string::npos);
  EXPECT_EQ(r.out.substr(first),
            "> Action: grasp(apple)\n"
            "AI: Here is the apple. I have handed it over to you.\n"
            "Removed: apple\n"
            "> Action: confirm(grasp(knife))\n"
            "AI: It sounds like you want to cut. Would you like me to get you the knife?\n"
            "(awaiting confirmation)\n"
            "> Action: grasp(knife)\n"
            "AI: Here is the knife. I have handed it over to you.\n"
            "Removed: knife\n"
            "> \n");
}

TEST(Cli, ReplMetaCommands) {
  auto args = common();
  args.insert(args.end(), {"repl", "--scenario", "kitchen-1"});
  const CliRun r = run_cli(args, "hand me the apple\n/reset\n/state\n");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("(reset)"), std::string::npos);
  EXPECT_NE(r.out.find("\"history\": []"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  auto args = common();
  args.insert(args.end(), {"--backend", "gpt", "repl"});
  EXPECT_EQ(run_cli(args).code, 1);
  args = common();
  args.insert(args.end(), {"repl", "--scenario", "mars"});
  EXPECT_EQ(run_cli(args).code, 1);
  EXPECT_EQ(run_cli({"--no-such-flag"}).code, 1);
  EXPECT_EQ(run_cli({"train"}).code, 1);  // --corpus is required
  EXPECT_EQ(run_cli({"--version"}).code, 0);
}

TEST(Cli, ConfigRejectsUnknownKeys) {
  EXPECT_THROW(cli::config_from_json({{"backnd", "oracle"}}), Error);
  EXPECT_THROW(cli::config_from_json({{"train", {{"epochz", 3}}}}), Error);
  EXPECT_THROW(cli::config_from_json({{"backend", 3}}), Error);
  const auto c = cli::config_from_json({{"backend", "toy"}, {"train", {{"epochs", 3}}}});
  EXPECT_EQ(c.backend, "toy");
  EXPECT_EQ(c.train.epochs, 3);
  EXPECT_EQ(cli::config_from_json(cli::to_json(c)).train.epochs, 3);
}

TEST(Cli, EnvironmentOverridesFile) {
  cli::Config c;
  c.backend = "toy";
  ::setenv("MANIDIALOG_BACKEND", "remote", 1);
  ::setenv("MANIDIALOG_LLM_KEY", "secret", 1);
  const cli::Config e = cli::apply_environment(c);
  ::unsetenv("MANIDIALOG_BACKEND");
  ::unsetenv("MANIDIALOG_LLM_KEY");
  EXPECT_EQ(e.backend, "remote");
  EXPECT_EQ(e.remote.api_key, "secret");
  EXPECT_EQ(cli::to_json(e).dump().find("secret"), std::string::npos);
  EXPECT_NE(cli::config_hash(c), cli::config_hash(e));
}

TEST(Cli, FlagsOverrideEnvironment) {
  const auto dir = scratch("precedence");
  ::setenv("MANIDIALOG_BACKEND", "gpt", 1);
  auto args = common();
  args.insert(args.end(), {"--backend", "oracle", "eval", "--out", dir.string()});
  const CliRun r = run_cli(args);
  ::unsetenv("MANIDIALOG_BACKEND");
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST(Cli, EvalWritesReport) {
  const auto dir = scratch("eval");
  auto args = common();
  args.insert(args.end(), {"eval", "--suite", data_path("suite.jsonl"), "--sessions", data_path("sessions.jsonl"),
                           "--run-sessions", "--out", dir.string()});
  const CliRun r = run_cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(dir / "report.txt").find("100.0%"), std::string::npos);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(report.at("overall").at("correct"), 150);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest.at("command"), "eval");
  EXPECT_TRUE(manifest.contains("config_hash"));
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "sessions.json")).size(), 10u);
}

TEST(Cli, DatagenThenTrainIsDeterministic) {
  const auto dir = scratch("pipeline");
  const auto corpus = (dir / "corpus.jsonl").string();
  std::vector<std::string> gen = {"datagen",   "--count", "10", "--out", corpus, "--seeds", data_path("seeds.jsonl"),
                                  "--seed",    "3"};
  std::vector<std::string> g = common();
  g.insert(g.end(), gen.begin(), gen.end());
  // datagen draws scenes from the configured datagen scenario file
  const fs::path cfg = dir / "config.json";
  std::ofstream(cfg) << nlohmann::json{{"datagen", {{"scenarios", data_path("datagen_scenarios.json")}}}}.dump();
  g.insert(g.begin(), {"--config", cfg.string()});
  CliRun r = run_cli(g);
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(slurp(corpus));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) n += !line.empty();
  EXPECT_EQ(n, 10);
  EXPECT_TRUE(fs::exists(corpus + ".manifest.json"));

  const auto a = (dir / "a.json").string();
  const auto b = (dir / "b.json").string();
  for (const auto& out : {a, b}) {
    r = run_cli({"train", "--corpus", corpus, "--out", out, "--epochs", "2", "--seed", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(slurp(a), slurp(b));
  const auto manifest = nlohmann::json::parse(slurp(a + ".manifest.json"));
  EXPECT_EQ(manifest.at("seed"), 5);
  EXPECT_EQ(manifest.at("outputs").at("loss_trace").size(), 3u);

  // the trained checkpoint serves as a backend
  auto repl = common();
  repl.insert(repl.end(), {"--backend", "toy", "--checkpoint", a, "repl", "--scenario", "kitchen-1"});
  r = run_cli(repl, "hand me the apple\n");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Action: "), std::string::npos);
}
