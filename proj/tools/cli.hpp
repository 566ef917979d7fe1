#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace manidialog::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kRuntime = 2 };

struct RemoteSettings {
  std::string url;
  std::string api_key;
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;
  int max_tokens = 256;
  int max_retries = 2;
  int timeout_ms = 30000;
};

struct TrainSettings {
  double lambda = 1.0;
  double learning_rate = 0.01;
  int epochs = 12;
  int batch_size = 16;
  std::uint64_t seed = 7;
  double init_scale = 0.1;
  double clip_norm = 5.0;
  int embed_dim = 24;
  int hidden_dim = 64;
  int history_turns = 8;
};

struct DatagenSettings {
  std::string seeds = "data/seeds.jsonl";
  std::string scenarios = "data/datagen_scenarios.json";
  std::string generator = "synthetic";  // synthetic | remote
  std::size_t few_shot = 3;
  double dedup_threshold = 0.8;
  std::size_t retry_budget = 0;
  std::uint64_t seed = 1;
  std::size_t parallelism = 1;
};

struct Config {
  std::string scenarios = "data/scenarios.json";
  std::string backend = "oracle";
  std::string checkpoint;  // toy backend
  RemoteSettings remote;
  TrainSettings train;
  DatagenSettings datagen;
  std::string suite = "data/suite.jsonl";
  std::string sessions = "data/sessions.jsonl";
  std::size_t eval_parallelism = 1;
  std::string address = "127.0.0.1:8080";
  int idle_timeout_minutes = 30;
};

/// Throws Error(ConfigError) on unknown keys or wrong types.
Config config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Config& config);
Config load_config(const std::filesystem::path& path);
/// MANIDIALOG_BACKEND, MANIDIALOG_SCENARIOS, MANIDIALOG_CHECKPOINT,
/// MANIDIALOG_LLM_URL, MANIDIALOG_LLM_KEY, MANIDIALOG_ADDR.
Config apply_environment(Config config);

/// Hex FNV-1a of the canonical JSON form.
std::string config_hash(const Config& config);

/// Entry point shared by main() and the tests.
int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace manidialog::cli
