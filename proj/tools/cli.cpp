#include "cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <thread>

#include <CLI11.hpp>

#include "manidialog/chat_client.hpp"
#include "manidialog/datagen.hpp"
#include "manidialog/error.hpp"
#include "manidialog/eval.hpp"
#include "manidialog/http_api.hpp"
#include "manidialog/remote_backend.hpp"
#include "manidialog/session.hpp"
#include "manidialog/synthetic.hpp"
#include "manidialog/text.hpp"
#include "manidialog/toy_backend.hpp"
#include "manidialog/version.hpp"

namespace manidialog::cli {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::ConfigError, std::string("config key '") + key + "' has the wrong type");
  }
}

void allow_only(const json& j, std::string_view section, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config section '" + std::string(section) + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      const std::string where = section.empty() ? key : std::string(section) + "." + key;
      throw Error(ErrorCode::ConfigError, "unknown config key '" + where + "'");
    }
  }
}

}  // namespace

Config config_from_json(const json& j) {
  allow_only(j, "", {"scenarios", "backend", "checkpoint", "remote", "train", "datagen", "eval", "server"});
  Config c;
  read(j, "scenarios", c.scenarios);
  read(j, "backend", c.backend);
  read(j, "checkpoint", c.checkpoint);
  if (j.contains("remote")) {
    const json& r = j.at("remote");
    allow_only(r, "remote", {"url", "api_key", "model", "temperature", "max_tokens", "max_retries", "timeout_ms"});
    read(r, "url", c.remote.url);
    read(r, "api_key", c.remote.api_key);
    read(r, "model", c.remote.model);
    read(r, "temperature", c.remote.temperature);
    read(r, "max_tokens", c.remote.max_tokens);
    read(r, "max_retries", c.remote.max_retries);
    read(r, "timeout_ms", c.remote.timeout_ms);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    allow_only(t, "train", {"lambda", "learning_rate", "epochs", "batch_size", "seed", "init_scale", "clip_norm",
                            "embed_dim", "hidden_dim", "history_turns"});
    read(t, "lambda", c.train.lambda);
    read(t, "learning_rate", c.train.learning_rate);
    read(t, "epochs", c.train.epochs);
    read(t, "batch_size", c.train.batch_size);
    read(t, "seed", c.train.seed);
    read(t, "init_scale", c.train.init_scale);
    read(t, "clip_norm", c.train.clip_norm);
    read(t, "embed_dim", c.train.embed_dim);
    read(t, "hidden_dim", c.train.hidden_dim);
    read(t, "history_turns", c.train.history_turns);
  }
  if (j.contains("datagen")) {
    const json& d = j.at("datagen");
    allow_only(d, "datagen", {"seeds", "scenarios", "generator", "few_shot", "dedup_threshold", "retry_budget",
                              "seed", "parallelism"});
    read(d, "seeds", c.datagen.seeds);
    read(d, "scenarios", c.datagen.scenarios);
    read(d, "generator", c.datagen.generator);
    read(d, "few_shot", c.datagen.few_shot);
    read(d, "dedup_threshold", c.datagen.dedup_threshold);
    read(d, "retry_budget", c.datagen.retry_budget);
    read(d, "seed", c.datagen.seed);
    read(d, "parallelism", c.datagen.parallelism);
  }
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    allow_only(e, "eval", {"suite", "sessions", "parallelism"});
    read(e, "suite", c.suite);
    read(e, "sessions", c.sessions);
    read(e, "parallelism", c.eval_parallelism);
  }
  if (j.contains("server")) {
    const json& s = j.at("server");
    allow_only(s, "server", {"address", "idle_timeout_minutes"});
    read(s, "address", c.address);
    read(s, "idle_timeout_minutes", c.idle_timeout_minutes);
  }
  return c;
}

json to_json(const Config& c) {
  return {
      {"scenarios", c.scenarios},
      {"backend", c.backend},
      {"checkpoint", c.checkpoint},
      // The API key is deliberately left out so manifests never carry it.
      {"remote",
       {{"url", c.remote.url},
        {"model", c.remote.model},
        {"temperature", c.remote.temperature},
        {"max_tokens", c.remote.max_tokens},
        {"max_retries", c.remote.max_retries},
        {"timeout_ms", c.remote.timeout_ms}}},
      {"train",
       {{"lambda", c.train.lambda},
        {"learning_rate", c.train.learning_rate},
        {"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"seed", c.train.seed},
        {"init_scale", c.train.init_scale},
        {"clip_norm", c.train.clip_norm},
        {"embed_dim", c.train.embed_dim},
        {"hidden_dim", c.train.hidden_dim},
        {"history_turns", c.train.history_turns}}},
      {"datagen",
       {{"seeds", c.datagen.seeds},
        {"scenarios", c.datagen.scenarios},
        {"generator", c.datagen.generator},
        {"few_shot", c.datagen.few_shot},
        {"dedup_threshold", c.datagen.dedup_threshold},
        {"retry_budget", c.datagen.retry_budget},
        {"seed", c.datagen.seed},
        {"parallelism", c.datagen.parallelism}}},
      {"eval", {{"suite", c.suite}, {"sessions", c.sessions}, {"parallelism", c.eval_parallelism}}},
      {"server", {{"address", c.address}, {"idle_timeout_minutes", c.idle_timeout_minutes}}},
  };
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
  try {
    return config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, "config " + path.string() + ": " + e.what());
  }
}

Config apply_environment(Config c) {
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (v && *v) return std::string(v);
    return std::nullopt;
  };
  if (auto v = env("MANIDIALOG_BACKEND")) c.backend = *v;
  if (auto v = env("MANIDIALOG_SCENARIOS")) c.scenarios = *v;
  if (auto v = env("MANIDIALOG_CHECKPOINT")) c.checkpoint = *v;
  if (auto v = env("MANIDIALOG_LLM_URL")) c.remote.url = *v;
  if (auto v = env("MANIDIALOG_LLM_KEY")) c.remote.api_key = *v;
  if (auto v = env("MANIDIALOG_ADDR")) c.address = *v;
  return c;
}

std::string config_hash(const Config& config) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(text::fnv1a(to_json(config).dump())));
  return buf;
}

namespace {

// ---------------------------------------------------------------------------
// Helpers

ScenarioStore load_store(const std::string& path) { return ScenarioStore(load_scenarios(path)); }

std::shared_ptr<PolicyBackend> make_backend(const Config& c, const std::string& name) {
  if (name == "oracle") return std::make_shared<OracleBackend>();
  if (name == "remote") {
    if (c.remote.url.empty()) {
      throw Error(ErrorCode::ConfigError, "remote backend needs remote.url or MANIDIALOG_LLM_URL");
    }
    RemoteEndpoint ep;
    ep.url = c.remote.url;
    ep.api_key = c.remote.api_key;
    ep.model = c.remote.model;
    ep.temperature = c.remote.temperature;
    ep.max_tokens = c.remote.max_tokens;
    ep.timeout = std::chrono::milliseconds(c.remote.timeout_ms);
    RemoteOptions opt;
    opt.model = c.remote.model;
    opt.temperature = c.remote.temperature;
    opt.max_tokens = c.remote.max_tokens;
    opt.max_retries = c.remote.max_retries;
    return std::make_shared<RemoteBackend>(std::make_shared<HttpChatTransport>(ep), opt);
  }
  if (name == "toy") {
    if (c.checkpoint.empty()) throw Error(ErrorCode::ConfigError, "toy backend needs --checkpoint");
    return std::make_shared<ToyBackend>(std::make_shared<const toy::ToyModel>(toy::load_checkpoint(c.checkpoint)));
  }
  throw Error(ErrorCode::UnknownBackend, "unknown backend '" + name + "' (oracle, remote, toy)");
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << content;
}

void write_manifest(const std::filesystem::path& path, std::string_view command, const Config& config,
                    std::uint64_t seed, json outputs) {
  json m = {{"command", command},       {"version", kVersion},   {"seed", seed},
            {"config_hash", config_hash(config)}, {"config", to_json(config)}, {"outputs", std::move(outputs)}};
  write_text(path, m.dump(2) + "\n");
}

std::filesystem::path manifest_path_for(const std::filesystem::path& artifact) {
  std::filesystem::path p = artifact;
  p += ".manifest.json";
  return p;
}

// ---------------------------------------------------------------------------
// Commands

void print_turn(std::ostream& out, const MessageResult& r) {
  out << "Action: " << r.actions << "\n";
  out << "AI: " << r.response << "\n";
  if (!r.removed.empty()) out << "Removed: " << text::join(r.removed, ", ") << "\n";
  if (r.phase_after.awaiting()) out << "(awaiting confirmation)\n";
  if (r.degraded) out << "(backend unavailable: " << r.error << ")\n";
}

int cmd_repl(const Config& c, const std::string& scenario, std::istream& in, std::ostream& out) {
  ScenarioStore store = load_store(c.scenarios);
  const Scene& scene = store.at(scenario);
  auto backend = make_backend(c, c.backend);
  EngineConfig engine;

  ConversationState state;
  state.scene = scene;
  out << render_preamble(engine.prompt, state.scene) << "\n";
  std::string line;
  while (out << "> " << std::flush, std::getline(in, line)) {
    const std::string text = text::trim(line);
    if (text.empty()) continue;
    if (text == "/quit") break;
    if (text == "/reset") {
      state = ConversationState{};
      state.scene = scene;
      out << "(reset)\n";
      continue;
    }
    if (text == "/state") {
      json s = to_json(SessionSnapshot{"repl", backend->name(), state});
      s.erase("events");
      out << s.dump(2) << "\n";
      continue;
    }
    print_turn(out, process_message(state, *backend, engine, text));
  }
  out << "\n";
  return kOk;
}

int cmd_eval(const Config& c, const std::string& out_dir, bool run_sessions, std::ostream& out) {
  ScenarioStore store = load_store(c.scenarios);
  auto backend = make_backend(c, c.backend);
  const auto cases = load_suite(c.suite, store);
  SuiteOptions opt;
  opt.parallelism = c.eval_parallelism;
  const EvalReport report = run_single_turn_suite(*backend, store, cases, opt);
  const std::string table = render_report_table(report);
  out << table;

  const std::filesystem::path dir(out_dir);
  write_text(dir / "report.txt", table);
  write_text(dir / "report.json", to_json(report).dump(2) + "\n");
  json outputs = {{"report", (dir / "report.txt").string()}, {"report_json", (dir / "report.json").string()}};

  if (run_sessions) {
    json all = json::array();
    for (const auto& script : load_scripts(c.sessions)) {
      SessionMetrics m;
      try {
        m = run_session(*backend, store, script);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ScriptViolation) throw;
        out << script.id << ": " << e.detail() << "\n";
        all.push_back({{"script_id", script.id}, {"error", e.detail()}});
        continue;
      }
      out << script.id << ": step accuracy " << 100.0 * m.steps.accuracy() << "%, rounds " << m.rounds
          << ", confirms offered " << m.confirms_offered << ", executed " << m.proposals_executed << "\n";
      all.push_back(to_json(m));
    }
    write_text(dir / "sessions.json", all.dump(2) + "\n");
    outputs["sessions"] = (dir / "sessions.json").string();
  }
  write_manifest(dir / "manifest.json", "eval", c, 0, outputs);
  return kOk;
}

int cmd_datagen(const Config& c, std::size_t count, const std::string& out_path, std::ostream& out) {
  const auto& d = c.datagen;
  ScenarioStore store = load_store(d.scenarios);
  const SeedSet seeds = make_seed_set(read_corpus(d.seeds));

  std::unique_ptr<TextGenerator> generator;
  if (d.generator == "synthetic") {
    generator = std::make_unique<SyntheticGenerator>(store, d.seed);
  } else if (d.generator == "remote") {
    if (c.remote.url.empty()) throw Error(ErrorCode::ConfigError, "remote generator needs remote.url");
    RemoteEndpoint ep;
    ep.url = c.remote.url;
    ep.api_key = c.remote.api_key;
    ep.model = c.remote.model;
    ep.timeout = std::chrono::milliseconds(c.remote.timeout_ms);
    generator = std::make_unique<ChatTextGenerator>(std::make_shared<HttpChatTransport>(ep), c.remote.model);
  } else {
    throw Error(ErrorCode::ConfigError, "unknown generator '" + d.generator + "' (synthetic, remote)");
  }

  GenerateOptions opt;
  opt.few_shot = d.few_shot;
  opt.dedup_threshold = d.dedup_threshold;
  opt.retry_budget = d.retry_budget;
  opt.seed = d.seed;
  opt.parallelism = d.parallelism;
  const auto records = generate(seeds, store.scenes(), *generator, count, opt);
  write_corpus(out_path, records);

  std::map<std::string, std::size_t> categories;
  std::size_t turns = 0;
  for (const auto& r : records) {
    ++categories[std::string(to_string(r.category))];
    turns += r.turns.size();
  }
  out << "wrote " << records.size() << " records (" << turns << " turns) to " << out_path << "\n";
  for (const auto& [k, n] : categories) out << "  " << k << ": " << n << "\n";
  write_manifest(manifest_path_for(out_path), "datagen", c, d.seed,
                 {{"corpus", out_path}, {"records", records.size()}, {"turns", turns}, {"categories", categories}});
  return kOk;
}

int cmd_train(const Config& c, const std::string& corpus_path, const std::string& out_path, std::ostream& out) {
  const auto records = read_corpus(corpus_path);
  if (records.empty()) throw Error(ErrorCode::PreconditionFailed, "corpus is empty");
  const auto& t = c.train;
  toy::ToyModel model;
  model.vocab = corpus_vocab(records);
  const auto examples = corpus_examples(model.vocab, records, static_cast<std::size_t>(std::max(0, t.history_turns)));

  toy::TrainConfig tc;
  tc.lambda = t.lambda;
  tc.learning_rate = t.learning_rate;
  tc.epochs = t.epochs;
  tc.batch_size = t.batch_size;
  tc.seed = t.seed;
  tc.init_scale = t.init_scale;
  tc.clip_norm = t.clip_norm;
  const toy::ModelDims dims{static_cast<int>(model.vocab.size()), t.embed_dim, t.hidden_dim};
  auto result = toy::train(toy::ModelParams::random(dims, t.seed, t.init_scale), examples, tc);
  model.params = std::move(result.params);
  toy::save_checkpoint(model, out_path);

  out << "vocab " << model.vocab.size() << ", examples " << examples.size() << ", parameters "
      << model.params.size() << "\n";
  for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
    out << (i == 0 ? "initial" : "epoch " + std::to_string(i)) << " loss " << result.loss_trace[i] << "\n";
  }
  write_manifest(manifest_path_for(out_path), "train", c, t.seed,
                 {{"checkpoint", out_path}, {"corpus", corpus_path}, {"loss_trace", result.loss_trace}});
  return kOk;
}

std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop = true; }

int cmd_serve(const Config& c, const std::string& snapshot_path, std::ostream& out) {
  ScenarioStore store = load_store(c.scenarios);
  std::map<std::string, std::shared_ptr<PolicyBackend>> backends = {{"oracle", make_backend(c, "oracle")}};
  if (!c.remote.url.empty()) backends["remote"] = make_backend(c, "remote");
  if (!c.checkpoint.empty()) backends["toy"] = make_backend(c, "toy");

  ManagerOptions opt;
  opt.idle_timeout = std::chrono::minutes(c.idle_timeout_minutes);
  SessionManager sessions(std::move(store), backends, opt);
  HttpServer server(sessions);
  const BindAddress addr = parse_bind_address(c.address);
  const int port = server.bind(addr);
  out << "listening on " << addr.host << ":" << port << "\n" << std::flush;

  g_stop = false;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::thread watcher([&] {
    auto last_sweep = std::chrono::steady_clock::now();
    while (!g_stop) {
      std::this_thread::sleep_for(std::chrono::milliseconds(200));
      if (std::chrono::steady_clock::now() - last_sweep > std::chrono::seconds(30)) {
        sessions.evict_idle();
        last_sweep = std::chrono::steady_clock::now();
      }
    }
    server.stop();
  });
  server.listen();
  g_stop = true;
  watcher.join();
  if (!snapshot_path.empty()) {
    sessions.save_snapshot(snapshot_path);
    out << "saved " << sessions.session_count() << " sessions to " << snapshot_path << "\n";
  }
  return kOk;
}

bool is_usage_error(ErrorCode code) {
  return code == ErrorCode::ConfigError || code == ErrorCode::UnknownBackend || code == ErrorCode::UnknownScenario;
}

}  // namespace

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dialogue-driven tabletop manipulation assistant", "manidialog"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::string config_path;
  std::optional<std::string> scenarios, backend, checkpoint;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--scenarios", scenarios, "scenario file");
  app.add_option("--backend", backend, "oracle, remote or toy");
  app.add_option("--checkpoint", checkpoint, "toy model checkpoint");

  auto* repl = app.add_subcommand("repl", "interactive session on one scenario");
  std::string scenario_id = "kitchen-1";
  repl->add_option("--scenario", scenario_id, "scenario id")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "single-turn suite and scripted sessions");
  std::optional<std::string> suite, session_file;
  std::optional<std::size_t> eval_parallelism;
  std::string eval_out = "out/eval";
  bool run_sessions = false;
  eval->add_option("--suite", suite, "suite file (jsonl)");
  eval->add_option("--sessions", session_file, "session scripts (jsonl)");
  eval->add_flag("--run-sessions", run_sessions, "also run the session scripts");
  eval->add_option("--parallelism", eval_parallelism, "cases in flight");
  eval->add_option("--out", eval_out, "output directory")->capture_default_str();

  auto* datagen = app.add_subcommand("datagen", "grow a dialogue corpus from seeds");
  std::size_t count = 100;
  std::string corpus_out = "out/corpus.jsonl";
  std::optional<std::string> seeds_path, generator;
  std::optional<std::uint64_t> datagen_seed;
  std::optional<std::size_t> datagen_parallelism;
  datagen->add_option("--count", count, "records to generate")->capture_default_str();
  datagen->add_option("--out", corpus_out, "corpus file (jsonl)")->capture_default_str();
  datagen->add_option("--seeds", seeds_path, "seed records (jsonl)");
  datagen->add_option("--generator", generator, "synthetic or remote");
  datagen->add_option("--seed", datagen_seed, "sampling seed");
  datagen->add_option("--parallelism", datagen_parallelism, "requests in flight");

  auto* train = app.add_subcommand("train", "train the toy model on a corpus");
  std::string corpus_in;
  std::string checkpoint_out = "out/toy.json";
  std::optional<int> epochs;
  std::optional<std::uint64_t> train_seed;
  std::optional<double> lambda;
  train->add_option("--corpus", corpus_in, "corpus file (jsonl)")->required();
  train->add_option("--out", checkpoint_out, "checkpoint path")->capture_default_str();
  train->add_option("--epochs", epochs, "epochs");
  train->add_option("--seed", train_seed, "initialisation and shuffling seed");
  train->add_option("--lambda", lambda, "response loss weight");

  auto* serve = app.add_subcommand("serve", "HTTP API");
  std::optional<std::string> address;
  std::string snapshot_path;
  serve->add_option("--address", address, "host:port");
  serve->add_option("--snapshot", snapshot_path, "write all sessions here on shutdown");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  Config config;
  try {
    if (!config_path.empty()) config = load_config(config_path);
    config = apply_environment(std::move(config));
    if (scenarios) config.scenarios = *scenarios;
    if (backend) config.backend = *backend;
    if (checkpoint) config.checkpoint = *checkpoint;
    if (suite) config.suite = *suite;
    if (session_file) config.sessions = *session_file;
    if (eval_parallelism) config.eval_parallelism = *eval_parallelism;
    if (seeds_path) config.datagen.seeds = *seeds_path;
    if (generator) config.datagen.generator = *generator;
    if (datagen_seed) config.datagen.seed = *datagen_seed;
    if (datagen_parallelism) config.datagen.parallelism = *datagen_parallelism;
    if (epochs) config.train.epochs = *epochs;
    if (train_seed) config.train.seed = *train_seed;
    if (lambda) config.train.lambda = *lambda;
    if (address) config.address = *address;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*repl) return cmd_repl(config, scenario_id, in, out);
    if (*eval) return cmd_eval(config, eval_out, run_sessions, out);
    if (*datagen) return cmd_datagen(config, count, corpus_out, out);
    if (*train) return cmd_train(config, corpus_in, checkpoint_out, out);
    if (*serve) return cmd_serve(config, snapshot_path, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_usage_error(e.code()) ? kUsage : kRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}

}  // namespace manidialog::cli
