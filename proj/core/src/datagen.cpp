#include "manidialog/datagen.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "manidialog/chat_client.hpp"
#include "manidialog/error.hpp"
#include "manidialog/text.hpp"

namespace manidialog {

using nlohmann::json;

std::string_view to_string(TaskCategory category) {
  switch (category) {
    case TaskCategory::Knowledge: return "knowledge";
    case TaskCategory::Embodied: return "embodied";
    case TaskCategory::Mixed: return "mixed";
  }
  return "knowledge";
}

std::optional<TaskCategory> task_category_from_string(std::string_view s) {
  if (s == "knowledge") return TaskCategory::Knowledge;
  if (s == "embodied") return TaskCategory::Embodied;
  if (s == "mixed") return TaskCategory::Mixed;
  return std::nullopt;
}

json to_json(const DialogueRecord& r) {
  json turns = json::array();
  for (const auto& t : r.turns) turns.push_back({{"human", t.human}, {"actions", t.actions}, {"ai", t.ai}});
  return {{"id", r.id},
          {"instruction", r.instruction},
          {"objects", r.objects},
          {"turns", turns},
          {"category", std::string(to_string(r.category))}};
}

DialogueRecord record_from_json(const json& j, bool lenient) {
  try {
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "record must be an object");
    static const std::set<std::string> known = {"id", "instruction", "objects", "turns", "category"};
    for (const auto& [key, _] : j.items()) {
      if (!lenient && !known.count(key)) throw Error(ErrorCode::ParseError, "unknown record field '" + key + "'");
    }
    DialogueRecord r;
    if (lenient) r.id = j.value("id", std::string());
    else r.id = j.at("id").get<std::string>();
    r.instruction = j.at("instruction").get<std::string>();
    r.objects = j.at("objects").get<std::vector<std::string>>();
    for (const auto& t : j.at("turns")) {
      r.turns.push_back({t.at("human").get<std::string>(), t.at("actions").get<std::string>(),
                         t.at("ai").get<std::string>()});
    }
    if (j.contains("category") || !lenient) {
      const auto name = j.at("category").get<std::string>();
      auto cat = task_category_from_string(name);
      if (!cat) throw Error(ErrorCode::ParseError, "unknown category '" + name + "'");
      r.category = *cat;
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("record: ") + e.what());
  }
}

std::vector<DialogueRecord> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open corpus " + path.string());
  std::vector<DialogueRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(lineno) + ": " + e.detail());
    }
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, std::span<const DialogueRecord> records) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write corpus " + path.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

// ---------------------------------------------------------------------------

std::string_view to_string(RecordViolation::Kind kind) {
  switch (kind) {
    case RecordViolation::Kind::EmptyField: return "EmptyField";
    case RecordViolation::Kind::NoTurns: return "NoTurns";
    case RecordViolation::Kind::InvalidLabel: return "InvalidLabel";
    case RecordViolation::Kind::GrammarViolation: return "GrammarViolation";
    case RecordViolation::Kind::UngroundedTarget: return "UngroundedTarget";
  }
  return "?";
}

namespace {

std::vector<std::string> grasp_targets(const ActionSequence& seq) {
  std::vector<std::string> out;
  for (const auto& a : seq.actions) {
    if (const auto* g = a.as_grasp()) out.push_back(g->target);
    if (const auto* c = a.as_confirm()) {
      for (const auto& inner : c->proposal) {
        if (const auto* g = inner.as_grasp()) out.push_back(g->target);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<RecordViolation> validate_record(const DialogueRecord& r) {
  using K = RecordViolation::Kind;
  std::vector<RecordViolation> out;
  if (text::trim(r.id).empty()) out.push_back({K::EmptyField, "id", std::nullopt});
  if (text::trim(r.instruction).empty()) out.push_back({K::EmptyField, "instruction", std::nullopt});
  for (const auto& o : r.objects) {
    if (!is_valid_label(o)) out.push_back({K::InvalidLabel, o, std::nullopt});
  }
  if (r.turns.empty()) out.push_back({K::NoTurns, "record has no turns", std::nullopt});
  const std::set<std::string> objects(r.objects.begin(), r.objects.end());
  for (std::size_t i = 0; i < r.turns.size(); ++i) {
    const auto& t = r.turns[i];
    if (text::trim(t.human).empty()) out.push_back({K::EmptyField, "human", i});
    if (text::trim(t.ai).empty()) out.push_back({K::EmptyField, "ai", i});
    try {
      const ActionSequence seq = parse_actions(t.actions);
      for (const auto& v : check_structure(seq)) out.push_back({K::GrammarViolation, describe(v), i});
      for (const auto& target : grasp_targets(seq)) {
        if (!objects.count(target)) out.push_back({K::UngroundedTarget, target, i});
      }
    } catch (const GrammarError& e) {
      out.push_back({K::GrammarViolation, e.detail(), i});
    }
  }
  return out;
}

TaskCategory categorize(const DialogueRecord& r) {
  std::size_t embodied = 0;
  std::size_t referencing = 0;
  for (const auto& t : r.turns) {
    bool acts_on_scene = false;
    try {
      const auto seq = parse_actions(t.actions);
      acts_on_scene = seq.contains(ActionKind::Grasp) || seq.contains(ActionKind::Confirm);
    } catch (const GrammarError&) {
    }
    bool names_object = false;
    for (const auto& w : text::words(t.human)) {
      for (const auto& o : r.objects) {
        if (w == o || w == o + "s" || w == o + "es") names_object = true;
      }
    }
    if (acts_on_scene) ++embodied;
    if (acts_on_scene || names_object) ++referencing;
  }
  if (!r.turns.empty() && embodied == r.turns.size()) return TaskCategory::Embodied;
  if (referencing == 0) return TaskCategory::Knowledge;
  return TaskCategory::Mixed;
}

namespace {

std::set<std::string> human_tokens(const DialogueRecord& r) {
  std::set<std::string> out;
  for (const auto& t : r.turns) {
    for (auto& w : text::words(t.human)) out.insert(std::move(w));
  }
  return out;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

}  // namespace

double human_similarity(const DialogueRecord& a, const DialogueRecord& b) {
  return jaccard(human_tokens(a), human_tokens(b));
}

std::vector<DialogueRecord> dedup(std::span<const DialogueRecord> records, double threshold) {
  std::vector<DialogueRecord> kept;
  std::vector<std::set<std::string>> kept_tokens;
  for (const auto& r : records) {
    auto tokens = human_tokens(r);
    const bool duplicate = std::any_of(kept_tokens.begin(), kept_tokens.end(),
                                       [&](const auto& k) { return jaccard(tokens, k) >= threshold; });
    if (duplicate) continue;
    kept.push_back(r);
    kept_tokens.push_back(std::move(tokens));
  }
  return kept;
}

std::string record_context(const DialogueRecord& r, std::size_t turn) {
  std::string out = r.instruction + "\n";
  for (std::size_t i = 0; i < turn && i < r.turns.size(); ++i) {
    const auto& t = r.turns[i];
    out.append(kHumanTag).append(" ").append(t.human).append("\n");
    out.append(kActionTag).append(" ").append(t.actions).append("\n");
    out.append(kAiTag).append(" ").append(t.ai).append("\n");
  }
  out.append(kHumanTag).append(" ").append(r.turns.at(turn).human).append("\n");
  return out;
}

std::vector<DerivedTask> derive_training_tasks(const DialogueRecord& r) {
  std::vector<DerivedTask> out;
  out.reserve(2 * r.turns.size());
  for (std::size_t i = 0; i < r.turns.size(); ++i) {
    const std::string ctx = record_context(r, i);
    const auto& t = r.turns[i];
    out.push_back({DerivedTask::Kind::ActionPrediction, i, ctx + std::string(kActionTag) + " ", t.actions});
    out.push_back({DerivedTask::Kind::ResponsePrediction, i,
                   ctx + std::string(kActionTag) + " " + t.actions + "\n" + std::string(kAiTag) + " ", t.ai});
  }
  return out;
}

SeedSet make_seed_set(std::vector<DialogueRecord> records) {
  if (records.empty()) throw Error(ErrorCode::PreconditionFailed, "seed set is empty");
  for (const auto& r : records) {
    const auto v = validate_record(r);
    if (!v.empty()) {
      throw Error(ErrorCode::PreconditionFailed,
                  "seed record '" + r.id + "' is invalid: " + std::string(to_string(v.front().kind)) + " " +
                      v.front().detail);
    }
  }
  return SeedSet{std::move(records)};
}

// ---------------------------------------------------------------------------

ChatTextGenerator::ChatTextGenerator(std::shared_ptr<ChatTransport> transport, std::string model,
                                     double temperature, int max_tokens)
    : transport_(std::move(transport)), model_(std::move(model)), temperature_(temperature), max_tokens_(max_tokens) {
  if (!transport_) throw Error(ErrorCode::ConfigError, "chat generator needs a transport");
}

std::string ChatTextGenerator::generate(const std::string& prompt) {
  ChatRequest req;
  req.model = model_;
  req.messages = {{"user", prompt}};
  req.temperature = temperature_;
  req.max_tokens = max_tokens_;
  return transport_->complete(req);
}

std::string make_generation_prompt(std::span<const DialogueRecord> exemplars, const Scene& scene,
                                   const PromptTemplate& prompt) {
  std::string out =
      "You write training dialogues between a human and a robot arm assistant at a table. Each dialogue is "
      "one JSON object on a single line with the fields \"instruction\" (the scenario), \"objects\" (visible "
      "object labels) and \"turns\", a list of {\"human\", \"actions\", \"ai\"}. The \"actions\" field uses "
      "the grammar: action (\"; \" action)* where action is grasp(<label>), respond, refuse or "
      "confirm(<grasp or respond list>). Grasp only listed objects, confirm when guessing what the human "
      "needs, respond when chatting or when an item is missing, refuse alone for dangerous requests.\n\n"
      "Examples:\n";
  for (const auto& r : exemplars) {
    json j = to_json(r);
    j.erase("id");
    j.erase("category");
    out += j.dump() + "\n";
  }
  out += "\nWrite one new, different dialogue as a single JSON line for this scenario.\n";
  out += "Scenario id: " + scene.scenario_id + "\n";
  out += "Instruction: " + render_preamble(prompt, scene) + "\n";
  out += "Objects: " + text::join(scene.labels(), ", ") + "\n";
  return out;
}

DialogueRecord parse_generated_record(std::string_view reply, const Scene& scene, const PromptTemplate& prompt) {
  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    throw Error(ErrorCode::ParseError, "generator reply contains no JSON object");
  }
  json j;
  try {
    j = json::parse(reply.substr(open, close - open + 1));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("generator reply: ") + e.what());
  }
  if (j.is_object()) {
    if (!j.contains("instruction")) j["instruction"] = render_preamble(prompt, scene);
    if (!j.contains("objects")) j["objects"] = scene.labels();
  }
  return record_from_json(j, /*lenient=*/true);
}

std::vector<DialogueRecord> generate(const SeedSet& seeds, std::span<const Scene> scenarios,
                                     TextGenerator& generator, std::size_t count, const GenerateOptions& options) {
  if (count == 0) throw Error(ErrorCode::PreconditionFailed, "count must be at least 1");
  if (seeds.records.empty()) throw Error(ErrorCode::PreconditionFailed, "seed set is empty");
  if (scenarios.empty()) throw Error(ErrorCode::PreconditionFailed, "no scenarios to generate for");

  const std::size_t budget = options.retry_budget ? options.retry_budget : 2 * count + 10;
  const std::size_t k = std::min(std::max<std::size_t>(options.few_shot, 1), seeds.records.size());
  const std::size_t parallel = std::max<std::size_t>(options.parallelism, 1);
  std::mt19937_64 rng(options.seed);

  std::vector<DialogueRecord> kept;
  std::vector<std::set<std::string>> pool;
  for (const auto& s : seeds.records) pool.push_back(human_tokens(s));
  std::size_t failures = 0;

  struct Request {
    const Scene* scene;
    std::string prompt;
  };

  while (kept.size() < count) {
    const std::size_t wave = std::min(parallel, count - kept.size());
    std::vector<Request> requests;
    for (std::size_t i = 0; i < wave; ++i) {
      std::vector<DialogueRecord> shots;
      std::sample(seeds.records.begin(), seeds.records.end(), std::back_inserter(shots), k, rng);
      std::shuffle(shots.begin(), shots.end(), rng);
      std::uniform_int_distribution<std::size_t> pick(0, scenarios.size() - 1);
      const Scene* scene = &scenarios[pick(rng)];
      requests.push_back({scene, make_generation_prompt(shots, *scene, options.prompt)});
    }

    std::vector<std::string> replies(wave);
    if (wave == 1) {
      replies[0] = generator.generate(requests[0].prompt);
    } else {
      std::vector<std::future<std::string>> futures;
      for (const auto& r : requests) {
        futures.push_back(std::async(std::launch::async, [&generator, &r] { return generator.generate(r.prompt); }));
      }
      for (std::size_t i = 0; i < wave; ++i) replies[i] = futures[i].get();
    }

    for (std::size_t i = 0; i < wave && kept.size() < count; ++i) {
      bool accepted = false;
      try {
        DialogueRecord r = parse_generated_record(replies[i], *requests[i].scene, options.prompt);
        char id[32];
        std::snprintf(id, sizeof id, "%06zu", kept.size() + 1);
        r.id = options.id_prefix + id;
        r.category = categorize(r);
        if (validate_record(r).empty()) {
          auto tokens = human_tokens(r);
          const bool novel = std::none_of(pool.begin(), pool.end(), [&](const auto& p) {
            return jaccard(tokens, p) >= options.dedup_threshold;
          });
          if (novel) {
            pool.push_back(std::move(tokens));
            kept.push_back(std::move(r));
            accepted = true;
          }
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ParseError) throw;
      }
      if (!accepted && ++failures > budget) {
        throw Error(ErrorCode::ExhaustedBudget, "generated " + std::to_string(kept.size()) + " of " +
                                                    std::to_string(count) + " records before exhausting " +
                                                    std::to_string(budget) + " retries");
      }
    }
  }
  return kept;
}

}  // namespace manidialog
