#include "manidialog/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <future>

#include <nlohmann/json.hpp>

#include "manidialog/error.hpp"
#include "manidialog/text.hpp"

namespace manidialog {

using nlohmann::json;

std::string_view to_string(CaseType type) {
  switch (type) {
    case CaseType::Direct: return "direct";
    case CaseType::Ambiguous: return "ambiguous";
    case CaseType::Nonexistent: return "nonexistent";
  }
  return "?";
}

std::optional<CaseType> case_type_from_string(std::string_view s) {
  for (auto t : {CaseType::Direct, CaseType::Ambiguous, CaseType::Nonexistent}) {
    if (s == to_string(t)) return t;
  }
  return std::nullopt;
}

namespace {

std::string string_field(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw Error(ErrorCode::ParseError, std::string("missing string field '") + key + "'");
  }
  return j.at(key).get<std::string>();
}

void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::ParseError, "unknown field '" + key + "'");
    }
  }
}

template <typename F>
void for_each_jsonl(const std::filesystem::path& path, F&& f) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      f(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(n) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(n) + ": " + e.detail());
    }
  }
}

double percent(const Tally& t) { return 100.0 * t.accuracy(); }

}  // namespace

InstructionCase case_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "case must be an object");
  reject_unknown_keys(j, {"id", "query", "scenario_id", "type", "targets"});
  InstructionCase c;
  c.id = j.value("id", "");
  c.query = string_field(j, "query");
  c.scenario_id = string_field(j, "scenario_id");
  const auto type = case_type_from_string(string_field(j, "type"));
  if (!type) throw Error(ErrorCode::ParseError, "unknown case type");
  c.type = *type;
  if (!j.contains("targets") || !j.at("targets").is_array()) {
    throw Error(ErrorCode::ParseError, "field 'targets' must be a list");
  }
  c.targets = j.at("targets").get<std::vector<std::string>>();
  return c;
}

json to_json(const InstructionCase& c) {
  return {{"id", c.id}, {"query", c.query}, {"scenario_id", c.scenario_id}, {"type", to_string(c.type)},
          {"targets", c.targets}};
}

std::string check_case(const InstructionCase& c, const ScenarioStore& scenarios) {
  if (c.query.empty()) return "empty query";
  if (c.targets.empty()) return "no targets";
  if (c.type != CaseType::Ambiguous && c.targets.size() != 1) return "expected exactly one target";
  const Scene* scene = nullptr;
  for (const auto& s : scenarios.scenes()) {
    if (s.scenario_id == c.scenario_id) scene = &s;
  }
  if (!scene) return "unknown scenario '" + c.scenario_id + "'";
  for (const auto& t : c.targets) {
    const ObjectInstance* obj = scene->find(t);
    if (c.type == CaseType::Nonexistent) {
      if (obj) return "target '" + t + "' is present";
    } else if (!obj || !obj->graspable) {
      return "target '" + t + "' is not a graspable object of the scene";
    }
  }
  return {};
}

std::vector<InstructionCase> load_suite(const std::filesystem::path& path, const ScenarioStore& scenarios) {
  std::vector<InstructionCase> out;
  for_each_jsonl(path, [&](const json& j) {
    InstructionCase c = case_from_json(j);
    if (auto why = check_case(c, scenarios); !why.empty()) {
      throw Error(ErrorCode::ParseError, "case '" + c.id + "': " + why);
    }
    out.push_back(std::move(c));
  });
  return out;
}

bool score_turn(CaseType type, std::span<const std::string> targets, const ActionSequence& actual) {
  const auto& acts = actual.actions;
  switch (type) {
    case CaseType::Direct:
      return targets.size() == 1 && acts.size() == 1 && acts[0].as_grasp() &&
             acts[0].as_grasp()->target == targets[0];
    case CaseType::Ambiguous: {
      if (acts.size() != 1 || !acts[0].as_confirm()) return false;
      const auto& proposal = acts[0].as_confirm()->proposal;
      if (proposal.empty()) return false;
      return std::all_of(proposal.begin(), proposal.end(), [&](const Action& a) {
        const Grasp* g = a.as_grasp();
        return g && std::find(targets.begin(), targets.end(), g->target) != targets.end();
      });
    }
    case CaseType::Nonexistent:
      return actual.contains(ActionKind::Respond) && !actual.contains(ActionKind::Grasp) &&
             !actual.contains(ActionKind::Confirm);
  }
  return false;
}

bool score_turn(const InstructionCase& c, const ActionSequence& actual) {
  return score_turn(c.type, c.targets, actual);
}

const ReferenceRow& reference_row() {
  static const ReferenceRow row{"Published learned model (reference only)", 84.6, 90.0, 88.0, 76.0};
  return row;
}

EvalReport run_single_turn_suite(PolicyBackend& backend, const ScenarioStore& scenarios,
                                 std::span<const InstructionCase> cases, const SuiteOptions& options) {
  if (cases.empty()) throw Error(ErrorCode::PreconditionFailed, "evaluation suite is empty");
  // Resolve every scenario up front so a bad suite fails before any backend call.
  std::vector<const Scene*> scenes;
  scenes.reserve(cases.size());
  for (const auto& c : cases) scenes.push_back(&scenarios.at(c.scenario_id));

  const auto start = std::chrono::steady_clock::now();
  auto run_case = [&](std::size_t i) {
    const InstructionCase& c = cases[i];
    CaseResult r{c.id, c.type, {}, false, {}};
    try {
      const PromptContext ctx = build_prompt(options.prompt, *scenes[i], DialogueHistory{}, c.query);
      const ActionSequence actions = backend.decide_actions(ctx);
      r.actions = serialize_actions(actions);
      r.correct = score_turn(c, actions);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    return r;
  };

  std::vector<CaseResult> results(cases.size());
  const std::size_t width = std::max<std::size_t>(1, options.parallelism);
  for (std::size_t begin = 0; begin < cases.size(); begin += width) {
    const std::size_t end = std::min(cases.size(), begin + width);
    if (width == 1) {
      results[begin] = run_case(begin);
      continue;
    }
    std::vector<std::future<CaseResult>> wave;
    for (std::size_t i = begin; i < end; ++i) wave.push_back(std::async(std::launch::async, run_case, i));
    for (std::size_t i = begin; i < end; ++i) results[i] = wave[i - begin].get();
  }

  EvalReport report;
  report.backend = backend.name();
  for (const auto& r : results) {
    auto& t = report.by_type[static_cast<std::size_t>(r.type)];
    ++t.total;
    ++report.overall.total;
    if (r.correct) {
      ++t.correct;
      ++report.overall.correct;
    }
  }
  report.cases = std::move(results);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string render_report_table(const EvalReport& report, bool with_reference) {
  const std::array<std::string, 5> header = {"Method", "Accuracy", "Directly specified", "Ambiguously described",
                                             "Not-existing"};
  std::vector<std::array<std::string, 5>> rows;
  auto cell = [](double v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.1f%%", v);
    return std::string(buf);
  };
  rows.push_back({report.backend, cell(percent(report.overall)), cell(percent(report.by_type[0])),
                  cell(percent(report.by_type[1])), cell(percent(report.by_type[2]))});
  if (with_reference) {
    const auto& ref = reference_row();
    rows.push_back({ref.method, cell(ref.accuracy), cell(ref.direct), cell(ref.ambiguous), cell(ref.nonexistent)});
  }

  std::array<std::size_t, 5> width{};
  for (std::size_t i = 0; i < 5; ++i) {
    width[i] = header[i].size();
    for (const auto& r : rows) width[i] = std::max(width[i], r[i].size());
  }
  auto line = [&](const std::array<std::string, 5>& r) {
    std::string out = "|";
    for (std::size_t i = 0; i < 5; ++i) out += " " + r[i] + std::string(width[i] - r[i].size(), ' ') + " |";
    return out + "\n";
  };
  std::string out = line(header);
  out += "|";
  for (std::size_t i = 0; i < 5; ++i) out += std::string(width[i] + 2, '-') + "|";
  out += "\n";
  for (const auto& r : rows) out += line(r);
  return out;
}

json to_json(const EvalReport& report, bool with_reference) {
  auto tally = [](const Tally& t) {
    return json{{"total", t.total}, {"correct", t.correct}, {"accuracy", t.accuracy()}};
  };
  json by_type = json::object();
  for (std::size_t i = 0; i < kCaseTypeCount; ++i) {
    by_type[std::string(to_string(static_cast<CaseType>(i)))] = tally(report.by_type[i]);
  }
  json cases = json::array();
  for (const auto& c : report.cases) {
    json jc = {{"id", c.id}, {"type", to_string(c.type)}, {"actions", c.actions}, {"correct", c.correct}};
    if (!c.error.empty()) jc["error"] = c.error;
    cases.push_back(std::move(jc));
  }
  json out = {{"backend", report.backend}, {"overall", tally(report.overall)}, {"by_type", by_type},
              {"wall_seconds", report.wall_seconds}, {"cases", cases}};
  if (with_reference) {
    const auto& ref = reference_row();
    out["reference"] = {{"method", ref.method},         {"reference_only", true},
                        {"accuracy", ref.accuracy},     {"direct", ref.direct},
                        {"ambiguous", ref.ambiguous},   {"nonexistent", ref.nonexistent}};
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Situation s) {
  static constexpr std::array<std::string_view, kSituationCount> names = {"S1", "S2", "S3", "S4", "S5"};
  return names[static_cast<std::size_t>(s)];
}

std::optional<Situation> situation_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kSituationCount; ++i) {
    if (to_string(static_cast<Situation>(i)) == s) return static_cast<Situation>(i);
  }
  return std::nullopt;
}

SessionScript script_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "script must be an object");
  reject_unknown_keys(j, {"id", "scenario_id", "steps"});
  SessionScript script;
  script.id = j.value("id", "");
  script.scenario_id = string_field(j, "scenario_id");
  if (!j.contains("steps") || !j.at("steps").is_array() || j.at("steps").empty()) {
    throw Error(ErrorCode::ParseError, "script needs a non-empty 'steps' list");
  }
  for (const auto& js : j.at("steps")) {
    if (!js.is_object()) throw Error(ErrorCode::ParseError, "step must be an object");
    reject_unknown_keys(js, {"human", "situation", "expected", "confirmation"});
    ScriptStep step;
    step.human = string_field(js, "human");
    const auto situation = situation_from_string(string_field(js, "situation"));
    if (!situation) throw Error(ErrorCode::ParseError, "unknown situation");
    step.situation = *situation;
    const auto kind = action_kind_from_string(string_field(js, "expected"));
    if (!kind) throw Error(ErrorCode::ParseError, "unknown expected action");
    step.expected = *kind;
    if (js.contains("confirmation")) {
      const std::string reply = string_field(js, "confirmation");
      if (reply == "agree") step.confirmation = ReplyClass::Agree;
      else if (reply == "decline") step.confirmation = ReplyClass::Decline;
      else throw Error(ErrorCode::ParseError, "confirmation must be 'agree' or 'decline'");
    }
    script.steps.push_back(std::move(step));
  }
  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    const auto& s = script.steps[i];
    if (s.situation == Situation::S3 && !s.confirmation &&
        (i + 1 == script.steps.size() || !script.steps[i + 1].confirmation)) {
      throw Error(ErrorCode::ParseError,
                  "step " + std::to_string(i + 1) + " expects an ambiguous need but no confirmation reply follows");
    }
  }
  return script;
}

std::vector<SessionScript> load_scripts(const std::filesystem::path& path) {
  std::vector<SessionScript> out;
  for_each_jsonl(path, [&](const json& j) { out.push_back(script_from_json(j)); });
  return out;
}

SessionMetrics run_session(PolicyBackend& backend, const ScenarioStore& scenarios, const SessionScript& script,
                           const EngineConfig& config) {
  ConversationState state;
  state.scene = scenarios.at(script.scenario_id);

  SessionMetrics m;
  m.script_id = script.id;
  m.backend = backend.name();
  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    const ScriptStep& step = script.steps[i];
    if (step.confirmation && !state.phase.awaiting()) {
      throw Error(ErrorCode::ScriptViolation,
                  "step " + std::to_string(i + 1) + " replies to a confirmation but none is pending");
    }
    const bool was_awaiting = state.phase.awaiting();
    const MessageResult r = process_message(state, backend, config, step.human);
    const ActionSequence actions = parse_actions(r.actions);

    StepResult s{step.human, step.situation, step.expected, r.actions, r.response, false};
    s.correct = !r.degraded && primary_kind(actions) == step.expected;
    ++m.rounds;
    ++m.steps.total;
    auto& sit = m.by_situation[static_cast<std::size_t>(step.situation)];
    ++sit.total;
    if (s.correct) {
      ++m.steps.correct;
      ++sit.correct;
    }
    if (actions.contains(ActionKind::Confirm)) ++m.confirms_offered;
    if (step.confirmation == ReplyClass::Agree) ++m.confirms_accepted;
    if (step.confirmation == ReplyClass::Decline) ++m.confirms_declined;
    if (was_awaiting && !state.phase.awaiting() && !r.executed.empty() && step.confirmation == ReplyClass::Agree) {
      ++m.proposals_executed;
    }
    m.trace.push_back(std::move(s));
  }
  return m;
}

json to_json(const SessionMetrics& m) {
  json by_situation = json::object();
  for (std::size_t i = 0; i < kSituationCount; ++i) {
    const auto& t = m.by_situation[i];
    by_situation[std::string(to_string(static_cast<Situation>(i)))] = {
        {"total", t.total}, {"correct", t.correct}, {"accuracy", t.accuracy()}};
  }
  json trace = json::array();
  for (const auto& s : m.trace) {
    trace.push_back({{"human", s.human},
                     {"situation", to_string(s.situation)},
                     {"expected", to_string(s.expected)},
                     {"actions", s.actions},
                     {"response", s.response},
                     {"correct", s.correct}});
  }
  return {{"script_id", m.script_id},
          {"backend", m.backend},
          {"rounds", m.rounds},
          {"step_accuracy", m.steps.accuracy()},
          {"steps", {{"total", m.steps.total}, {"correct", m.steps.correct}}},
          {"by_situation", by_situation},
          {"confirm", {{"offered", m.confirms_offered},
                       {"accepted", m.confirms_accepted},
                       {"declined", m.confirms_declined},
                       {"executed", m.proposals_executed}}},
          {"trace", trace}};
}

}  // namespace manidialog
