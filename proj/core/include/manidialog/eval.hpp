#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "manidialog/actions.hpp"
#include "manidialog/policy.hpp"
#include "manidialog/scene.hpp"
#include "manidialog/session.hpp"

namespace manidialog {

enum class CaseType { Direct, Ambiguous, Nonexistent };
inline constexpr std::size_t kCaseTypeCount = 3;

std::string_view to_string(CaseType type);
std::optional<CaseType> case_type_from_string(std::string_view s);

/// One single-turn instruction. `targets` holds the requested label for
/// Direct and Nonexistent cases and the acceptable candidates for Ambiguous.
struct InstructionCase {
  std::string id;
  std::string query;
  std::string scenario_id;
  CaseType type = CaseType::Direct;
  std::vector<std::string> targets;
};

InstructionCase case_from_json(const nlohmann::json& j);
nlohmann::json to_json(const InstructionCase& c);

/// Empty if the case is consistent with its scenario; otherwise a reason.
std::string check_case(const InstructionCase& c, const ScenarioStore& scenarios);

/// Reads a jsonl suite and checks every case. Throws ParseError.
std::vector<InstructionCase> load_suite(const std::filesystem::path& path, const ScenarioStore& scenarios);

/// Direct: exactly [grasp(target)]. Ambiguous: exactly one confirm whose
/// proposal is non-empty and grasps only candidates. Nonexistent: contains
/// respond and no grasp or confirm. Grasp execution is not scored.
bool score_turn(CaseType type, std::span<const std::string> targets, const ActionSequence& actual);
bool score_turn(const InstructionCase& c, const ActionSequence& actual);

struct Tally {
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct CaseResult {
  std::string id;
  CaseType type = CaseType::Direct;
  std::string actions;  // empty when the backend failed
  bool correct = false;
  std::string error;
};

struct EvalReport {
  std::string backend;
  std::array<Tally, kCaseTypeCount> by_type{};
  Tally overall;
  double wall_seconds = 0.0;
  std::vector<CaseResult> cases;
};

/// Published figures for a learned model, shown for comparison only.
struct ReferenceRow {
  std::string method;
  double accuracy;
  double direct;
  double ambiguous;
  double nonexistent;
};
const ReferenceRow& reference_row();

struct SuiteOptions {
  PromptTemplate prompt;
  /// Cases in flight at once; results are reduced in case order.
  std::size_t parallelism = 1;
};

/// Each case gets a fresh scene and empty history and only the decision
/// stage runs. Backend errors count as failures. Throws PreconditionFailed on
/// an empty suite, UnknownScenario for a case naming a missing scenario.
EvalReport run_single_turn_suite(PolicyBackend& backend, const ScenarioStore& scenarios,
                                 std::span<const InstructionCase> cases, const SuiteOptions& options = {});

/// Method | Accuracy | Directly specified | Ambiguously described | Not-existing
std::string render_report_table(const EvalReport& report, bool with_reference = true);
nlohmann::json to_json(const EvalReport& report, bool with_reference = true);

// ---------------------------------------------------------------------------
// Multi-round sessions

/// S1 explicit request, S2 missing item, S3 ambiguous need, S4 small talk,
/// S5 dangerous request.
enum class Situation { S1, S2, S3, S4, S5 };
inline constexpr std::size_t kSituationCount = 5;

std::string_view to_string(Situation s);
std::optional<Situation> situation_from_string(std::string_view s);

struct ScriptStep {
  std::string human;
  Situation situation = Situation::S4;
  ActionKind expected = ActionKind::Respond;
  /// Set when `human` answers a pending confirmation.
  std::optional<ReplyClass> confirmation;
};

struct SessionScript {
  std::string id;
  std::string scenario_id;
  std::vector<ScriptStep> steps;
};

/// Throws ParseError, including for an S3 step not followed by a
/// confirmation step.
SessionScript script_from_json(const nlohmann::json& j);
std::vector<SessionScript> load_scripts(const std::filesystem::path& path);

struct StepResult {
  std::string human;
  Situation situation = Situation::S4;
  ActionKind expected = ActionKind::Respond;
  std::string actions;
  std::string response;
  bool correct = false;
};

struct SessionMetrics {
  std::string script_id;
  std::string backend;
  std::size_t rounds = 0;
  Tally steps;
  std::array<Tally, kSituationCount> by_situation{};
  std::size_t confirms_offered = 0;
  std::size_t confirms_accepted = 0;
  std::size_t confirms_declined = 0;
  std::size_t proposals_executed = 0;
  std::vector<StepResult> trace;
};

/// Drives the script through the full message transaction. Throws
/// ScriptViolation if a confirmation step arrives while nothing is pending.
SessionMetrics run_session(PolicyBackend& backend, const ScenarioStore& scenarios, const SessionScript& script,
                           const EngineConfig& config = {});

nlohmann::json to_json(const SessionMetrics& metrics);

}  // namespace manidialog
