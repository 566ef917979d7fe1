#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "manidialog/dialogue.hpp"
#include "manidialog/scene.hpp"

namespace manidialog {

class ChatTransport;

enum class TaskCategory { Knowledge, Embodied, Mixed };

std::string_view to_string(TaskCategory category);
std::optional<TaskCategory> task_category_from_string(std::string_view s);

struct RecordTurn {
  std::string human;
  std::string actions;  // action grammar string
  std::string ai;

  friend bool operator==(const RecordTurn&, const RecordTurn&) = default;
};

/// One self-instruct datum: a scenario instruction plus a multi-round
/// Human / Action / AI dialogue.
struct DialogueRecord {
  std::string id;
  std::string instruction;
  std::vector<std::string> objects;
  std::vector<RecordTurn> turns;
  TaskCategory category = TaskCategory::Knowledge;

  friend bool operator==(const DialogueRecord&, const DialogueRecord&) = default;
};

/// Corpus line: {id, instruction, objects, turns: [{human, actions, ai}], category}.
nlohmann::json to_json(const DialogueRecord& record);
/// Throws ParseError. Missing id/category are tolerated when `lenient`.
DialogueRecord record_from_json(const nlohmann::json& j, bool lenient = false);

std::vector<DialogueRecord> read_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, std::span<const DialogueRecord> records);

struct RecordViolation {
  enum class Kind { EmptyField, NoTurns, InvalidLabel, GrammarViolation, UngroundedTarget };
  Kind kind;
  std::string detail;
  std::optional<std::size_t> turn;

  friend bool operator==(const RecordViolation&, const RecordViolation&) = default;
};

std::string_view to_string(RecordViolation::Kind kind);

std::vector<RecordViolation> validate_record(const DialogueRecord& record);

/// embodied: every turn grasps or confirms; knowledge: no turn grasps,
/// confirms, or names one of the record's objects; mixed otherwise.
TaskCategory categorize(const DialogueRecord& record);

/// Token-set Jaccard similarity of the records' concatenated human turns.
double human_similarity(const DialogueRecord& a, const DialogueRecord& b);

/// Greedy, order-stable: drops a record whose similarity to any kept record
/// is >= threshold.
std::vector<DialogueRecord> dedup(std::span<const DialogueRecord> records, double threshold);

struct DerivedTask {
  enum class Kind { ActionPrediction, ResponsePrediction };
  Kind kind;
  std::size_t turn = 0;
  std::string context;
  std::string target;
};

/// Prompt for turn `turn`: instruction, all earlier turns, then the Human line.
std::string record_context(const DialogueRecord& record, std::size_t turn);

/// Two tasks per turn: the action field blanked, and the response field
/// blanked with the gold action present.
std::vector<DerivedTask> derive_training_tasks(const DialogueRecord& record);

struct SeedSet {
  std::vector<DialogueRecord> records;
};

/// Throws PreconditionFailed if empty or any record is invalid.
SeedSet make_seed_set(std::vector<DialogueRecord> records);

/// Single-prompt text generator used by the self-instruct loop.
class TextGenerator {
 public:
  virtual ~TextGenerator() = default;
  virtual std::string generate(const std::string& prompt) = 0;
};

/// Adapts a chat-completion transport to TextGenerator.
class ChatTextGenerator final : public TextGenerator {
 public:
  ChatTextGenerator(std::shared_ptr<ChatTransport> transport, std::string model, double temperature = 0.7,
                    int max_tokens = 1024);
  std::string generate(const std::string& prompt) override;

 private:
  std::shared_ptr<ChatTransport> transport_;
  std::string model_;
  double temperature_;
  int max_tokens_;
};

struct GenerateOptions {
  std::size_t few_shot = 3;
  double dedup_threshold = 0.8;
  /// Failed attempts tolerated before ExhaustedBudget; 0 means 2 * count + 10.
  std::size_t retry_budget = 0;
  std::uint64_t seed = 1;
  /// Requests in flight at once. Results are reduced in request order.
  std::size_t parallelism = 1;
  std::string id_prefix = "gen-";
  PromptTemplate prompt;
};

/// Few-shot generation prompt for one scenario.
std::string make_generation_prompt(std::span<const DialogueRecord> exemplars, const Scene& scene,
                                   const PromptTemplate& prompt = {});

/// Parses the first JSON object in a generator reply. Throws ParseError.
DialogueRecord parse_generated_record(std::string_view reply, const Scene& scene,
                                      const PromptTemplate& prompt = {});

/// Self-instruct loop: sample k seed exemplars and a scenario, ask the
/// generator for one record, keep it if valid and novel. Returns exactly
/// `count` records or throws ExhaustedBudget.
std::vector<DialogueRecord> generate(const SeedSet& seeds, std::span<const Scene> scenarios,
                                     TextGenerator& generator, std::size_t count,
                                     const GenerateOptions& options = {});

}  // namespace manidialog
