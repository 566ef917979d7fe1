#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "manidialog/datagen.hpp"
#include "manidialog/scene.hpp"
#include "manidialog/session.hpp"

namespace manidialog {

/// Offline stand-in for an LLM generator. Reads the scenario id from a
/// generation prompt, scripts 1-4 human turns from templates (direct and
/// ambiguous requests, missing items, chat and trivia, hazards) and lets the
/// oracle engine produce the Action and AI fields. The reply is a single
/// JSON record line. Output is a pure function of (seed, prompt).
class SyntheticGenerator final : public TextGenerator {
 public:
  explicit SyntheticGenerator(ScenarioStore scenarios, std::uint64_t seed = 1, EngineConfig config = {});

  std::string generate(const std::string& prompt) override;

  /// One record for `scene`, drawing choices from `rng`. The id is left empty.
  DialogueRecord make_record(const Scene& scene, std::mt19937_64& rng) const;

 private:
  ScenarioStore scenarios_;
  std::uint64_t seed_;
  EngineConfig config_;
  std::vector<std::string> absent_pool_;
};

/// Convenience: `count` records spread over `scenarios` with no seeds or dedup.
std::vector<DialogueRecord> synthesize_corpus(const ScenarioStore& scenarios, std::size_t count,
                                              std::uint64_t seed, const EngineConfig& config = {});

}  // namespace manidialog
