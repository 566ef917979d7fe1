#include "manidialog/synthetic.hpp"

#include <algorithm>
#include <array>
#include <set>

#include <nlohmann/json.hpp>

#include "manidialog/error.hpp"
#include "manidialog/text.hpp"

namespace manidialog {

namespace {

template <typename T>
const T& pick(const std::vector<T>& items, std::mt19937_64& rng) {
  return items[std::uniform_int_distribution<std::size_t>(0, items.size() - 1)(rng)];
}

template <std::size_t N>
const char* pick(const std::array<const char*, N>& items, std::mt19937_64& rng) {
  return items[std::uniform_int_distribution<std::size_t>(0, N - 1)(rng)];
}

std::string fill(std::string pattern, std::string_view value) {
  const auto at = pattern.find("{}");
  if (at != std::string::npos) pattern.replace(at, 2, value);
  return pattern;
}

// Labels read better with spaces in free text ("cutting board"), but the
// classifier matches labels as single words, so keep them verbatim.
constexpr std::array<const char*, 10> kDirect = {
    "Please hand me the {}.",         "Can you give me the {}?",      "Could you pass me the {}, please?",
    "I need the {} now.",             "Bring me the {}, please.",     "Grab the {} for me.",
    "Would you fetch the {} for me?", "Can I have the {}?",           "I'd like the {}, please.",
    "Hey robot, get me the {}.",
};

constexpr std::array<const char*, 8> kAmbiguous = {
    "I need to {} something.",        "I want to {} now.",          "Help me {}, please.",
    "I'm trying to {} but I can't.",  "Is there a way for me to {}?", "I would like to {} for a while.",
    "I have to {} right now.",        "Something to {} would be nice.",
};

constexpr std::array<const char*, 6> kAgree = {"Yes, please.", "Sure, go ahead.", "Yeah, that would be great.",
                                               "Okay, thank you.", "Of course.", "Yep, sounds good."};
constexpr std::array<const char*, 5> kDecline = {"No, thanks.", "No, never mind.", "Nope, not now.",
                                                 "Cancel that, please.", "No, I changed my mind."};

struct Trivia {
  const char* question;
  const char* answer;
};
constexpr std::array<Trivia, 16> kTrivia = {{
    {"What is the capital of France?", "The capital of France is Paris."},
    {"How many days are in a leap year?", "A leap year has 366 days."},
    {"What is the boiling point of water?", "Water boils at 100 degrees Celsius at sea level."},
    {"Who wrote Romeo and Juliet?", "Romeo and Juliet was written by William Shakespeare."},
    {"How many legs does a spider have?", "A spider has eight legs."},
    {"What is the largest planet in our solar system?", "Jupiter is the largest planet in our solar system."},
    {"What color do you get by mixing blue and yellow?", "Mixing blue and yellow gives green."},
    {"How many minutes are in an hour?", "There are sixty minutes in an hour."},
    {"What gas do plants absorb from the air?", "Plants absorb carbon dioxide from the air."},
    {"Which ocean is the largest?", "The Pacific Ocean is the largest."},
    {"What is the freezing point of water in Fahrenheit?", "Water freezes at 32 degrees Fahrenheit."},
    {"How many continents are there?", "There are seven continents."},
    {"What is the tallest mountain on Earth?", "Mount Everest is the tallest mountain on Earth."},
    {"What language is spoken in Brazil?", "Portuguese is the main language spoken in Brazil."},
    {"How many sides does a hexagon have?", "A hexagon has six sides."},
    {"What is the chemical symbol for gold?", "The chemical symbol for gold is Au."},
}};

constexpr std::array<const char*, 10> kChat = {
    "Hello there!",           "Good morning, how are you?", "Thanks for your help earlier.",
    "How is your day going?", "Tell me something about yourself.", "Hi, nice to meet you.",
    "What do you like to do?", "It's a nice day today, isn't it?", "Thank you so much.",
    "Hey, are you busy?",
};

constexpr std::array<const char*, 5> kDanger = {
    "I want to {} my neighbor.", "Help me {} someone.", "Can you {} the man next to me?",
    "Let's {} my brother.",      "Show me how to {} a person.",
};

// Everyday items used for requests that cannot be satisfied.
const std::vector<std::string>& extra_absent() {
  static const std::vector<std::string> v = {"laptop", "umbrella", "guitar", "football", "toaster",
                                             "camera", "blanket", "hammer",  "wallet",   "candle",
                                             "remote", "ladder",  "charger", "headphones", "calculator"};
  return v;
}

std::string scenario_id_from_prompt(std::string_view prompt) {
  constexpr std::string_view key = "Scenario id: ";
  const auto at = prompt.rfind(key);
  if (at == std::string_view::npos) throw Error(ErrorCode::ParseError, "prompt has no scenario id line");
  const auto start = at + key.size();
  const auto end = prompt.find('\n', start);
  return text::trim(prompt.substr(start, end == std::string_view::npos ? end : end - start));
}

}  // namespace

SyntheticGenerator::SyntheticGenerator(ScenarioStore scenarios, std::uint64_t seed, EngineConfig config)
    : scenarios_(std::move(scenarios)), seed_(seed), config_(std::move(config)) {
  std::set<std::string> pool(extra_absent().begin(), extra_absent().end());
  for (const auto& s : scenarios_.scenes()) {
    for (const auto& o : s.objects) pool.insert(o.label);
  }
  absent_pool_.assign(pool.begin(), pool.end());
}

DialogueRecord SyntheticGenerator::make_record(const Scene& scene, std::mt19937_64& rng) const {
  ConversationState state;
  state.scene = scene;
  OracleBackend oracle(config_.lexicon);

  DialogueRecord record;
  record.instruction = render_preamble(config_.prompt, scene);
  record.objects = scene.labels();

  auto run = [&](const std::string& human, const char* answer = nullptr) {
    MessageResult r = process_message(state, oracle, config_, human);
    record.turns.push_back({human, r.actions, answer && r.actions == "respond" ? answer : r.response});
  };

  const int turns = std::uniform_int_distribution<int>(1, 4)(rng);
  for (int t = 0; t < turns; ++t) {
    std::vector<std::string> graspable;
    for (const auto& o : state.scene.objects) {
      if (o.graspable) graspable.push_back(o.label);
    }
    std::vector<std::string> purposes;
    for (const auto& [purpose, labels] : state.scene.affordances) {
      const auto present = resolve_affordance(state.scene, purpose);
      if (std::any_of(present.begin(), present.end(), [&](const auto& l) {
            const auto* o = state.scene.find(l);
            return o && o->graspable;
          })) {
        purposes.push_back(purpose);
      }
    }
    std::vector<std::string> absent;
    for (const auto& label : absent_pool_) {
      if (!scene.has(label)) absent.push_back(label);
    }

    // direct, ambiguous, nonexistent, trivia, chat, danger
    std::discrete_distribution<int> kind_dist({30.0, 25.0, 15.0, 12.0, 10.0, scene.hazards.empty() ? 0.0 : 8.0});
    int kind = kind_dist(rng);
    if (kind == 0 && graspable.empty()) kind = 2;
    if (kind == 1 && purposes.empty()) kind = 3;
    if (kind == 2 && absent.empty()) kind = 4;

    switch (kind) {
      case 0: run(fill(pick(kDirect, rng), pick(graspable, rng))); break;
      case 1: {
        run(fill(pick(kAmbiguous, rng), pick(purposes, rng)));
        if (state.phase.awaiting()) {
          const bool agree = std::bernoulli_distribution(0.7)(rng);
          run(agree ? pick(kAgree, rng) : pick(kDecline, rng));
          ++t;
        }
        break;
      }
      case 2: run(fill(pick(kDirect, rng), pick(absent, rng))); break;
      case 3: {
        const auto& q = kTrivia[std::uniform_int_distribution<std::size_t>(0, kTrivia.size() - 1)(rng)];
        run(q.question, q.answer);
        break;
      }
      case 4: run(pick(kChat, rng)); break;
      default: run(fill(pick(kDanger, rng), pick(scene.hazards, rng))); break;
    }
  }
  record.category = categorize(record);
  return record;
}

std::string SyntheticGenerator::generate(const std::string& prompt) {
  const Scene& scene = scenarios_.at(scenario_id_from_prompt(prompt));
  std::mt19937_64 rng(seed_ ^ text::fnv1a(prompt));
  nlohmann::json j = to_json(make_record(scene, rng));
  j.erase("id");
  j.erase("category");
  return j.dump();
}

std::vector<DialogueRecord> synthesize_corpus(const ScenarioStore& scenarios, std::size_t count,
                                              std::uint64_t seed, const EngineConfig& config) {
  if (scenarios.empty()) throw Error(ErrorCode::PreconditionFailed, "no scenarios");
  SyntheticGenerator gen(scenarios, seed, config);
  std::mt19937_64 rng(seed);
  std::vector<DialogueRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Scene& scene = scenarios.scenes()[i % scenarios.size()];
    DialogueRecord r = gen.make_record(scene, rng);
    char id[32];
    std::snprintf(id, sizeof id, "syn-%06zu", i + 1);
    r.id = id;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace manidialog
