#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "manidialog/dialogue.hpp"
#include "manidialog/policy.hpp"
#include "manidialog/scene.hpp"

namespace manidialog {

struct Event {
  std::int64_t timestamp_ms = 0;
  std::uint64_t transaction = 0;
  std::string kind;
  nlohmann::json payload;
};

struct MessageResult {
  std::string actions;
  std::string response;
  std::vector<GraspOutcome> executed;
  SessionPhase phase_after;
  std::vector<std::string> removed;
  /// Set when the backend failed and a fallback respond turn was recorded.
  bool degraded = false;
  std::string error;
};

/// Mutable state of one conversation. Changed only by process_message.
struct ConversationState {
  Scene scene;
  DialogueHistory history;
  SessionPhase phase;
  std::vector<Event> events;
  std::uint64_t transactions = 0;
};

struct EngineConfig {
  PromptTemplate prompt;
  Lexicon lexicon;
};

/// One full turn as a single transaction: build prompt, decide (or release a
/// pending proposal), validate, execute grasps, generate the response, append
/// the turn, step the confirm phase. Scene, history, phase and event log are
/// committed together at the end. A backend TransportError commits only a
/// degraded respond turn and leaves scene and phase untouched.
MessageResult process_message(ConversationState& state, PolicyBackend& backend, const EngineConfig& config,
                              std::string_view text);

nlohmann::json to_json(const SessionPhase& phase);
nlohmann::json to_json(const Turn& turn);
nlohmann::json to_json(const MessageResult& result);
nlohmann::json to_json(const Event& event);

struct SessionSnapshot {
  std::string session_id;
  std::string backend;
  ConversationState state;
};

nlohmann::json to_json(const SessionSnapshot& snapshot);

struct ManagerOptions {
  EngineConfig engine;
  std::chrono::minutes idle_timeout{30};
};

/// In-memory session store. Sessions run concurrently; messages to one
/// session are processed one at a time, and snapshots of a session are
/// serialized against its transactions only.
class SessionManager {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  SessionManager(ScenarioStore scenarios, std::map<std::string, std::shared_ptr<PolicyBackend>> backends,
                 ManagerOptions options = {}, Clock clock = [] { return std::chrono::steady_clock::now(); });

  /// Throws UnknownScenario / UnknownBackend.
  std::string create_session(std::string_view scenario_id, std::string_view backend_name);
  /// Throws SessionNotFound; BackendUnavailable after committing a degraded turn.
  MessageResult handle_message(std::string_view session_id, std::string_view text);
  SessionSnapshot get_state(std::string_view session_id) const;
  bool delete_session(std::string_view session_id);

  /// Drops sessions idle for longer than the timeout; returns how many.
  std::size_t evict_idle();

  std::size_t session_count() const;
  std::vector<std::string> backend_names() const;
  const ScenarioStore& scenarios() const { return scenarios_; }

  /// Writes every session snapshot as one JSON document.
  void save_snapshot(const std::filesystem::path& path) const;

 private:
  struct Session {
    std::string id;
    std::string backend_name;
    std::shared_ptr<PolicyBackend> backend;
    mutable std::mutex mutex;
    ConversationState state;
    std::chrono::steady_clock::time_point last_active;
  };

  std::shared_ptr<Session> find(std::string_view id) const;
  std::string new_id();

  ScenarioStore scenarios_;
  std::map<std::string, std::shared_ptr<PolicyBackend>> backends_;
  ManagerOptions options_;
  Clock clock_;

  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>, std::less<>> sessions_;
  std::uint64_t id_counter_ = 0;
  std::uint64_t id_salt_ = 0;
};

}  // namespace manidialog
