#include "manidialog/session.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "manidialog/error.hpp"
#include "manidialog/text.hpp"

namespace manidialog {

using nlohmann::json;

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

json outcomes_json(std::span<const GraspOutcome> outcomes) {
  json out = json::array();
  for (const auto& o : outcomes) out.push_back({{"target", o.target}, {"status", std::string(to_string(o.status))}});
  return out;
}

std::vector<std::string> removed_labels(const Scene& before, const Scene& after) {
  std::vector<std::string> out;
  for (const auto& o : before.objects) {
    if (!after.has(o.label)) out.push_back(o.label);
  }
  return out;
}

}  // namespace

json to_json(const SessionPhase& phase) {
  if (const ActionSequence* p = phase.pending()) {
    return {{"state", "AwaitingConfirmation"}, {"proposal", serialize_actions(*p)}};
  }
  return {{"state", "Idle"}};
}

json to_json(const Turn& turn) {
  return {{"query", turn.query}, {"actions", serialize_actions(turn.actions)}, {"response", turn.response}};
}

json to_json(const MessageResult& r) {
  json out = {{"actions", r.actions},
              {"response", r.response},
              {"executed", outcomes_json(r.executed)},
              {"phase_after", to_json(r.phase_after)},
              {"scene_diff", {{"removed", r.removed}}}};
  if (r.degraded) {
    out["degraded"] = true;
    out["error"] = r.error;
  }
  return out;
}

json to_json(const Event& e) {
  return {{"timestamp_ms", e.timestamp_ms}, {"transaction", e.transaction}, {"kind", e.kind}, {"payload", e.payload}};
}

json to_json(const SessionSnapshot& s) {
  json history = json::array();
  for (const auto& t : s.state.history.turns()) history.push_back(to_json(t));
  json events = json::array();
  for (const auto& e : s.state.events) events.push_back(to_json(e));
  return {{"session_id", s.session_id},
          {"backend", s.backend},
          {"scene", to_json(s.state.scene)},
          {"history", history},
          {"phase", to_json(s.state.phase)},
          {"events", events}};
}

MessageResult process_message(ConversationState& state, PolicyBackend& backend, const EngineConfig& config,
                              std::string_view text) {
  if (text::trim(text).empty()) throw Error(ErrorCode::PreconditionFailed, "message text must be non-empty");

  const std::uint64_t tx = state.transactions + 1;
  std::vector<Event> events;
  auto log = [&](std::string kind, json payload) {
    events.push_back({now_ms(), tx, std::move(kind), std::move(payload)});
  };
  log("message", {{"text", text}});

  PromptContext ctx = build_prompt(config.prompt, state.scene, state.history, text);
  ctx.phase = state.phase;
  log("prompt", {{"prompt", ctx.prompt}, {"phase", to_json(ctx.phase)}});

  std::optional<ReplyClass> reply;
  if (state.phase.awaiting()) {
    reply = match_hazard(state.scene, text).empty() ? classify_reply(config.lexicon, text) : ReplyClass::Other;
  }

  try {
    Scene scene = state.scene;
    ActionSequence actions;
    std::optional<PhaseStep> released;
    if (reply && *reply != ReplyClass::Other) {
      released = step_phase(state.phase, {}, reply);
      actions = released->scheduled ? *released->scheduled : ActionSequence{{Action::respond()}};
      log("decide", {{"actions", serialize_actions(actions)}, {"source", "confirmation"},
                     {"reply", std::string(to_string(*reply))}});
    } else {
      actions = backend.decide_actions(ctx);
      log("decide", {{"actions", serialize_actions(actions)}, {"source", backend.name()}});
    }

    std::vector<GraspOutcome> outcomes;
    const auto violations = validate(scene, actions);
    if (!violations.empty()) {
      json list = json::array();
      for (const auto& v : violations) {
        list.push_back(describe(v));
        if (v.kind == Violation::Kind::AbsentTarget) outcomes.push_back({v.label, GraspStatus::AbsentObject});
        if (v.kind == Violation::Kind::NotGraspable) outcomes.push_back({v.label, GraspStatus::NotGraspable});
      }
      log("validate", {{"violations", list}, {"downgraded_from", serialize_actions(actions)}});
      actions = ActionSequence{{Action::respond()}};
    } else {
      log("validate", {{"violations", json::array()}});
    }

    std::vector<GraspOutcome> executed;
    for (const auto& a : actions.actions) {
      if (const auto* g = a.as_grasp()) {
        executed.push_back(execute_grasp(scene, g->target));
        outcomes.push_back(executed.back());
      }
    }
    log("execute", {{"outcomes", outcomes_json(executed)}});

    std::string response = backend.generate_response(ctx, actions, outcomes);
    if (text::trim(response).empty()) response = fallback_response();
    log("respond", {{"request", response_request(ctx, actions)}, {"response", response}});

    const PhaseStep step = released ? *released : step_phase(state.phase, actions, reply);
    log("phase", {{"before", to_json(state.phase)}, {"after", to_json(step.next)}});

    DialogueHistory history = append_turn(state.history, Turn{std::string(text), actions, response});
    log("commit", {{"turns", history.size()}});

    MessageResult result;
    result.actions = serialize_actions(actions);
    result.response = response;
    result.executed = std::move(executed);
    result.phase_after = step.next;
    result.removed = removed_labels(state.scene, scene);

    state.scene = std::move(scene);
    state.history = std::move(history);
    state.phase = step.next;
    state.events.insert(state.events.end(), std::make_move_iterator(events.begin()),
                        std::make_move_iterator(events.end()));
    state.transactions = tx;
    return result;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TransportError) throw;
    events.resize(1);  // keep only the message event
    const ActionSequence fallback{{Action::respond()}};
    const std::string response = fallback_response();
    log("degraded", {{"error", e.detail()}});
    DialogueHistory history = append_turn(state.history, Turn{std::string(text), fallback, response});
    log("commit", {{"turns", history.size()}});

    MessageResult result;
    result.actions = serialize_actions(fallback);
    result.response = response;
    result.phase_after = state.phase;
    result.degraded = true;
    result.error = e.detail();

    state.history = std::move(history);
    state.events.insert(state.events.end(), std::make_move_iterator(events.begin()),
                        std::make_move_iterator(events.end()));
    state.transactions = tx;
    return result;
  }
}

// ---------------------------------------------------------------------------

SessionManager::SessionManager(ScenarioStore scenarios, std::map<std::string, std::shared_ptr<PolicyBackend>> backends,
                               ManagerOptions options, Clock clock)
    : scenarios_(std::move(scenarios)),
      backends_(std::move(backends)),
      options_(std::move(options)),
      clock_(std::move(clock)),
      id_salt_(std::random_device{}()) {}

std::string SessionManager::new_id() {
  std::mt19937_64 mix(id_salt_ ^ (++id_counter_ * 0x9E3779B97F4A7C15ULL));
  char buf[24];
  std::snprintf(buf, sizeof buf, "s-%016llx", static_cast<unsigned long long>(mix()));
  return buf;
}

std::string SessionManager::create_session(std::string_view scenario_id, std::string_view backend_name) {
  const Scene& scene = scenarios_.at(scenario_id);
  auto backend = backends_.find(std::string(backend_name));
  if (backend == backends_.end()) {
    throw Error(ErrorCode::UnknownBackend, "no backend named '" + std::string(backend_name) + "'");
  }
  auto session = std::make_shared<Session>();
  session->backend_name = backend->first;
  session->backend = backend->second;
  session->state.scene = scene;
  session->last_active = clock_();

  evict_idle();
  std::unique_lock lock(sessions_mutex_);
  std::string id;
  do {
    id = new_id();
  } while (sessions_.count(id));
  session->id = id;
  sessions_.emplace(id, std::move(session));
  return id;
}

std::shared_ptr<SessionManager::Session> SessionManager::find(std::string_view id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::SessionNotFound, "no session '" + std::string(id) + "'");
  return it->second;
}

MessageResult SessionManager::handle_message(std::string_view session_id, std::string_view text) {
  auto session = find(session_id);
  std::lock_guard lock(session->mutex);
  session->last_active = clock_();
  MessageResult result = process_message(session->state, *session->backend, options_.engine, text);
  if (result.degraded) throw Error(ErrorCode::BackendUnavailable, result.error);
  return result;
}

SessionSnapshot SessionManager::get_state(std::string_view session_id) const {
  auto session = find(session_id);
  std::lock_guard lock(session->mutex);
  return {session->id, session->backend_name, session->state};
}

bool SessionManager::delete_session(std::string_view session_id) {
  std::unique_lock lock(sessions_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return false;
  sessions_.erase(it);
  return true;
}

std::size_t SessionManager::evict_idle() {
  const auto now = clock_();
  std::unique_lock lock(sessions_mutex_);
  std::size_t evicted = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    std::unique_lock session_lock(it->second->mutex, std::try_to_lock);
    // A session busy with a message is active by definition.
    if (session_lock.owns_lock() && now - it->second->last_active > options_.idle_timeout) {
      session_lock.unlock();
      it = sessions_.erase(it);
      ++evicted;
    } else {
      ++it;
    }
  }
  return evicted;
}

std::size_t SessionManager::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

std::vector<std::string> SessionManager::backend_names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : backends_) out.push_back(name);
  return out;
}

void SessionManager::save_snapshot(const std::filesystem::path& path) const {
  std::vector<std::shared_ptr<Session>> sessions;
  {
    std::shared_lock lock(sessions_mutex_);
    for (const auto& [_, s] : sessions_) sessions.push_back(s);
  }
  json doc = {{"sessions", json::array()}};
  for (const auto& s : sessions) {
    std::lock_guard lock(s->mutex);
    doc["sessions"].push_back(to_json(SessionSnapshot{s->id, s->backend_name, s->state}));
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write session snapshot " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace manidialog
