#pragma once

#include <atomic>
#include <chrono>
#include <deque>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "manidialog/actions.hpp"
#include "manidialog/chat_client.hpp"
#include "manidialog/error.hpp"
#include "manidialog/scene.hpp"

namespace testing_support {

inline std::string data_path(const std::string& name) { return std::string(MANIDIALOG_TEST_DATA_DIR) + "/" + name; }

inline manidialog::Scene kitchen() {
  manidialog::Scene s;
  s.scenario_id = "kitchen-1";
  s.description = "a kitchen";
  s.objects = {{"apple", {10, 10, 20, 20}, true},
               {"knife", {40, 10, 30, 8}, true},
               {"scissors", {80, 10, 20, 20}, true},
               {"cup", {120, 10, 20, 25}, true},
               {"fridge", {200, 0, 80, 160}, false}};
  s.affordances = {{"cut", {"knife", "scissors"}}, {"drink", {"cup"}}, {"eat", {"apple"}}};
  s.hazards = {"stab", "hurt"};
  return s;
}

inline std::string random_label(std::mt19937_64& rng) {
  static const std::vector<std::string> pool = {"apple", "knife", "cup",   "red_block", "x",
                                                "b-2",   "pen",   "a1b2c", "scissors",  "tape"};
  return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
}

/// Random sequence satisfying the grammar: refuse alone, or 1-4 actions with
/// at most one confirm whose proposal holds 1-3 grasps/responds.
inline manidialog::ActionSequence random_sequence(std::mt19937_64& rng) {
  using manidialog::Action;
  auto roll = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
  manidialog::ActionSequence seq;
  if (roll(8) == 0) {
    seq.actions.push_back(Action::refuse());
    return seq;
  }
  const int n = 1 + roll(4);
  bool confirmed = false;
  for (int i = 0; i < n; ++i) {
    const int k = roll(3);
    if (k == 2 && !confirmed) {
      confirmed = true;
      std::vector<Action> inner;
      const int m = 1 + roll(3);
      for (int j = 0; j < m; ++j) inner.push_back(roll(3) ? Action::grasp(random_label(rng)) : Action::respond());
      seq.actions.push_back(Action::confirm(std::move(inner)));
    } else if (k == 1) {
      seq.actions.push_back(Action::respond());
    } else {
      seq.actions.push_back(Action::grasp(random_label(rng)));
    }
  }
  return seq;
}

/// Independent serializer used as a reference for the canonical form.
inline std::string reference_serialize(const manidialog::ActionSequence& seq) {
  std::string out;
  std::function<void(const manidialog::Action&)> one = [&](const manidialog::Action& a) {
    if (const auto* g = a.as_grasp()) {
      out += "grasp(" + g->target + ")";
    } else if (const auto* c = a.as_confirm()) {
      out += "confirm(";
      for (std::size_t i = 0; i < c->proposal.size(); ++i) {
        if (i) out += "; ";
        one(c->proposal[i]);
      }
      out += ")";
    } else if (a.kind() == manidialog::ActionKind::Refuse) {
      out += "refuse";
    } else {
      out += "respond";
    }
  };
  for (std::size_t i = 0; i < seq.actions.size(); ++i) {
    if (i) out += "; ";
    one(seq.actions[i]);
  }
  return out;
}

/// Scripted chat transport: pops queued replies, records requests.
class ScriptedTransport final : public manidialog::ChatTransport {
 public:
  explicit ScriptedTransport(std::vector<std::string> replies) : replies_(replies.begin(), replies.end()) {}

  std::string complete(const manidialog::ChatRequest& request) override {
    std::lock_guard lock(mutex_);
    requests.push_back(request);
    if (replies_.empty()) throw manidialog::Error(manidialog::ErrorCode::TransportError, "script exhausted");
    std::string r = replies_.front();
    replies_.pop_front();
    if (r == "<fail>") throw manidialog::Error(manidialog::ErrorCode::TransportError, "scripted failure");
    return r;
  }

  std::vector<manidialog::ChatRequest> requests;

 private:
  std::mutex mutex_;
  std::deque<std::string> replies_;
};

struct ManualClock {
  std::shared_ptr<std::atomic<std::int64_t>> ms = std::make_shared<std::atomic<std::int64_t>>(0);
  std::chrono::steady_clock::time_point operator()() const {
    return std::chrono::steady_clock::time_point(std::chrono::milliseconds(ms->load()));
  }
  void advance(std::chrono::milliseconds d) const { *ms += d.count(); }
};

}  // namespace testing_support
