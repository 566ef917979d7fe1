#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "manidialog/error.hpp"
#include "manidialog/remote_backend.hpp"
#include "manidialog/session.hpp"
#include "support.hpp"

using namespace manidialog;
using testing_support::kitchen;
using testing_support::ManualClock;
using testing_support::ScriptedTransport;

namespace {

std::vector<std::string> event_kinds(const ConversationState& s, std::uint64_t tx) {
  std::vector<std::string> out;
  for (const auto& e : s.events)
    if (e.transaction == tx) out.push_back(e.kind);
  return out;
}

SessionManager make_manager(ManualClock clock = {}, std::shared_ptr<PolicyBackend> remote = nullptr) {
  std::map<std::string, std::shared_ptr<PolicyBackend>> backends{{"oracle", std::make_shared<OracleBackend>()}};
  if (remote) backends.emplace("remote", remote);
  ManagerOptions opt;
  opt.idle_timeout = std::chrono::minutes(30);
  return SessionManager(ScenarioStore({kitchen()}), std::move(backends), opt, clock);
}

}  // namespace

TEST(ProcessMessage, EventOrderAndCommit) {
  ConversationState s{kitchen(), {}, {}, {}, 0};
  OracleBackend oracle;
  const MessageResult r = process_message(s, oracle, {}, "hand me the apple");
  EXPECT_EQ(r.actions, "grasp(apple)");
  EXPECT_EQ(r.removed, std::vector<std::string>{"apple"});
  ASSERT_EQ(r.executed.size(), 1u);
  EXPECT_EQ(r.executed[0].status, GraspStatus::Grasped);
  EXPECT_FALSE(s.scene.find("apple"));
  EXPECT_EQ(s.history.size(), 1u);
  EXPECT_EQ(s.transactions, 1u);
  EXPECT_EQ(event_kinds(s, 1), (std::vector<std::string>{"message", "prompt", "decide", "validate", "execute",
                                                         "respond", "phase", "commit"}));
}

TEST(ProcessMessage, ConfirmThenAgree) {
  ConversationState s{kitchen(), {}, {}, {}, 0};
  OracleBackend oracle;
  auto r = process_message(s, oracle, {}, "hand me the apple");
  r = process_message(s, oracle, {}, "I need to cut something");
  EXPECT_EQ(r.actions, "confirm(grasp(knife))");
  EXPECT_TRUE(r.removed.empty());
  EXPECT_TRUE(s.phase.awaiting());
  EXPECT_TRUE(s.scene.find("knife"));
  r = process_message(s, oracle, {}, "yes please");
  EXPECT_EQ(r.actions, "grasp(knife)");
  EXPECT_EQ(r.removed, std::vector<std::string>{"knife"});
  EXPECT_FALSE(s.phase.awaiting());
  EXPECT_EQ(s.history.size(), 3u);
  EXPECT_EQ(s.events[s.events.size() - 6].payload.at("source"), "confirmation");
}

TEST(ProcessMessage, ConfirmThenDecline) {
  ConversationState s{kitchen(), {}, {}, {}, 0};
  OracleBackend oracle;
  process_message(s, oracle, {}, "I need to cut something");
  const auto r = process_message(s, oracle, {}, "no thanks");
  EXPECT_EQ(r.actions, "respond");
  EXPECT_TRUE(r.removed.empty());
  EXPECT_TRUE(s.scene.find("knife"));
  EXPECT_FALSE(s.phase.awaiting());
}

TEST(ProcessMessage, InvalidActionsDowngraded) {
  ConversationState s{kitchen(), {}, {}, {}, 0};
  auto t = std::make_shared<ScriptedTransport>(std::vector<std::string>{"grasp(apple)", "Done."});
  RemoteBackend remote(t);
  process_message(s, remote, {}, "hand me the apple");
  // apple is gone now; a backend still asking for it is downgraded
  auto t2 = std::make_shared<ScriptedTransport>(
      std::vector<std::string>{"grasp(apple)", "grasp(apple)", "grasp(apple)", "It is gone."});
  RemoteBackend remote2(t2);
  const auto r = process_message(s, remote2, {}, "another apple please");
  EXPECT_EQ(r.actions, "respond");
  EXPECT_TRUE(r.removed.empty());
}

TEST(ProcessMessage, TransportFailureIsDegraded) {
  ConversationState s{kitchen(), {}, {}, {}, 0};
  OracleBackend oracle;
  process_message(s, oracle, {}, "I need to cut something");
  const Scene before = s.scene;
  const SessionPhase phase = s.phase;
  auto t = std::make_shared<ScriptedTransport>(std::vector<std::string>{"<fail>"});
  RemoteBackend remote(t);
  const auto r = process_message(s, remote, {}, "what time is it?");
  EXPECT_TRUE(r.degraded);
  EXPECT_EQ(r.actions, "respond");
  EXPECT_EQ(s.scene, before);
  EXPECT_EQ(s.phase, phase);
  EXPECT_EQ(s.history.size(), 2u);
  EXPECT_EQ(event_kinds(s, 2), (std::vector<std::string>{"message", "degraded", "commit"}));
}

TEST(ProcessMessage, EmptyTextRejected) {
  ConversationState s{kitchen(), {}, {}, {}, 0};
  OracleBackend oracle;
  EXPECT_THROW(process_message(s, oracle, {}, "   "), Error);
  EXPECT_EQ(s.transactions, 0u);
  EXPECT_TRUE(s.events.empty());
}

TEST(Manager, CreateAndErrors) {
  auto m = make_manager();
  try {
    m.create_session("nowhere", "oracle");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownScenario);
  }
  try {
    m.create_session("kitchen-1", "gpt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownBackend);
  }
  try {
    m.handle_message("s-missing", "hi");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SessionNotFound);
  }
  const auto a = m.create_session("kitchen-1", "oracle");
  const auto b = m.create_session("kitchen-1", "oracle");
  EXPECT_NE(a, b);
  EXPECT_EQ(m.session_count(), 2u);
  EXPECT_TRUE(m.delete_session(a));
  EXPECT_FALSE(m.delete_session(a));
}

TEST(Manager, SessionsAreIsolated) {
  auto m = make_manager();
  const auto a = m.create_session("kitchen-1", "oracle");
  const auto b = m.create_session("kitchen-1", "oracle");
  m.handle_message(a, "hand me the apple");
  EXPECT_FALSE(m.get_state(a).state.scene.find("apple"));
  EXPECT_TRUE(m.get_state(b).state.scene.find("apple"));
  EXPECT_EQ(m.get_state(b).state.history.size(), 0u);
}

TEST(Manager, DegradedTurnSurfacesAsUnavailable) {
  auto t = std::make_shared<ScriptedTransport>(std::vector<std::string>{"<fail>"});
  auto m = make_manager({}, std::make_shared<RemoteBackend>(t));
  const auto id = m.create_session("kitchen-1", "remote");
  try {
    m.handle_message(id, "hi");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BackendUnavailable);
  }
  EXPECT_EQ(m.get_state(id).state.history.size(), 1u);
}

TEST(Manager, IdleEviction) {
  ManualClock clock;
  auto m = make_manager(clock);
  const auto a = m.create_session("kitchen-1", "oracle");
  clock.advance(std::chrono::minutes(20));
  const auto b = m.create_session("kitchen-1", "oracle");
  clock.advance(std::chrono::minutes(15));
  EXPECT_EQ(m.evict_idle(), 1u);
  EXPECT_THROW(m.get_state(a), Error);
  m.handle_message(b, "hello");
  clock.advance(std::chrono::minutes(29));
  EXPECT_EQ(m.evict_idle(), 0u);
  clock.advance(std::chrono::minutes(2));
  EXPECT_EQ(m.evict_idle(), 1u);
  EXPECT_EQ(m.session_count(), 0u);
}

TEST(Manager, ConcurrentSessionsStayConsistent) {
  auto m = make_manager();
  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(m.create_session("kitchen-1", "oracle"));
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int k = 0; k < 20; ++k) m.handle_message(ids[static_cast<std::size_t>((t + k) % 4)], "how are you?");
    });
  }
  for (auto& t : threads) t.join();
  std::size_t turns = 0;
  for (const auto& id : ids) {
    const auto snap = m.get_state(id);
    turns += snap.state.transactions;
    // every transaction is complete and contiguous in the log
    std::uint64_t tx = 0;
    for (const auto& e : snap.state.events) {
      if (e.kind == "message") {
        EXPECT_EQ(e.transaction, tx + 1);
        tx = e.transaction;
      } else {
        EXPECT_EQ(e.transaction, tx);
      }
    }
    EXPECT_EQ(snap.state.events.back().kind, "commit");
  }
  EXPECT_EQ(turns, 160u);
}

TEST(Manager, SnapshotFile) {
  auto m = make_manager();
  const auto id = m.create_session("kitchen-1", "oracle");
  m.handle_message(id, "hand me the apple");
  const auto path = std::filesystem::temp_directory_path() / "manidialog_snapshot_test.json";
  m.save_snapshot(path);
  std::ifstream in(path);
  const auto doc = nlohmann::json::parse(in);
  ASSERT_EQ(doc.at("sessions").size(), 1u);
  EXPECT_EQ(doc["sessions"][0].at("session_id"), id);
  EXPECT_EQ(doc["sessions"][0].at("history")[0].at("actions"), "grasp(apple)");
  std::filesystem::remove(path);
}
