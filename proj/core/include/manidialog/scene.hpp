#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace manidialog {

/// Pixel rectangle on the nominal 640x480 canvas, origin top-left.
struct Box {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  friend bool operator==(const Box&, const Box&) = default;
};

inline constexpr int kCanvasWidth = 640;
inline constexpr int kCanvasHeight = 480;

struct ObjectInstance {
  std::string label;
  Box box;
  bool graspable = true;

  friend bool operator==(const ObjectInstance&, const ObjectInstance&) = default;
};

struct Detection {
  std::string label;
  Box box;

  friend bool operator==(const Detection&, const Detection&) = default;
};

enum class GraspStatus { Grasped, AbsentObject, NotGraspable };

std::string_view to_string(GraspStatus status);
std::optional<GraspStatus> grasp_status_from_string(std::string_view s);

struct GraspOutcome {
  std::string target;
  GraspStatus status = GraspStatus::AbsentObject;

  friend bool operator==(const GraspOutcome&, const GraspOutcome&) = default;
};

/// Simulated environment for one scenario. Objects keep insertion order;
/// grasping is the only mutation.
struct Scene {
  std::string scenario_id;
  std::string description;
  std::vector<ObjectInstance> objects;
  // purpose token -> labels in priority order. Targets may name objects that
  // are not in the scene; resolution filters by presence.
  std::map<std::string, std::vector<std::string>> affordances;
  std::vector<std::string> hazards;

  const ObjectInstance* find(std::string_view label) const;
  bool has(std::string_view label) const { return find(label) != nullptr; }
  std::vector<std::string> labels() const;

  friend bool operator==(const Scene&, const Scene&) = default;
};

/// True iff `label` is a non-empty lowercase token usable in the action grammar.
bool is_valid_label(std::string_view label);

/// Throws Error{InvalidScene} if any object invariant is broken.
void check_scene(const Scene& scene);

std::vector<Detection> detect(const Scene& scene);

GraspOutcome execute_grasp(Scene& scene, std::string_view target);

std::vector<std::string> resolve_affordance(const Scene& scene, std::string_view purpose);

/// Keyed by scenario id.
class ScenarioStore {
 public:
  ScenarioStore() = default;
  explicit ScenarioStore(std::vector<Scene> scenes);

  const Scene* find(std::string_view id) const;
  const Scene& at(std::string_view id) const;  // throws UnknownScenario
  const std::vector<Scene>& scenes() const { return scenes_; }
  std::size_t size() const { return scenes_.size(); }
  bool empty() const { return scenes_.empty(); }

 private:
  std::vector<Scene> scenes_;
};

std::vector<Scene> parse_scenarios(const nlohmann::json& doc);
std::vector<Scene> parse_scenarios(std::string_view text);
std::vector<Scene> load_scenarios(const std::filesystem::path& path);

nlohmann::json to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);

}  // namespace manidialog
