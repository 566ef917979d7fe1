#include "manidialog/scene.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "manidialog/error.hpp"

namespace manidialog {

using nlohmann::json;

std::string_view to_string(GraspStatus status) {
  switch (status) {
    case GraspStatus::Grasped: return "Grasped";
    case GraspStatus::AbsentObject: return "AbsentObject";
    case GraspStatus::NotGraspable: return "NotGraspable";
  }
  return "AbsentObject";
}

std::optional<GraspStatus> grasp_status_from_string(std::string_view s) {
  if (s == "Grasped") return GraspStatus::Grasped;
  if (s == "AbsentObject") return GraspStatus::AbsentObject;
  if (s == "NotGraspable") return GraspStatus::NotGraspable;
  return std::nullopt;
}

const ObjectInstance* Scene::find(std::string_view label) const {
  auto it = std::find_if(objects.begin(), objects.end(),
                         [&](const ObjectInstance& o) { return o.label == label; });
  return it == objects.end() ? nullptr : &*it;
}

std::vector<std::string> Scene::labels() const {
  std::vector<std::string> out;
  out.reserve(objects.size());
  for (const auto& o : objects) out.push_back(o.label);
  return out;
}

bool is_valid_label(std::string_view label) {
  if (label.empty()) return false;
  return std::all_of(label.begin(), label.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

void check_scene(const Scene& scene) {
  std::set<std::string_view> seen;
  for (const auto& o : scene.objects) {
    if (!is_valid_label(o.label)) {
      throw Error(ErrorCode::InvalidScene,
                  "scenario '" + scene.scenario_id + "': invalid label '" + o.label + "'");
    }
    if (o.box.width <= 0 || o.box.height <= 0) {
      throw Error(ErrorCode::InvalidScene,
                  "scenario '" + scene.scenario_id + "': non-positive box for '" + o.label + "'");
    }
    if (!seen.insert(o.label).second) {
      throw Error(ErrorCode::InvalidScene,
                  "scenario '" + scene.scenario_id + "': duplicate label '" + o.label + "'");
    }
  }
}

std::vector<Detection> detect(const Scene& scene) {
  std::vector<Detection> out;
  out.reserve(scene.objects.size());
  for (const auto& o : scene.objects) out.push_back({o.label, o.box});
  return out;
}

GraspOutcome execute_grasp(Scene& scene, std::string_view target) {
  auto it = std::find_if(scene.objects.begin(), scene.objects.end(),
                         [&](const ObjectInstance& o) { return o.label == target; });
  if (it == scene.objects.end()) return {std::string(target), GraspStatus::AbsentObject};
  if (!it->graspable) return {std::string(target), GraspStatus::NotGraspable};
  scene.objects.erase(it);
  return {std::string(target), GraspStatus::Grasped};
}

std::vector<std::string> resolve_affordance(const Scene& scene, std::string_view purpose) {
  std::vector<std::string> out;
  auto it = scene.affordances.find(std::string(purpose));
  if (it == scene.affordances.end()) return out;
  for (const auto& label : it->second) {
    if (scene.has(label) && std::find(out.begin(), out.end(), label) == out.end()) {
      out.push_back(label);
    }
  }
  return out;
}

ScenarioStore::ScenarioStore(std::vector<Scene> scenes) : scenes_(std::move(scenes)) {
  std::set<std::string_view> ids;
  for (const auto& s : scenes_) {
    if (!ids.insert(s.scenario_id).second) {
      throw Error(ErrorCode::DuplicateScenario, "scenario id '" + s.scenario_id + "' appears twice");
    }
  }
}

const Scene* ScenarioStore::find(std::string_view id) const {
  auto it = std::find_if(scenes_.begin(), scenes_.end(),
                         [&](const Scene& s) { return s.scenario_id == id; });
  return it == scenes_.end() ? nullptr : &*it;
}

const Scene& ScenarioStore::at(std::string_view id) const {
  if (const Scene* s = find(id)) return *s;
  throw Error(ErrorCode::UnknownScenario, "no scenario with id '" + std::string(id) + "'");
}

json to_json(const Scene& scene) {
  json objects = json::array();
  for (const auto& o : scene.objects) {
    objects.push_back({{"label", o.label},
                       {"box", {o.box.x, o.box.y, o.box.width, o.box.height}},
                       {"graspable", o.graspable}});
  }
  json affordances = json::object();
  for (const auto& [purpose, labels] : scene.affordances) affordances[purpose] = labels;
  return {{"id", scene.scenario_id},
          {"description", scene.description},
          {"objects", objects},
          {"affordances", affordances},
          {"hazards", scene.hazards}};
}

Scene scene_from_json(const json& j) {
  try {
    Scene s;
    s.scenario_id = j.at("id").get<std::string>();
    s.description = j.at("description").get<std::string>();
    for (const auto& o : j.at("objects")) {
      ObjectInstance obj;
      obj.label = o.at("label").get<std::string>();
      const auto& box = o.at("box");
      if (!box.is_array() || box.size() != 4) {
        throw Error(ErrorCode::ParseError, "box of '" + obj.label + "' must be [x, y, w, h]");
      }
      obj.box = {box[0].get<int>(), box[1].get<int>(), box[2].get<int>(), box[3].get<int>()};
      obj.graspable = o.value("graspable", true);
      s.objects.push_back(std::move(obj));
    }
    if (j.contains("affordances")) {
      for (const auto& [purpose, labels] : j.at("affordances").items()) {
        s.affordances[purpose] = labels.get<std::vector<std::string>>();
      }
    }
    if (j.contains("hazards")) s.hazards = j.at("hazards").get<std::vector<std::string>>();
    if (s.scenario_id.empty()) throw Error(ErrorCode::ParseError, "scenario id must be non-empty");
    check_scene(s);
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("scenario: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidScene) throw Error(ErrorCode::ParseError, e.detail());
    throw;
  }
}

std::vector<Scene> parse_scenarios(const json& doc) {
  if (!doc.is_object() || !doc.contains("scenarios") || !doc.at("scenarios").is_array()) {
    throw Error(ErrorCode::ParseError, "scenario file must contain a 'scenarios' array");
  }
  std::vector<Scene> out;
  std::set<std::string> ids;
  for (const auto& item : doc.at("scenarios")) {
    Scene s = scene_from_json(item);
    if (!ids.insert(s.scenario_id).second) {
      throw Error(ErrorCode::DuplicateScenario, "scenario id '" + s.scenario_id + "' appears twice");
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Scene> parse_scenarios(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return parse_scenarios(doc);
}

std::vector<Scene> load_scenarios(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenarios(std::string_view(buf.str()));
}

}  // namespace manidialog
