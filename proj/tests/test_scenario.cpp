#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "harvest/scenario.hpp"

using namespace harvest;
using nlohmann::json;

namespace {

std::string source(const char* rel) { return std::string(HARVEST_SOURCE_DIR) + "/" + rel; }

json reference_json() {
  std::ifstream in(source("scenarios/reference_five.json"));
  return json::parse(in);
}

std::vector<std::string> problems_of(const json& j) {
  try {
    parse_scenario(j.dump());
  } catch (const ScenarioError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
  for (const auto& p : problems) {
    if (p.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("shipped scenarios load and validate") {
  for (const char* f : {"scenarios/reference_five.json", "scenarios/reference_unreachable.json"}) {
    const Scenario s = load_scenario(source(f));
    CHECK(validate_scenario(s).empty());
    CHECK(s.scene.fruits.size() == 5);
    CHECK(s.scene.trunk.has_value());
    CHECK(s.arms.cutting.capsules.size() == 4);
  }
}

TEST_CASE("parsed values reach the scenario") {
  const Scenario s = parse_scenario(reference_json().dump());
  CHECK(s.name == "reference_five");
  CHECK(s.camera.fx == 600.0);
  CHECK(s.dt == 0.01);
  CHECK(s.perception.tracker.n_init == 10);
  CHECK(s.perception.tracker.max_age == 300);
  CHECK(s.scene.fruits[0].name == "f1");
  CHECK(s.arms.collecting.joints[3].axis == Vec3::UnitY());
  CHECK(s.arms.cutting.capsules[3].link == LinkCapsule::kToolLink);
  CHECK_FALSE(s.arms.cutting.capsules[3].self_collision);
}

TEST_CASE("unknown keys are errors with their field path") {
  json j = reference_json();
  j["scene"]["fruits"][1]["colour"] = {1, 2, 3};
  j["extra"] = true;
  const auto problems = problems_of(j);
  CHECK(mentions(problems, "scenario.scene.fruits[1].colour"));
  CHECK(mentions(problems, "scenario.extra"));
}

TEST_CASE("all problems are reported together") {
  json j = reference_json();
  j["dt"] = -0.01;
  j["scene"]["fruits"][2]["center"] = {0.0, 0.0, -0.5};
  j["arms"]["cutting"]["joints"][4]["lower"] = 3.0;
  j["damper"]["safety"] = 0.5;
  const auto problems = problems_of(j);
  CHECK(problems.size() >= 4);
  CHECK(mentions(problems, "scenario.dt"));
  CHECK(mentions(problems, "scenario.scene.fruits[2].center"));
  CHECK(mentions(problems, "scenario.arms.cutting"));
  CHECK(mentions(problems, "scenario.damper"));
}

TEST_CASE("type and shape errors") {
  json j = reference_json();
  j["initial_q"]["collecting"] = {0.0, 0.1};
  j["camera"]["fx"] = "six hundred";
  const auto problems = problems_of(j);
  CHECK(mentions(problems, "scenario.initial_q.collecting"));
  CHECK(mentions(problems, "scenario.camera.fx"));
}

TEST_CASE("schema version") {
  json j = reference_json();
  j["schema_version"] = 2;
  CHECK(mentions(problems_of(j), "schema_version"));
  j.erase("schema_version");
  CHECK(mentions(problems_of(j), "schema_version"));
}

TEST_CASE("initial configuration outside the joint limits") {
  json j = reference_json();
  j["initial_q"]["cutting"][1] = 2.5;
  CHECK(mentions(problems_of(j), "initial_q.cutting"));
}

TEST_CASE("malformed text and missing files") {
  CHECK_THROWS_AS(parse_scenario("{ not json"), ScenarioError);
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), std::runtime_error);
}

TEST_CASE("a scene without trunk or fruits is valid") {
  json j = reference_json();
  j["scene"]["trunk"] = nullptr;
  j["scene"]["fruits"] = json::array();
  const Scenario s = parse_scenario(j.dump());
  CHECK_FALSE(s.scene.trunk);
  CHECK(s.scene.fruits.empty());
}
