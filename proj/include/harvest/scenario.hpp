#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "harvest/controller.hpp"
#include "harvest/render.hpp"

namespace harvest {

inline constexpr int kScenarioSchemaVersion = 1;

struct Scenario {
  std::string name;
  CameraIntrinsics camera;
  DualArmModels arms;
  DualArmState initial;
  SceneDescription scene;
  ControllerParams controller;
  DamperParams damper;
  PerceptionParams perception;
  double dt = 0.01;
  double max_time = 120.0;
  double perception_rate = 15.0;
  std::uint64_t seed = 0;
};

/// Every problem found, each prefixed with its field path (e.g. "scene.fruits[2].d_v").
class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Parses and validates. Unknown keys are errors. Throws ScenarioError.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::filesystem::path& path);

/// Semantic checks on an already-built scenario; empty when valid.
std::vector<std::string> validate_scenario(const Scenario& s);

}  // namespace harvest
