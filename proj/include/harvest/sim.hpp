#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "harvest/scenario.hpp"

namespace harvest {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// q += qdot * dt, then clamp into the joint limits. Returns how many joints
/// were clamped by more than 1e-9 rad. Throws SimulationError on non-finite qdot.
int integrate(const DualArmModels& models, DualArmState& state, const DualJointVector& qdot, double dt);

struct StepRecord {
  std::int64_t step = 0;
  double t = 0.0;
  HarvestPhase phase = HarvestPhase::SelectFruit;
  int target = -1;
  std::int64_t perception_frame = -1;
  DualJointVector q = DualJointVector::Zero();
  DualJointVector qdot = DualJointVector::Zero();
  StepDiagnostics diag;
};

struct RunEvent {
  std::int64_t step = 0;
  double t = 0.0;
  std::string type;
  int fruit_id = -1;
  std::string fruit_name;
  std::string from;
  std::string to;
  std::string detail;
};

enum class RunStatus { Done, Timeout, Aborted };
const char* to_string(RunStatus s);

struct RunSummary {
  std::string scenario;
  RunStatus status = RunStatus::Timeout;
  std::string abort_reason;
  std::vector<int> harvested;
  std::vector<std::string> harvested_names;
  std::vector<int> blacklisted;
  std::int64_t steps = 0;
  double sim_time = 0.0;
  std::int64_t perception_frames = 0;
  int clamp_count = 0;
  int collision_events = 0;
  int solver_failures = 0;
  int level2_fallbacks = 0;
  ClearanceReport min_clearance;        ///< against the controller's obstacle model
  double min_true_trunk_clearance = std::numeric_limits<double>::infinity();
  double min_true_fruit_clearance = std::numeric_limits<double>::infinity();
  double max_violation = 0.0;
  std::vector<CutRecord> cuts;
  std::string simd;
  double wall_time = 0.0;
};

struct RunLog {
  std::vector<StepRecord> steps;
  std::vector<RunEvent> events;
  RunSummary summary;
};

RunLog run(const Scenario& scenario);

/// Ground-truth scene fruit index nearest to p, or -1 when none lies within max_distance.
int nearest_scene_fruit(const SceneDescription& scene, const Vec3& p, double max_distance);

/// Writes timeseries.csv, events.ndjson and summary.json into dir. All files are
/// staged first, so an unwritable target leaves existing outputs untouched.
void export_run(const RunLog& log, const std::filesystem::path& dir);

std::string timeseries_header();
std::string timeseries_csv(const RunLog& log);
std::string events_ndjson(const RunLog& log);
std::string summary_json(const RunSummary& s);

}  // namespace harvest
