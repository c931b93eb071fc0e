#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "harvest/hqp.hpp"
#include "harvest/perception.hpp"

namespace harvest {

enum class HarvestPhase { SelectFruit, Approach, Harvest, CutAndCollect, Leave, Done };

const char* to_string(HarvestPhase p);
bool legal_transition(HarvestPhase from, HarvestPhase to);

struct ControllerParams {
  double d_s_cut = 0.02;   ///< security distance between cutter and peduncle, m
  double d_z = 0.15;       ///< approach standoff along the camera z axis, m
  double kp_position = 2.0;
  double kp_orientation = 1.0;
  double v_max_linear = 0.25;
  double v_max_angular = 0.5;
  double tol_position = 0.005;
  double tol_orientation = 0.05;
  double phase_timeout = 20.0;  ///< s
  double dwell = 1.0;           ///< s spent in CutAndCollect
  bool exempt_target = true;    ///< drop the target ellipsoid from Harvest until Leave ends

  /// Empty when valid, otherwise a description of the first problem.
  std::string validate() const;
};

/// (x_a, x_r) for the phase. x_a has pitch unconstrained; Approach and Leave back
/// off by d_z along z; x_r is the same in every phase.
std::pair<Pose6, Pose6> desired_poses(HarvestPhase phase, const FruitEstimate& target, const ControllerParams& p);

struct ObstacleSet {
  std::optional<Cylinder> trunk;
  std::vector<std::pair<int, Ellipsoid>> fruits;  ///< (fruit id, ellipsoid)
};

struct ObstacleUpdate {
  ObstacleSet obstacles;
  double r_obs = 0.0;
  bool unreachable = false;  ///< target on or inside the trunk surface (r_obs <= 0)
};

/// Trunk cylinder through P_t along camera y with r_obs = |P_f - P_t| - d_h of the
/// target, plus every other known fruit as an ellipsoid. Fruits in `removed` are skipped.
ObstacleUpdate update_obstacles(const PerceptionSnapshot& snapshot, const FruitEstimate* target, HarvestPhase phase,
                                const ControllerParams& p, const std::set<int>& removed = {});

/// Minimum clearances between the arm capsules and each obstacle class.
struct ClearanceReport {
  double trunk = std::numeric_limits<double>::infinity();
  double fruit = std::numeric_limits<double>::infinity();
  double self = std::numeric_limits<double>::infinity();
};

struct CollisionModel {
  std::vector<CollisionPair> pairs;  ///< pairs inside the damper activation distance
  ClearanceReport clearance;
};

/// Witness pairs for every environment capsule against the obstacles and every
/// cross-arm self-collision capsule pair.
CollisionModel build_collision_model(const DualArmModels& models, const DualArmState& state,
                                     const ObstacleSet& obstacles, double activation);

struct ControllerEvent {
  std::string type;
  int fruit_id = -1;
  HarvestPhase from = HarvestPhase::SelectFruit;
  HarvestPhase to = HarvestPhase::SelectFruit;
  std::string detail;
};

struct StepDiagnostics {
  double abs_position_error = 0.0;
  double abs_orientation_error = 0.0;
  double rel_position_error = 0.0;
  double rel_orientation_error = 0.0;
  ClearanceReport clearance;
  int active_joint_limit = 0;
  int active_self = 0;
  int active_trunk = 0;
  int active_fruit = 0;
  int skipped_degenerate = 0;
  double max_violation = 0.0;  ///< max(A qdot - b), 0 when no rows
  double r_obs = 0.0;
  bool solver_ok = true;
  bool level2_fallback = false;
};

struct StepOutput {
  DualJointVector qdot = DualJointVector::Zero();
  std::vector<ControllerEvent> events;
  StepDiagnostics diag;
};

/// Errors recorded when a fruit enters CutAndCollect.
struct CutRecord {
  int fruit_id = -1;
  Vec3 target = Vec3::Zero();
  double abs_position_error = 0.0;
  double rel_position_error = 0.0;
  double abs_orientation_error = 0.0;
  double rel_orientation_error = 0.0;
};

class HarvestController {
 public:
  HarvestController(DualArmModels models, ControllerParams params, DamperParams damper, double dt);

  StepOutput step(const DualArmState& state, const PerceptionSnapshot& snapshot);

  HarvestPhase phase() const { return phase_; }
  const std::optional<FruitEstimate>& target() const { return target_; }
  const std::vector<int>& harvested() const { return harvested_; }
  const std::set<int>& blacklisted() const { return blacklisted_; }
  const std::vector<CutRecord>& cut_records() const { return cuts_; }
  int solver_failures() const { return solver_failures_; }
  int level2_fallbacks() const { return level2_fallbacks_; }

 private:
  void transition(HarvestPhase to, StepOutput& out, const std::string& detail = {});
  bool choose_target(const PerceptionSnapshot& snapshot, StepOutput& out);

  DualArmModels models_;
  ControllerParams params_;
  DamperParams damper_;
  double dt_;
  HqpSolver solver_;
  HarvestPhase phase_ = HarvestPhase::SelectFruit;
  std::optional<FruitEstimate> target_;
  double phase_time_ = 0.0;
  std::vector<int> harvested_;
  std::set<int> blacklisted_;
  std::set<int> removed_;  ///< harvested or blacklisted, never targeted again
  std::vector<CutRecord> cuts_;
  int solver_failures_ = 0;
  int level2_fallbacks_ = 0;
  bool in_fallback_ = false;
  bool tree_missing_reported_ = false;
};

}  // namespace harvest
