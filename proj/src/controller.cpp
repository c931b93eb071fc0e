#include "harvest/controller.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace harvest {

const char* to_string(HarvestPhase p) {
  switch (p) {
    case HarvestPhase::SelectFruit: return "SelectFruit";
    case HarvestPhase::Approach: return "Approach";
    case HarvestPhase::Harvest: return "Harvest";
    case HarvestPhase::CutAndCollect: return "CutAndCollect";
    case HarvestPhase::Leave: return "Leave";
    case HarvestPhase::Done: return "Done";
  }
  return "unknown";
}

bool legal_transition(HarvestPhase from, HarvestPhase to) {
  using P = HarvestPhase;
  switch (from) {
    case P::SelectFruit: return to == P::Approach || to == P::Done;
    case P::Approach: return to == P::Harvest || to == P::Leave;
    case P::Harvest: return to == P::CutAndCollect || to == P::Leave;
    case P::CutAndCollect: return to == P::Leave;
    case P::Leave: return to == P::SelectFruit;
    case P::Done: return false;
  }
  return false;
}

std::string ControllerParams::validate() const {
  const std::pair<const char*, double> positive[] = {
      {"d_s_cut", d_s_cut},         {"d_z", d_z},
      {"kp_position", kp_position}, {"kp_orientation", kp_orientation},
      {"v_max_linear", v_max_linear}, {"v_max_angular", v_max_angular},
      {"tol_position", tol_position}, {"tol_orientation", tol_orientation},
      {"phase_timeout", phase_timeout}, {"dwell", dwell}};
  for (const auto& [name, value] : positive) {
    if (!(value > 0.0) || !std::isfinite(value)) return std::string(name) + " must be positive";
  }
  if (tol_position >= d_z) return "tol_position must be smaller than d_z";
  return {};
}

std::pair<Pose6, Pose6> desired_poses(HarvestPhase phase, const FruitEstimate& target, const ControllerParams& p) {
  const double lift = target.d_v + p.d_s_cut;
  const Vec3& f = target.center;
  const bool standoff = phase == HarvestPhase::Approach || phase == HarvestPhase::Leave;
  Pose6 xa(Vec3(f.x(), f.y() - lift, standoff ? f.z() - p.d_z : f.z()), Vec3(0.0, 0.0, std::numbers::pi),
           {true, true, true, true, false, true});
  Pose6 xr(Vec3(0.0, -lift, 0.0), Vec3(0.0, std::numbers::pi / 2.0, std::numbers::pi));
  return {xa, xr};
}

ObstacleUpdate update_obstacles(const PerceptionSnapshot& snapshot, const FruitEstimate* target, HarvestPhase phase,
                                const ControllerParams& p, const std::set<int>& removed) {
  ObstacleUpdate out;
  if (snapshot.tree && target) {
    out.r_obs = (target->center - snapshot.tree->center).norm() - target->d_h;
    if (out.r_obs <= 0.0) {
      out.unreachable = true;
    } else {
      out.obstacles.trunk = Cylinder{snapshot.tree->center, Vec3::UnitY(), out.r_obs};
    }
  }
  const bool exempt = p.exempt_target && target &&
                      (phase == HarvestPhase::Harvest || phase == HarvestPhase::CutAndCollect ||
                       phase == HarvestPhase::Leave);
  for (const FruitEstimate& f : snapshot.fruits) {
    if (removed.count(f.id)) continue;
    if (exempt && f.id == target->id) continue;
    out.obstacles.fruits.emplace_back(f.id, Ellipsoid{f.center, f.d_h, f.d_v});
  }
  return out;
}

namespace {

struct WorldCapsule {
  int arm = 0;
  const LinkCapsule* spec = nullptr;
  Segment seg;
};

std::vector<WorldCapsule> world_capsules(const ArmModel& m, const ArmFrames& f, int arm) {
  std::vector<WorldCapsule> out;
  for (const LinkCapsule& c : m.capsules) {
    const auto& frame = f.frame_of(c.link);
    out.push_back({arm, &c, Segment{frame * c.a, frame * c.b}});
  }
  return out;
}

Eigen::Matrix<double, 3, Eigen::Dynamic> dual_point_jacobian(const ArmFrames& f, int arm, int link, const Vec3& p) {
  Eigen::Matrix<double, 3, Eigen::Dynamic> j = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, kDualDof);
  const int pj_link = link == LinkCapsule::kToolLink ? kArmDof - 1 : link;
  j.block<3, kArmDof>(0, arm * kArmDof) = point_jacobian(f, pj_link, p);
  return j;
}

}  // namespace

CollisionModel build_collision_model(const DualArmModels& models, const DualArmState& state,
                                     const ObstacleSet& obstacles, double activation) {
  CollisionModel out;
  const ArmFrames fa = compute_frames(models.cutting, state.cutting());
  const ArmFrames fb = compute_frames(models.collecting, state.collecting());
  std::vector<WorldCapsule> caps = world_capsules(models.cutting, fa, 0);
  const auto caps_b = world_capsules(models.collecting, fb, 1);
  caps.insert(caps.end(), caps_b.begin(), caps_b.end());
  const ArmFrames* frames[2] = {&fa, &fb};

  for (const WorldCapsule& c : caps) {
    if (!c.spec->environment) continue;
    const ArmFrames& f = *frames[c.arm];
    if (obstacles.trunk) {
      const Cylinder& cyl = *obstacles.trunk;
      const Witness w = closest_points_segment_line(c.seg, cyl.axis_point, cyl.axis_direction);
      const double d = w.distance - c.spec->radius - cyl.radius;
      out.clearance.trunk = std::min(out.clearance.trunk, d);
      if (d <= activation) {
        CollisionPair pair;
        pair.kind = ConstraintKind::Trunk;
        pair.body_point = w.on_first;
        pair.obstacle_point = w.on_second;
        pair.distance = d;
        pair.jacobian = dual_point_jacobian(f, c.arm, c.spec->link, w.on_first);
        out.pairs.push_back(std::move(pair));
      }
    }
    for (const auto& [id, e] : obstacles.fruits) {
      const Vec3 p = closest_point_on_segment(e.center, c.seg);
      const double d = dist_point_ellipsoid(p, e) - c.spec->radius;
      out.clearance.fruit = std::min(out.clearance.fruit, d);
      if (d <= activation) {
        CollisionPair pair;
        pair.kind = ConstraintKind::Fruit;
        pair.body_point = p;
        pair.obstacle_point = e.center;
        pair.distance = d;
        pair.jacobian = dual_point_jacobian(f, c.arm, c.spec->link, p);
        out.pairs.push_back(std::move(pair));
      }
    }
  }

  for (const WorldCapsule& a : caps) {
    if (a.arm != 0 || !a.spec->self_collision) continue;
    for (const WorldCapsule& b : caps) {
      if (b.arm != 1 || !b.spec->self_collision) continue;
      const Witness w = closest_points_segment_segment(a.seg, b.seg);
      const double d = w.distance - a.spec->radius - b.spec->radius;
      out.clearance.self = std::min(out.clearance.self, d);
      if (d > activation) continue;
      CollisionPair pair;
      pair.kind = ConstraintKind::SelfCollision;
      pair.body_point = w.on_first;
      pair.obstacle_point = w.on_second;
      pair.distance = d;
      pair.jacobian = dual_point_jacobian(fa, 0, a.spec->link, w.on_first) -
                      dual_point_jacobian(fb, 1, b.spec->link, w.on_second);
      out.pairs.push_back(std::move(pair));
    }
  }
  return out;
}

HarvestController::HarvestController(DualArmModels models, ControllerParams params, DamperParams damper, double dt)
    : models_(std::move(models)), params_(params), damper_(damper), dt_(dt) {}

void HarvestController::transition(HarvestPhase to, StepOutput& out, const std::string& detail) {
  ControllerEvent e;
  e.type = "phase";
  e.from = phase_;
  e.to = to;
  e.fruit_id = target_ ? target_->id : -1;
  e.detail = detail;
  out.events.push_back(e);
  phase_ = to;
  phase_time_ = 0.0;
}

bool HarvestController::choose_target(const PerceptionSnapshot& snapshot, StepOutput& out) {
  std::set<int> harvested(harvested_.begin(), harvested_.end());
  for (;;) {
    std::optional<FruitEstimate> best;
    for (const FruitEstimate& f : snapshot.fruits) {
      if (removed_.count(f.id)) continue;
      if (!best || f.cam_distance < best->cam_distance) best = f;
    }
    if (!best) return false;
    const ObstacleUpdate ob = update_obstacles(snapshot, &*best, HarvestPhase::Approach, params_, harvested);
    if (ob.unreachable) {
      blacklisted_.insert(best->id);
      removed_.insert(best->id);
      out.events.push_back({"blacklisted", best->id, phase_, phase_, "inside trunk obstacle"});
      continue;
    }
    target_ = best;
    out.events.push_back({"target_selected", best->id, phase_, phase_, {}});
    return true;
  }
}

StepOutput HarvestController::step(const DualArmState& state, const PerceptionSnapshot& snapshot) {
  StepOutput out;
  if (phase_ == HarvestPhase::Done) return out;
  phase_time_ += dt_;

  if (phase_ == HarvestPhase::SelectFruit) {
    if (!snapshot.warm) return out;
    if (!choose_target(snapshot, out)) {
      target_.reset();
      transition(HarvestPhase::Done, out);
      return out;
    }
    transition(HarvestPhase::Approach, out);
  }

  // Follow the registry's latest estimate of the target.
  for (const FruitEstimate& f : snapshot.fruits) {
    if (target_ && f.id == target_->id) target_ = f;
  }
  if (!snapshot.tree && !tree_missing_reported_) {
    out.events.push_back({"tree_not_found", -1, phase_, phase_, {}});
    tree_missing_reported_ = true;
  }

  std::set<int> harvested(harvested_.begin(), harvested_.end());
  const ObstacleUpdate ob = update_obstacles(snapshot, target_ ? &*target_ : nullptr, phase_, params_, harvested);
  out.diag.r_obs = ob.r_obs;

  const TaskKinematics abs = absolute_task(models_, state);
  const TaskKinematics rel = relative_task(models_, state);
  auto [xa, xr] = desired_poses(phase_, *target_, params_);
  const Pose6 cur_a = Pose6::from_isometry(abs.pose);
  const Pose6 cur_r = Pose6::from_isometry(rel.pose);
  xa.rpy[1] = cur_a.rpy[1];
  const Vec6 ea = pose_error(cur_a, xa);
  const Vec6 er = pose_error(cur_r, xr);
  out.diag.abs_position_error = ea.head<3>().norm();
  out.diag.abs_orientation_error = ea.tail<3>().norm();
  out.diag.rel_position_error = er.head<3>().norm();
  out.diag.rel_orientation_error = er.tail<3>().norm();
  const bool converged = out.diag.abs_position_error < params_.tol_position &&
                         out.diag.abs_orientation_error < params_.tol_orientation &&
                         out.diag.rel_position_error < params_.tol_position &&
                         out.diag.rel_orientation_error < params_.tol_orientation;

  auto blacklist_target = [&](const char* why) {
    blacklisted_.insert(target_->id);
    removed_.insert(target_->id);
    out.events.push_back({"blacklisted", target_->id, phase_, phase_, why});
  };

  if (ob.unreachable && (phase_ == HarvestPhase::Approach || phase_ == HarvestPhase::Harvest)) {
    blacklist_target("inside trunk obstacle");
    transition(HarvestPhase::Leave, out);
  }
  switch (phase_) {
    case HarvestPhase::Approach:
      if (converged) {
        transition(HarvestPhase::Harvest, out);
      } else if (phase_time_ > params_.phase_timeout) {
        blacklist_target("timeout");
        transition(HarvestPhase::Leave, out, "timeout");
      }
      break;
    case HarvestPhase::Harvest:
      if (converged) {
        cuts_.push_back({target_->id, target_->center, out.diag.abs_position_error, out.diag.rel_position_error,
                         out.diag.abs_orientation_error, out.diag.rel_orientation_error});
        transition(HarvestPhase::CutAndCollect, out);
      } else if (phase_time_ > params_.phase_timeout) {
        blacklist_target("timeout");
        transition(HarvestPhase::Leave, out, "timeout");
      }
      break;
    case HarvestPhase::CutAndCollect:
      if (phase_time_ >= params_.dwell - 1e-9) {
        harvested_.push_back(target_->id);
        removed_.insert(target_->id);
        out.events.push_back({"harvested", target_->id, phase_, phase_, {}});
        transition(HarvestPhase::Leave, out);
      }
      break;
    case HarvestPhase::Leave:
      if (converged || phase_time_ > params_.phase_timeout) {
        transition(HarvestPhase::SelectFruit, out, converged ? "" : "timeout");
        target_.reset();
        return out;
      }
      break;
    default:
      break;
  }

  // Phase may have changed: rebuild targets and obstacles for the command.
  harvested = std::set<int>(harvested_.begin(), harvested_.end());
  const ObstacleUpdate ob_cmd = update_obstacles(snapshot, &*target_, phase_, params_, harvested);
  auto [xa_cmd, xr_cmd] = desired_poses(phase_, *target_, params_);
  xa_cmd.rpy[1] = cur_a.rpy[1];
  Vec6 va = Vec6::Zero(), vr = Vec6::Zero();
  if (phase_ != HarvestPhase::CutAndCollect) {
    const Vec6 ea_cmd = pose_error(cur_a, xa_cmd);
    const Vec6 er_cmd = pose_error(cur_r, xr_cmd);
    auto clamp_norm = [](Eigen::Vector3d v, double vmax) {
      const double n = v.norm();
      return n > vmax ? Eigen::Vector3d(v * (vmax / n)) : v;
    };
    va.head<3>() = clamp_norm(params_.kp_position * ea_cmd.head<3>(), params_.v_max_linear);
    va.tail<3>() = clamp_norm(params_.kp_orientation * ea_cmd.tail<3>(), params_.v_max_angular);
    vr.head<3>() = clamp_norm(params_.kp_position * er_cmd.head<3>(), params_.v_max_linear);
    vr.tail<3>() = clamp_norm(params_.kp_orientation * er_cmd.tail<3>(), params_.v_max_angular);
  }

  QPTask task_a{select_rows(Eigen::MatrixXd(abs.jacobian), xa_cmd.mask), select_rows(va, xa_cmd.mask), TaskPriority::Absolute};
  QPTask task_r{select_rows(Eigen::MatrixXd(rel.jacobian), xr_cmd.mask), select_rows(vr, xr_cmd.mask), TaskPriority::Relative};

  ConstraintSet constraints = joint_limit_rows(models_, state, dt_);
  const CollisionModel cm = build_collision_model(models_, state, ob_cmd.obstacles, damper_.activation);
  out.diag.clearance = cm.clearance;
  out.diag.r_obs = ob_cmd.r_obs;
  const CollisionRowsResult rows = collision_rows(cm.pairs, damper_, kDualDof);
  out.diag.skipped_degenerate = rows.skipped_degenerate;
  constraints.append(rows.rows);

  const HqpResult res = solver_.solve_hierarchy(task_a, task_r, constraints);
  if (!res.ok()) {
    ++solver_failures_;
    out.diag.solver_ok = false;
    out.events.push_back({"solver_failure", target_ ? target_->id : -1, phase_, phase_, to_string(res.status)});
    return out;
  }
  out.qdot = res.qdot;
  out.diag.level2_fallback = res.level2_fallback;
  if (res.level2_fallback) {
    ++level2_fallbacks_;
    if (!in_fallback_) {
      out.events.push_back({"level2_fallback", target_ ? target_->id : -1, phase_, phase_,
                            to_string(res.level2_status)});
    }
  }
  in_fallback_ = res.level2_fallback;

  if (constraints.rows() > 0) {
    const Eigen::VectorXd slack = constraints.A * out.qdot - constraints.b;
    out.diag.max_violation = std::max(0.0, slack.maxCoeff());
    for (int i = 0; i < constraints.rows(); ++i) {
      if (slack[i] < -1e-9) continue;
      switch (constraints.kinds[i]) {
        case ConstraintKind::JointLimit: ++out.diag.active_joint_limit; break;
        case ConstraintKind::SelfCollision: ++out.diag.active_self; break;
        case ConstraintKind::Trunk: ++out.diag.active_trunk; break;
        case ConstraintKind::Fruit: ++out.diag.active_fruit; break;
      }
    }
  }
  return out;
}

}  // namespace harvest
