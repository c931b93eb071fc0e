#pragma once

#include <optional>
#include <string>
#include <vector>

#include "harvest/kinematics.hpp"
#include "harvest/qp_solver.hpp"

namespace harvest {

enum class ConstraintKind { JointLimit, SelfCollision, Trunk, Fruit };

const char* to_string(ConstraintKind k);

/// Linear inequalities A qdot <= b with a provenance tag per row.
struct ConstraintSet {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<ConstraintKind> kinds;

  explicit ConstraintSet(int variables = kDualDof) : A(0, variables), b(0) {}

  int rows() const { return static_cast<int>(b.size()); }
  int variables() const { return static_cast<int>(A.cols()); }
  void add_row(const Eigen::RowVectorXd& a, double bound, ConstraintKind kind);
  void append(const ConstraintSet& other);
  int count(ConstraintKind kind) const;
  /// max_i (A_i x - b_i), or -inf for an empty set.
  double max_violation(const Eigen::VectorXd& x) const;
};

/// Velocity damper parameters: activation distance d_i, safety distance d_s, convergence speed xi.
struct DamperParams {
  double activation = 0.20;
  double safety = 0.05;
  double xi = 1.0;

  bool valid() const { return activation > safety && safety > 0.0 && xi > 0.0; }
};

/// Lower bound on the distance rate, -xi (d - d_s) / (d_i - d_s), or nullopt when d > d_i.
std::optional<double> damper_bound(double d, const DamperParams& p);

/// One potentially colliding pair. `jacobian` maps qdot to the velocity of the
/// body witness point relative to the obstacle witness point. `distance` is
/// the clearance between the bodies (core distance minus radii).
struct CollisionPair {
  ConstraintKind kind = ConstraintKind::Trunk;
  Vec3 body_point = Vec3::Zero();
  Vec3 obstacle_point = Vec3::Zero();
  double distance = 0.0;
  Eigen::Matrix<double, 3, Eigen::Dynamic> jacobian;
};

struct CollisionRowsResult {
  ConstraintSet rows;
  int skipped_degenerate = 0;
};

/// Emits A = -n J_p, b = -ddot* for every pair with d <= d_i, which encodes ddot >= ddot*.
/// Pairs whose witness points coincide are skipped and counted.
CollisionRowsResult collision_rows(const std::vector<CollisionPair>& pairs, const DamperParams& params,
                                   int variables = kDualDof);

/// Velocity and one-step position limits for both arms, as rows on qdot.
/// An out-of-range joint may only move back inward.
ConstraintSet joint_limit_rows(const DualArmModels& models, const DualArmState& state, double dt);

enum class TaskPriority { Absolute, Relative };

struct QPTask {
  Eigen::MatrixXd J;
  Eigen::VectorXd xdot;
  TaskPriority priority = TaskPriority::Absolute;
};

inline constexpr double kDefaultRegularization = 1e-6;

/// minimize |J x - xdot|^2 + lambda |x|^2  (as 1/2 x^T H x + g^T x)
QpProblem least_squares_problem(const Eigen::MatrixXd& J, const Eigen::VectorXd& xdot, double lambda);

/// Least-squares QP under a constraint set and optional equality rows.
QpResult solve_qp(const Eigen::MatrixXd& J, const Eigen::VectorXd& xdot, const ConstraintSet& constraints,
                  const Eigen::MatrixXd& E, const Eigen::VectorXd& f, double lambda = kDefaultRegularization);

struct HqpResult {
  QpStatus status = QpStatus::InvalidProblem;
  Eigen::VectorXd qdot;
  Eigen::VectorXd level1;
  bool level2_fallback = false;  ///< level 2 failed, returned the level-1 solution
  QpStatus level2_status = QpStatus::InvalidProblem;

  bool ok() const { return status == QpStatus::Optimal; }
};

/// Two-level cascade. Level 1 solves the absolute task under the constraints;
/// level 2 solves the relative task under the same constraints plus
/// J_a qdot = J_a qdot*_a.
class HqpSolver {
 public:
  explicit HqpSolver(double lambda = kDefaultRegularization, QpOptions options = {});

  HqpResult solve_hierarchy(const QPTask& task_a, const QPTask& task_r, const ConstraintSet& constraints);

  double regularization() const { return lambda_; }

 private:
  double lambda_;
  QpOptions options_;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_;
};

}  // namespace harvest
