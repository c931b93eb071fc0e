#include "harvest/hqp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace harvest {

const char* to_string(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::JointLimit: return "joint_limit";
    case ConstraintKind::SelfCollision: return "self_collision";
    case ConstraintKind::Trunk: return "trunk";
    case ConstraintKind::Fruit: return "fruit";
  }
  return "unknown";
}

void ConstraintSet::add_row(const Eigen::RowVectorXd& a, double bound, ConstraintKind kind) {
  const int r = rows();
  A.conservativeResize(r + 1, Eigen::NoChange);
  b.conservativeResize(r + 1);
  A.row(r) = a;
  b[r] = bound;
  kinds.push_back(kind);
}

void ConstraintSet::append(const ConstraintSet& other) {
  const int r = rows();
  A.conservativeResize(r + other.rows(), Eigen::NoChange);
  b.conservativeResize(r + other.rows());
  A.bottomRows(other.rows()) = other.A;
  b.tail(other.rows()) = other.b;
  kinds.insert(kinds.end(), other.kinds.begin(), other.kinds.end());
}

int ConstraintSet::count(ConstraintKind kind) const {
  return static_cast<int>(std::count(kinds.begin(), kinds.end(), kind));
}

double ConstraintSet::max_violation(const Eigen::VectorXd& x) const {
  if (rows() == 0) return -std::numeric_limits<double>::infinity();
  return (A * x - b).maxCoeff();
}

std::optional<double> damper_bound(double d, const DamperParams& p) {
  if (d > p.activation) return std::nullopt;
  return -p.xi * (d - p.safety) / (p.activation - p.safety);
}

CollisionRowsResult collision_rows(const std::vector<CollisionPair>& pairs, const DamperParams& params,
                                   int variables) {
  CollisionRowsResult out{ConstraintSet(variables), 0};
  for (const auto& pair : pairs) {
    const auto bound = damper_bound(pair.distance, params);
    if (!bound) continue;
    const Vec3 delta = pair.body_point - pair.obstacle_point;
    const double len = delta.norm();
    if (len < 1e-12) {
      ++out.skipped_degenerate;
      continue;
    }
    const Vec3 n = delta / len;
    out.rows.add_row(-(n.transpose() * pair.jacobian), -*bound, pair.kind);
  }
  return out;
}

ConstraintSet joint_limit_rows(const DualArmModels& models, const DualArmState& state, double dt) {
  ConstraintSet c(kDualDof);
  for (int arm = 0; arm < 2; ++arm) {
    const ArmModel& m = arm == 0 ? models.cutting : models.collecting;
    for (int j = 0; j < kArmDof; ++j) {
      const int idx = arm * kArmDof + j;
      const auto& jd = m.joints[j];
      const double q = state.q[idx];
      const double v = jd.max_velocity;
      // Clamping both bounds into [-v, v] keeps the pair mutually feasible.
      const double upper = std::clamp((jd.upper - q) / dt, -v, v);
      const double lower = std::clamp((jd.lower - q) / dt, -v, v);
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(kDualDof);
      row[idx] = 1.0;
      c.add_row(row, upper, ConstraintKind::JointLimit);
      c.add_row(-row, -lower, ConstraintKind::JointLimit);
    }
  }
  return c;
}

QpProblem least_squares_problem(const Eigen::MatrixXd& J, const Eigen::VectorXd& xdot, double lambda) {
  const int n = static_cast<int>(J.cols());
  QpProblem p;
  p.H = J.transpose() * J + lambda * Eigen::MatrixXd::Identity(n, n);
  p.g = -J.transpose() * xdot;
  p.A.resize(0, n);
  p.b.resize(0);
  p.E.resize(0, n);
  p.f.resize(0);
  return p;
}

QpResult solve_qp(const Eigen::MatrixXd& J, const Eigen::VectorXd& xdot, const ConstraintSet& constraints,
                  const Eigen::MatrixXd& E, const Eigen::VectorXd& f, double lambda) {
  QpProblem p = least_squares_problem(J, xdot, lambda);
  p.A = constraints.A;
  p.b = constraints.b;
  if (E.rows() > 0) {
    p.E = E;
    p.f = f;
  }
  return solve_qp(p);
}

HqpSolver::HqpSolver(double lambda, QpOptions options) : lambda_(lambda), options_(options) {}

HqpResult HqpSolver::solve_hierarchy(const QPTask& task_a, const QPTask& task_r, const ConstraintSet& constraints) {
  HqpResult out;
  const int n = constraints.variables();

  QpProblem level1 = least_squares_problem(task_a.J, task_a.xdot, lambda_);
  level1.A = constraints.A;
  level1.b = constraints.b;
  const QpResult r1 = solve_qp(level1, options_);
  out.status = r1.status;
  if (!r1.ok()) return out;
  out.level1 = r1.x;

  // Lock J_a qdot = J_a qdot*_a. The row space of J_a is spanned by the right
  // singular vectors with non-negligible singular values; using them as
  // equality rows gives an orthonormal, full-rank system.
  QpProblem level2 = least_squares_problem(task_r.J, task_r.xdot, lambda_);
  level2.A = constraints.A;
  level2.b = constraints.b;
  if (task_a.J.rows() > 0) {
    svd_.compute(task_a.J, Eigen::ComputeFullV);
    const auto& sv = svd_.singularValues();
    const double smax = sv.size() > 0 ? sv[0] : 0.0;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i) {
      if (sv[i] > 1e-10 * smax && sv[i] > 1e-12) ++rank;
    }
    level2.E = svd_.matrixV().leftCols(rank).transpose();
    level2.f = level2.E * r1.x;
  } else {
    level2.E.resize(0, n);
    level2.f.resize(0);
  }

  const QpResult r2 = solve_qp(level2, options_);
  out.level2_status = r2.status;
  if (r2.ok()) {
    out.qdot = r2.x;
  } else {
    out.qdot = r1.x;
    out.level2_fallback = true;
  }
  out.status = QpStatus::Optimal;
  return out;
}

}  // namespace harvest
