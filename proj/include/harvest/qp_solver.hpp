#pragma once

#include <Eigen/Dense>

namespace harvest {

/// Strictly convex QP:
///   minimize   1/2 x^T H x + g^T x
///   subject to E x = f,  A x <= b
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd E;
  Eigen::VectorXd f;

  int variables() const { return static_cast<int>(H.rows()); }
};

enum class QpStatus {
  Optimal,
  Infeasible,      ///< the constraint set admits no point
  IterationLimit,  ///< active-set iterations exhausted
  InvalidProblem,  ///< dimension mismatch, non-finite data, or H not positive definite
};

const char* to_string(QpStatus s);

struct QpResult {
  QpStatus status = QpStatus::InvalidProblem;
  Eigen::VectorXd x;
  Eigen::VectorXd ineq_multipliers;  ///< >= 0, one per row of A
  Eigen::VectorXd eq_multipliers;    ///< one per row of E
  int iterations = 0;
  double objective = 0.0;

  bool ok() const { return status == QpStatus::Optimal; }
};

struct QpOptions {
  int max_iterations = 0;          ///< 0 picks 10 * (n + rows)
  double feasibility_tol = 1e-11;  ///< on unit-normalized rows
};

/// Dual active-set method (Goldfarb-Idnani). Needs H positive definite; no
/// feasible starting point required.
QpResult solve_qp(const QpProblem& problem, const QpOptions& options = {});

/// max |H x + g + A^T mu + E^T nu|, with the primal and complementarity
/// violations folded in.
double kkt_residual(const QpProblem& problem, const QpResult& result);

}  // namespace harvest
