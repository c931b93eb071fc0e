#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "harvest/hqp.hpp"
#include "qp_oracle.hpp"
#include "test_support.hpp"

using namespace harvest;
using namespace harvest::testing;

TEST_CASE("damper_bound examples and linearity") {
  const DamperParams p{0.20, 0.05, 1.0};
  CHECK(damper_bound(0.05, p).value() == doctest::Approx(0.0));
  CHECK(damper_bound(0.20, p).value() == doctest::Approx(-1.0));
  CHECK(damper_bound(0.125, p).value() == doctest::Approx(-0.5));
  CHECK_FALSE(damper_bound(0.2000001, p).has_value());
  // affine on [d_s, d_i] with slope -xi / (d_i - d_s)
  const double slope = -p.xi / (p.activation - p.safety);
  for (double d = 0.05; d <= 0.2; d += 0.01) {
    CHECK(damper_bound(d, p).value() == doctest::Approx(slope * (d - p.safety)));
  }
}

TEST_CASE("collision_rows") {
  const DamperParams p{0.20, 0.05, 1.0};
  SUBCASE("nothing within activation distance") {
    CollisionPair far;
    far.distance = 0.5;
    far.body_point = Vec3(1, 0, 0);
    far.jacobian = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, 1);
    far.jacobian(0, 0) = 1.0;
    const auto rows = collision_rows({far}, p, 1);
    CHECK(rows.rows.rows() == 0);
  }
  SUBCASE("at the safety distance no approaching motion is allowed") {
    CollisionPair pair;
    pair.kind = ConstraintKind::Fruit;
    pair.body_point = Vec3(0.05, 0, 0);
    pair.obstacle_point = Vec3::Zero();
    pair.distance = 0.05;
    pair.jacobian = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, 1);
    pair.jacobian(0, 0) = 1.0;
    const auto rows = collision_rows({pair}, p, 1);
    REQUIRE(rows.rows.rows() == 1);
    CHECK(rows.rows.kinds[0] == ConstraintKind::Fruit);
    Eigen::VectorXd v(1);
    v[0] = -1e-3;  // toward the obstacle
    CHECK(rows.rows.max_violation(v) > 0.0);
    v[0] = 0.0;
    CHECK(rows.rows.max_violation(v) <= 0.0);
    v[0] = 0.3;
    CHECK(rows.rows.max_violation(v) <= 0.0);
  }
  SUBCASE("degenerate witness pair is skipped") {
    CollisionPair pair;
    pair.distance = 0.0;
    pair.jacobian = Eigen::Matrix<double, 3, Eigen::Dynamic>::Identity(3, 3);
    const auto rows = collision_rows({pair}, p, 3);
    CHECK(rows.rows.rows() == 0);
    CHECK(rows.skipped_degenerate == 1);
  }
}

TEST_CASE("joint_limit_rows") {
  const DualArmModels models = make_reference_pair();
  const double dt = 0.01;
  auto bounds = [&](const DualArmState& s, int idx) {
    const ConstraintSet c = joint_limit_rows(models, s, dt);
    REQUIRE(c.rows() == 28);
    CHECK(c.count(ConstraintKind::JointLimit) == 28);
    // rows come in (upper, lower) pairs per joint
    return std::pair<double, double>{-c.b[2 * idx + 1], c.b[2 * idx]};
  };
  DualArmState s;
  SUBCASE("mid range gives velocity limits") {
    const auto [lo, hi] = bounds(s, 3);
    CHECK(hi == doctest::Approx(1.5));
    CHECK(lo == doctest::Approx(-1.5));
  }
  SUBCASE("at the upper limit no positive velocity") {
    s.q[3] = models.cutting.joints[3].upper;
    const auto [lo, hi] = bounds(s, 3);
    CHECK(hi == doctest::Approx(0.0));
    CHECK(lo == doctest::Approx(-1.5));
  }
  SUBCASE("beyond the upper limit only inward motion") {
    s.q[10] = models.collecting.joints[3].upper + 1e-4;
    const auto [lo, hi] = bounds(s, 10);
    CHECK(hi < 0.0);
    CHECK(lo <= hi);
  }
  SUBCASE("far beyond the limit stays feasible") {
    s.q[0] = models.cutting.joints[0].upper + 1.0;
    const auto [lo, hi] = bounds(s, 0);
    CHECK(hi == doctest::Approx(-1.5));
    CHECK(lo <= hi);
  }
}

TEST_CASE("solve_qp trivial examples") {
  SUBCASE("identity task, no constraints") {
    Eigen::VectorXd xdot = Eigen::VectorXd::LinSpaced(14, -1.0, 1.0);
    const QpResult r = solve_qp(Eigen::MatrixXd::Identity(14, 14), xdot, ConstraintSet(14), Eigen::MatrixXd(0, 14),
                                Eigen::VectorXd(0), 1e-12);
    REQUIRE(r.ok());
    CHECK((r.x - xdot).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("one-dimensional clamp") {
    ConstraintSet c(1);
    c.add_row(Eigen::RowVectorXd::Ones(1), 0.5, ConstraintKind::JointLimit);
    const QpResult r =
        solve_qp(Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1), c, Eigen::MatrixXd(0, 1), Eigen::VectorXd(0), 0.0);
    REQUIRE(r.ok());
    CHECK(r.x[0] == doctest::Approx(0.5));
    CHECK(r.ineq_multipliers[0] > 0.0);
  }
  SUBCASE("infeasible is distinct from the iteration limit") {
    ConstraintSet c(1);
    c.add_row(Eigen::RowVectorXd::Ones(1), -1.0, ConstraintKind::Trunk);
    c.add_row(-Eigen::RowVectorXd::Ones(1), -1.0, ConstraintKind::Trunk);
    const QpResult r =
        solve_qp(Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1), c, Eigen::MatrixXd(0, 1), Eigen::VectorXd(0));
    CHECK(r.status == QpStatus::Infeasible);

    ConstraintSet many(4);
    for (int i = 0; i < 12; ++i) many.add_row(Eigen::RowVectorXd::Random(4), -0.5, ConstraintKind::Fruit);
    QpProblem p = least_squares_problem(Eigen::MatrixXd::Identity(4, 4), Eigen::VectorXd::Ones(4) * 10, 1e-6);
    p.A = many.A;
    p.b = many.b;
    QpOptions opt;
    opt.max_iterations = 1;
    const QpResult limited = solve_qp(p, opt);
    CHECK(limited.status == QpStatus::IterationLimit);
  }
  SUBCASE("non-positive-definite Hessian is rejected") {
    QpProblem p = least_squares_problem(Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Zero(2), 0.0);
    CHECK(solve_qp(p).status == QpStatus::InvalidProblem);
  }
}

TEST_CASE("solve_qp matches the exhaustive active-set oracle on small instances") {
  std::mt19937_64 rng(42);
  int compared = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const QpProblem p = random_small_qp(rng);
    const QpResult r = solve_qp(p);
    const auto oracle = exhaustive_active_set(p);
    REQUIRE(oracle.has_value());
    REQUIRE(r.ok());
    CHECK((r.x - *oracle).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(kkt_residual(p, r) <= 1e-8);
    ++compared;
  }
  CHECK(compared == 500);
}

TEST_CASE("regularization shrinks the solution norm") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd J = Eigen::MatrixXd::Random(4, 7);
    const Eigen::VectorXd xdot = Eigen::VectorXd::Random(4);
    ConstraintSet c(7);
    const Eigen::VectorXd x0 = 0.1 * Eigen::VectorXd::Random(7);
    for (int i = 0; i < 6; ++i) {
      const Eigen::RowVectorXd a = Eigen::RowVectorXd::Random(7);
      c.add_row(a, a.dot(x0) + 0.05, ConstraintKind::Fruit);
    }
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : {1e-8, 1e-6, 1e-4, 1e-2, 1e-1, 1.0, 10.0}) {
      const QpResult r = solve_qp(J, xdot, c, Eigen::MatrixXd(0, 7), Eigen::VectorXd(0), lambda);
      REQUIRE(r.ok());
      CHECK(r.x.norm() <= prev + 1e-9);
      prev = r.x.norm();
    }
  }
}

TEST_CASE("solve_hierarchy hand-solved example") {
  const double lambda = kDefaultRegularization;
  QPTask a{Eigen::MatrixXd::Zero(1, 14), Eigen::VectorXd::Ones(1), TaskPriority::Absolute};
  a.J(0, 0) = 1.0;
  QPTask r{Eigen::MatrixXd::Zero(1, 14), Eigen::VectorXd::Constant(1, 2.0), TaskPriority::Relative};
  r.J(0, 1) = 1.0;
  HqpSolver solver(lambda);
  const HqpResult res = solver.solve_hierarchy(a, r, ConstraintSet(14));
  REQUIRE(res.ok());
  CHECK_FALSE(res.level2_fallback);
  // KKT of |x1 - 1|^2 + lambda |x|^2, then |x2 - 2|^2 + lambda |x|^2 with x1 fixed
  CHECK(res.qdot[0] == doctest::Approx(1.0 / (1.0 + lambda)).epsilon(1e-12));
  CHECK(res.qdot[1] == doctest::Approx(2.0 / (1.0 + lambda)).epsilon(1e-12));
  CHECK(res.qdot.tail(12).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("solve_hierarchy preserves the level-1 value against a conflicting task") {
  QPTask a{Eigen::MatrixXd::Zero(1, 14), Eigen::VectorXd::Ones(1), TaskPriority::Absolute};
  a.J(0, 0) = 1.0;
  QPTask r{a.J, Eigen::VectorXd::Constant(1, 5.0), TaskPriority::Relative};
  HqpSolver solver;
  const HqpResult res = solver.solve_hierarchy(a, r, ConstraintSet(14));
  REQUIRE(res.ok());
  CHECK(std::abs(res.qdot[0] - res.level1[0]) < 1e-12);
}

TEST_CASE("solve_hierarchy invariants on random instances") {
  std::mt19937_64 rng(99);
  HqpSolver solver;
  int fallbacks = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const HierarchyInstance inst = random_hierarchy_instance(rng);
    const HqpResult res = solver.solve_hierarchy(inst.a, inst.r, inst.constraints);
    REQUIRE(res.ok());
    fallbacks += res.level2_fallback ? 1 : 0;
    CHECK((inst.a.J * (res.qdot - res.level1)).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(inst.constraints.max_violation(res.qdot) <= 1e-9);
  }
  CHECK(fallbacks == 0);
}

TEST_CASE("1-DOF approach toward a wall never crosses the safety distance") {
  const DamperParams p{0.20, 0.05, 1.0};
  const double dt = 0.01;
  const double v_task = -0.5;
  double d = 0.6;
  double oracle = 0.6;
  for (int k = 0; k < 2000; ++k) {
    CollisionPair pair;
    pair.kind = ConstraintKind::Trunk;
    pair.body_point = Vec3(d, 0, 0);
    pair.obstacle_point = Vec3::Zero();
    pair.distance = d;
    pair.jacobian = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, 1);
    pair.jacobian(0, 0) = 1.0;
    const auto rows = collision_rows({pair}, p, 1);
    const QpResult r = solve_qp(Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Constant(1, v_task), rows.rows,
                                Eigen::MatrixXd(0, 1), Eigen::VectorXd(0), 0.0);
    REQUIRE(r.ok());
    d += r.x[0] * dt;
    // closed-form per-step update of the damped approach
    const double bound = oracle <= p.activation ? -p.xi * (oracle - p.safety) / (p.activation - p.safety)
                                                : -std::numeric_limits<double>::infinity();
    oracle += std::max(v_task, bound) * dt;
    CHECK(d >= p.safety - 1e-6);
    CHECK(std::abs(d - oracle) < 1e-9);
  }
  CHECK(d - p.safety < 1e-4);
}
