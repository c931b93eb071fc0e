#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "harvest/geometry.hpp"
#include "test_support.hpp"

using namespace harvest;
using harvest::testing::random_vec3;

constexpr double kPi = std::numbers::pi;

TEST_CASE("normalize_angle maps into (-pi, pi]") {
  CHECK(normalize_angle(kPi) == doctest::Approx(kPi));
  CHECK(normalize_angle(-kPi) == doctest::Approx(kPi));
  CHECK(normalize_angle(3.0 * kPi / 2.0) == doctest::Approx(-kPi / 2.0));
  CHECK(normalize_angle(0.25) == doctest::Approx(0.25));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = normalize_angle(u(rng));
    CHECK(a > -kPi);
    CHECK(a <= kPi);
  }
}

TEST_CASE("rpy round trip reproduces the rotation, including gimbal lock") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int i = 0; i < 500; ++i) {
    const Vec3 rpy(u(rng), u(rng) / 2.0, u(rng));
    const Mat3 r = rotation_from_rpy(rpy);
    CHECK((rotation_from_rpy(rpy_from_rotation(r)) - r).cwiseAbs().maxCoeff() < 1e-12);
  }
  const Mat3 locked = rotation_from_rpy({0.3, kPi / 2.0, kPi});
  CHECK((rotation_from_rpy(rpy_from_rotation(locked)) - locked).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pose_error examples") {
  SUBCASE("identical poses") {
    const Pose6 p({0.1, -0.2, 0.6}, {0.3, -0.4, 2.0});
    CHECK(pose_error(p, p).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("single yaw rotation") {
    const Pose6 cur({0, 0, 0}, {0, 0, 0});
    const Pose6 des({0, 0, 0}, {0, 0, kPi / 2.0});
    const Vec6 e = pose_error(cur, des);
    Vec6 expected;
    expected << 0, 0, 0, 0, 0, kPi / 2.0;
    CHECK((e - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("masked pitch") {
    const Pose6 cur({0.2, 0.1, 0.5}, {0, 0.2, 0});
    const Pose6 des({0.2, 0.1, 0.5}, {0, 1.2, 0}, {true, true, true, true, false, true});
    CHECK(pose_error(cur, des).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("position part is desired minus current") {
    const Pose6 cur({0.1, 0.2, 0.3}, {0, 0, 0});
    const Pose6 des({0.4, 0.0, 0.2}, {0, 0, 0});
    const Vec6 e = pose_error(cur, des);
    CHECK(e[0] == doctest::Approx(0.3));
    CHECK(e[1] == doctest::Approx(-0.2));
    CHECK(e[2] == doctest::Approx(-0.1));
  }
}

TEST_CASE("pose_error properties over random poses") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int i = 0; i < 1000; ++i) {
    const Pose6 a(random_vec3(rng, -1, 1), {u(rng), u(rng), u(rng)});
    const Pose6 b(random_vec3(rng, -1, 1), {u(rng), u(rng), u(rng)});
    CHECK(pose_error(a, a).norm() < 1e-12);
    CHECK(pose_error(a, b).tail<3>().norm() <= kPi + 1e-12);
    // the orientation error rotates current onto desired
    const Vec3 w = pose_error(a, b).tail<3>();
    const Mat3 step = w.norm() > 0 ? Eigen::AngleAxisd(w.norm(), w.normalized()).toRotationMatrix() : Mat3::Identity();
    CHECK((step * a.rotation() - b.rotation()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("dist_point_cylinder examples") {
  Cylinder c{{0.1, 0.0, 1.0}, Vec3::UnitY(), 0.3};
  CHECK(c.valid());
  CHECK(dist_point_cylinder({0.1, 5.0, 1.0}, c) == doctest::Approx(-0.3));
  CHECK(dist_point_cylinder({0.1, -2.0, 0.5}, c) == doctest::Approx(0.2));
}

TEST_CASE("dist_point_cylinder matches an axis-sampling oracle") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Cylinder c;
    c.axis_point = random_vec3(rng, -0.5, 0.5);
    c.axis_direction = random_vec3(rng, -1, 1).normalized();
    c.radius = 0.05 + 0.3 * std::uniform_real_distribution<double>(0, 1)(rng);
    const Vec3 p = random_vec3(rng, -1.0, 1.0);
    // closest axis point lies within |p - axis_point| of axis_point
    const double span = (p - c.axis_point).norm() + 0.1;
    double best = std::numeric_limits<double>::infinity();
    constexpr int kSamples = 100000;
    for (int k = 0; k <= kSamples; ++k) {
      const double s = -span + 2.0 * span * k / kSamples;
      best = std::min(best, (p - (c.axis_point + s * c.axis_direction)).norm());
    }
    CHECK(std::abs(dist_point_cylinder(p, c) - (best - c.radius)) <= 1e-6);
  }
}

TEST_CASE("dist_segment_segment examples") {
  const Segment a{{0, 0, 0}, {1, 0, 0}};
  CHECK(dist_segment_segment(a, a) == doctest::Approx(0.0));
  const Segment b{{0, 0.4, 0}, {1, 0.4, 0}};
  CHECK(dist_segment_segment(a, b) == doctest::Approx(0.4));
  const Segment c{{0.5, -1, 1}, {0.5, 1, 1}};
  CHECK(dist_segment_segment(a, c) == doctest::Approx(1.0));
  const Segment point{{2, 0, 0}, {2, 0, 0}};
  CHECK(dist_segment_segment(a, point) == doctest::Approx(1.0));
}

namespace {

// Coarse 1000x1000 parameter grid, then a second 1000x1000 grid on the best cell.
double grid_segment_distance(const Segment& s1, const Segment& s2) {
  constexpr int kN = 1000;
  auto eval = [&](double s, double t) {
    return ((s1.a + s * (s1.b - s1.a)) - (s2.a + t * (s2.b - s2.a))).norm();
  };
  double best = std::numeric_limits<double>::infinity();
  int bi = 0, bj = 0;
  for (int i = 0; i <= kN; ++i) {
    for (int j = 0; j <= kN; ++j) {
      const double d = eval(double(i) / kN, double(j) / kN);
      if (d < best) {
        best = d;
        bi = i;
        bj = j;
      }
    }
  }
  const double s0 = std::max(0.0, (bi - 1.0) / kN), s1v = std::min(1.0, (bi + 1.0) / kN);
  const double t0 = std::max(0.0, (bj - 1.0) / kN), t1v = std::min(1.0, (bj + 1.0) / kN);
  for (int i = 0; i <= kN; ++i) {
    for (int j = 0; j <= kN; ++j) {
      best = std::min(best, eval(s0 + (s1v - s0) * i / kN, t0 + (t1v - t0) * j / kN));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("dist_segment_segment matches a parameter-grid oracle") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 25; ++trial) {
    const Segment s1{random_vec3(rng, -1, 1), random_vec3(rng, -1, 1)};
    const Segment s2{random_vec3(rng, -1, 1), random_vec3(rng, -1, 1)};
    const double d = dist_segment_segment(s1, s2);
    CHECK(std::abs(d - grid_segment_distance(s1, s2)) <= 1e-5);
    CHECK(d == doctest::Approx(dist_segment_segment(s2, s1)).epsilon(1e-12));
  }
}

TEST_CASE("closest_points_segment_line agrees with a long segment") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    const Segment s{random_vec3(rng, -1, 1), random_vec3(rng, -1, 1)};
    const Vec3 p = random_vec3(rng, -1, 1);
    const Vec3 dir = random_vec3(rng, -1, 1).normalized();
    const Segment line{p - 100.0 * dir, p + 100.0 * dir};
    const Witness w = closest_points_segment_line(s, p, dir);
    CHECK(w.distance == doctest::Approx(dist_segment_segment(s, line)).epsilon(1e-9));
  }
}

TEST_CASE("dist_point_ellipsoid examples") {
  const Ellipsoid e{{0.1, 0.2, 0.5}, 0.03, 0.04};
  CHECK(dist_point_ellipsoid(e.center, e) == doctest::Approx(-0.04));
  const Ellipsoid sphere{{0, 0, 0}, 0.05, 0.05};
  CHECK(dist_point_ellipsoid({0.0, 0.1, 0.0}, sphere) == doctest::Approx(0.05));
}

TEST_CASE("dist_point_ellipsoid never exceeds a surface-sampling oracle") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> axis(0.02, 0.08);
  std::uniform_real_distribution<double> angle(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Ellipsoid e{random_vec3(rng, -0.5, 0.5), axis(rng), axis(rng)};
    const Vec3 p = random_vec3(rng, -1.0, 1.0);
    double oracle = std::numeric_limits<double>::infinity();
    constexpr int kSamples = 10000;
    for (int k = 0; k < kSamples; ++k) {
      // Fibonacci sphere mapped onto the ellipsoid surface
      const double zc = 1.0 - 2.0 * (k + 0.5) / kSamples;
      const double rc = std::sqrt(1.0 - zc * zc);
      const double phi = k * 2.399963229728653;
      const Vec3 unit(rc * std::cos(phi), zc, rc * std::sin(phi));
      const Vec3 surf = e.center + unit.cwiseProduct(e.semi_axes());
      oracle = std::min(oracle, (p - surf).norm());
    }
    CHECK(dist_point_ellipsoid(p, e) <= oracle + 1e-9);
  }
}
