#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "artic/metrics.hpp"
#include "helpers.hpp"

using namespace artic;
using namespace artic::testing;

TEST_CASE("axis_error basics") {
  CHECK(axis_error_deg(Vec3::UnitX(), Vec3::UnitX()) == 0.0);
  CHECK(axis_error_deg(Vec3::UnitX(), -Vec3::UnitX()) == 0.0);
  CHECK(axis_error_deg(Vec3::UnitX(), Vec3::UnitY()) == doctest::Approx(90.0));
  CHECK_THROWS_AS(axis_error_deg(Vec3(1, 1, 0), Vec3::UnitX()), InvalidInputError);
}

TEST_CASE("axis_error is a metric on the projective sphere") {
  std::mt19937_64 rng(71);
  for (int i = 0; i < 200; ++i) {
    const Vec3 a = random_unit_vec(rng), b = random_unit_vec(rng),
               c = random_unit_vec(rng);
    const double ab = axis_error_deg(a, b), ba = axis_error_deg(b, a);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(ab >= 0.0);
    CHECK(ab <= 90.0);
    CHECK(axis_error_deg(a, b) + axis_error_deg(b, c) >=
          axis_error_deg(a, c) - 1e-9);
  }
  // zero iff colinear
  const Vec3 u = random_unit_vec(rng);
  CHECK(axis_error_deg(u, u) < 1e-9);
  CHECK(axis_error_deg(u, Vec3(-u)) < 1e-9);
}

namespace {

// Brute-force closest distance between two lines by sampling + refinement.
double oracle_line_distance(const Vec3& p1, const Vec3& u1, const Vec3& p2,
                            const Vec3& u2) {
  double best = std::numeric_limits<double>::infinity();
  double bt = 0, bs = 0;
  for (double t = -5; t <= 5; t += 0.01)
    for (double s = -5; s <= 5; s += 0.01) {
      const double d = ((p1 + t * u1) - (p2 + s * u2)).norm();
      if (d < best) {
        best = d;
        bt = t;
        bs = s;
      }
    }
  double step = 0.01;
  while (step > 1e-9) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (const auto& [dt, ds] : std::vector<std::pair<double, double>>{
               {step, 0}, {-step, 0}, {0, step}, {0, -step}}) {
        const double d = ((p1 + (bt + dt) * u1) - (p2 + (bs + ds) * u2)).norm();
        if (d < best) {
          best = d;
          bt += dt;
          bs += ds;
          improved = true;
        }
      }
    }
    step /= 4;
  }
  return best;
}

}  // namespace

TEST_CASE("origin_error line-to-line distance") {
  JointSpec est;
  est.type = JointType::Revolute;
  est.axis = Vec3::UnitZ();
  est.origin = Vec3::Zero();

  CHECK(*origin_error_cm(est, Vec3::Zero(), Vec3::UnitZ()) == 0.0);
  CHECK(*origin_error_cm(est, Vec3(0.05, 0, 0), Vec3::UnitZ()) ==
        doctest::Approx(5.0).epsilon(1e-12));

  // skew case frozen from the brute-force oracle
  const Vec3 q_gt(0, 0.03, 0.04);
  const Vec3 u_gt = Vec3::UnitX();
  const double oracle =
      oracle_line_distance(est.origin, est.axis, q_gt, u_gt) * 100.0;
  CHECK(oracle == doctest::Approx(3.0).epsilon(1e-4));
  CHECK(*origin_error_cm(est, q_gt, u_gt) == doctest::Approx(oracle).epsilon(1e-4));

  JointSpec pris = est;
  pris.type = JointType::Prismatic;
  CHECK(!origin_error_cm(pris, Vec3::Zero(), Vec3::UnitZ()).has_value());
}

TEST_CASE("origin_error is gauge invariant along both axes") {
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 50; ++i) {
    JointSpec est;
    est.type = JointType::Revolute;
    est.axis = random_unit_vec(rng);
    est.origin = Vec3(u(rng), u(rng), u(rng));
    const Vec3 q = Vec3(u(rng), u(rng), u(rng));
    const Vec3 ax = random_unit_vec(rng);
    const double base = *origin_error_cm(est, q, ax);

    JointSpec slid = est;
    slid.origin += u(rng) * est.axis;
    CHECK(*origin_error_cm(slid, q + u(rng) * ax, ax) ==
          doctest::Approx(base).epsilon(1e-9));
  }
}
