#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "artic/render.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace artic;
using namespace artic::testing;

TEST_CASE("project_gaussian on the optical axis") {
  GaussianSphere g;
  g.mean = Vec3(0, 0, 1);
  g.scale = Vec3(0.02, 0.02, 0.02);
  g.skin_logits = VecX::Zero(1);
  const Camera cam = simple_camera(128, 128, 100, 100, 64, 64);

  const Projected2D p = project_gaussian(g, cam);
  CHECK(!p.culled);
  CHECK(p.mean2d.x() == doctest::Approx(64).epsilon(1e-12));
  CHECK(p.mean2d.y() == doctest::Approx(64).epsilon(1e-12));
  CHECK(p.view_depth == doctest::Approx(1.0));

  // isotropic covariance at the principal point: diag((f sigma / z)^2) + 0.3
  const double expect = 100.0 * 100.0 * 0.02 * 0.02 + 0.3;
  CHECK(p.cov2d(0, 0) == doctest::Approx(expect).epsilon(1e-9));
  CHECK(p.cov2d(1, 1) == doctest::Approx(expect).epsilon(1e-9));
  CHECK(std::abs(p.cov2d(0, 1)) < 1e-12);

  GaussianSphere behind = g;
  behind.mean = Vec3(0, 0, -1);
  CHECK(project_gaussian(behind, cam).culled);
}

TEST_CASE("composite_pixel follows front-to-back alpha blending") {
  RenderConfig cfg;
  const auto [opaque, a1] =
      composite_pixel({{Vec3(1, 0, 0), 1.0 - 1e-9}}, cfg);
  CHECK((opaque - Vec3(1, 0, 0)).norm() < 1e-8);
  CHECK(a1 == doctest::Approx(1.0).epsilon(1e-8));

  const Vec3 c1(0.2, 0.4, 0.6), c2(1, 1, 1);
  const auto [two, a2] = composite_pixel({{c1, 0.5}, {c2, 0.5}}, cfg);
  CHECK((two - (0.5 * c1 + 0.25 * c2)).norm() < 1e-12);
  CHECK(a2 == doctest::Approx(0.75).epsilon(1e-12));

  RenderConfig bg;
  bg.background = Vec3(0.1, 0.2, 0.3);
  const auto [empty, a0] = composite_pixel({}, bg);
  CHECK((empty - bg.background).norm() == 0.0);
  CHECK(a0 == 0.0);
}

TEST_CASE("render handles empty scenes and bad cameras") {
  Scene scene;
  RenderConfig cfg;
  cfg.background = Vec3(0.3, 0.3, 0.3);
  Camera cam = simple_camera(16, 16, 20, 20, 8, 8);
  const Image im = render(scene, cam, cfg);
  CHECK(im.r.minCoeff() == doctest::Approx(0.3));
  CHECK(im.depth.maxCoeff() == 0.0);
  CHECK(im.alpha.maxCoeff() == 0.0);

  cam.width = 0;
  CHECK_THROWS_AS(render(scene, cam, cfg), ConfigError);
}

TEST_CASE("render puts the brightest pixel at the principal point") {
  Scene scene;
  scene.part_count = 0;
  GaussianSphere g;
  g.mean = Vec3(0, 0, 1.0);
  g.scale = Vec3(0.03, 0.03, 0.03);
  g.opacity = 1.0;
  g.color = Vec3(1, 1, 1);
  g.skin_logits = VecX::Zero(1);
  scene.gaussians.push_back(g);
  const Camera cam = simple_camera(129, 129, 100, 100, 64, 64);
  const Image im = render(scene, cam);
  Eigen::Index best;
  im.r.maxCoeff(&best);
  CHECK(best % 129 == 64);
  CHECK(best / 129 == 64);
}

TEST_CASE("render equals the no-culling brute-force oracle") {
  std::mt19937_64 rng(101);
  RenderConfig cfg;
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 10);
    const int res = 12 + static_cast<int>(rng() % 21);
    const Scene scene = random_scene(rng, n, 1);
    const Camera cam = simple_camera(res, res, 0.8 * res, 0.8 * res, res / 2.0,
                                     res / 2.0);
    const Image ours = render(scene, cam, cfg);
    const Image oracle = oracle_render(scene, cam, cfg);
    CHECK(image_max_diff(ours, oracle) < 1e-6);
  }
}

TEST_CASE("render is invariant to gaussian ordering") {
  std::mt19937_64 rng(103);
  Scene scene = random_scene(rng, 8, 1);
  const Camera cam = simple_camera(24, 24, 20, 20, 12, 12);
  const Image a = render(scene, cam);
  Scene shuffled = scene;
  std::shuffle(shuffled.gaussians.begin(), shuffled.gaussians.end(), rng);
  const Image b = render(shuffled, cam);
  CHECK(image_max_diff(a, b) == 0.0);
}

TEST_CASE("render is translation equivariant bit-for-bit") {
  std::mt19937_64 rng(107);
  const Scene scene = random_scene(rng, 6, 1);
  Camera cam = simple_camera(20, 20, 18, 18, 10, 10);
  const Image a = render(scene, cam);

  const Vec3 shift(0.5, -0.25, 0.125);  // exactly representable
  Scene moved = scene;
  for (auto& g : moved.gaussians) g.mean += shift;
  Camera cam2 = cam;
  cam2.extrinsics = cam.extrinsics * SE3::translation(-shift);
  const Image b = render(moved, cam2);
  CHECK((a.r - b.r).abs().maxCoeff() == 0.0);
  CHECK((a.g - b.g).abs().maxCoeff() == 0.0);
  CHECK((a.b - b.b).abs().maxCoeff() == 0.0);
  CHECK((a.depth - b.depth).abs().maxCoeff() == 0.0);
}

TEST_CASE("render alpha and rgb stay in range") {
  std::mt19937_64 rng(109);
  for (int trial = 0; trial < 5; ++trial) {
    const Scene scene = random_scene(rng, 10, 1);
    const Camera cam = simple_camera(24, 24, 20, 20, 12, 12);
    const Image im = render(scene, cam);
    CHECK(im.alpha.minCoeff() >= 0.0);
    CHECK(im.alpha.maxCoeff() <= 1.0);
    CHECK(im.r.minCoeff() >= 0.0);
    CHECK(im.r.maxCoeff() <= 1.0 + 1e-12);
    CHECK_NOTHROW(im.check());
  }
}

TEST_CASE("render_articulated composes deform and render") {
  std::mt19937_64 rng(113);
  Scene scene = random_scene(rng, 8, 1);
  for (auto& g : scene.gaussians) {
    const bool part = rng() % 2;
    g.skin_logits = VecX::Constant(2, -1000.0);
    g.skin_logits[part ? 1 : 0] = 1000.0;
  }
  std::vector<JointSpec> joints(1);
  joints[0].type = JointType::Revolute;
  joints[0].axis = Vec3::UnitY();
  joints[0].origin = Vec3(0, 0, 2.2);
  const Camera cam = simple_camera(24, 24, 20, 20, 12, 12);

  const Image zero = render_articulated(scene, joints, Pose::Zero(1), cam);
  const Image plain = render(scene, cam);
  CHECK(image_max_diff(zero, plain) < 1e-12);

  Pose pi(1);
  pi << M_PI;
  const Image turned = render_articulated(scene, joints, pi, cam);
  Scene manual = scene;
  const SE3 rigid = revolute_transform(joints[0], M_PI);
  for (auto& g : manual.gaussians) {
    if (g.skin_logits[1] > 0) {
      g.mean = rigid.apply(g.mean);
      g.rotation = (Quat(rigid.rotation_block()) * g.rotation).normalized();
    }
  }
  const Image expected = render(manual, cam);
  CHECK(image_max_diff(turned, expected) < 1e-9);
}

TEST_CASE("prismatic displacement can move a part out of the frustum") {
  Scene scene;
  scene.part_count = 1;
  GaussianSphere g;
  g.mean = Vec3(0, 0, 2);
  g.scale = Vec3(0.05, 0.05, 0.05);
  g.opacity = 0.9;
  g.color = Vec3(1, 1, 1);
  g.skin_logits = VecX(2);
  g.skin_logits << -1000, 1000;
  scene.gaussians.push_back(g);

  std::vector<JointSpec> joints(1);
  joints[0].type = JointType::Prismatic;
  joints[0].axis = Vec3::UnitX();
  const Camera cam = simple_camera(32, 32, 30, 30, 16, 16);

  const Image visible = render_articulated(scene, joints, Pose::Zero(1), cam);
  Pose away(1);
  away << 50.0;
  const Image gone = render_articulated(scene, joints, away, cam);
  CHECK(visible.alpha.maxCoeff() > 0.5);
  CHECK(gone.alpha.maxCoeff() < 1e-9);
}
