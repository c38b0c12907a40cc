#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "artic/objects.hpp"
#include "helpers.hpp"

using namespace artic;
using namespace artic::testing;

TEST_CASE("door template construction") {
  const GeneratedObject obj = generate_object(ObjectTemplate::Door, 7, {250});
  REQUIRE(obj.joints.size() == 1);
  CHECK(obj.scene.part_count == 1);
  CHECK(obj.joints[0].type == JointType::Revolute);
  CHECK(std::abs(obj.joints[0].axis.dot(Vec3::UnitY())) ==
        doctest::Approx(1.0));  // vertical hinge
  CHECK(obj.grasp_points.size() == 1);
  CHECK_NOTHROW(obj.scene.check());

  // grasp point is off the hinge line
  const Vec3 rel = obj.grasp_points[0] - obj.joints[0].origin;
  const Vec3 perp = rel - rel.dot(obj.joints[0].axis) * obj.joints[0].axis;
  CHECK(perp.norm() > 0.05);

  // hinge passes through the door panel's left edge: all part-1 gaussians on
  // the positive side of the hinge
  for (const auto& g : obj.scene.gaussians) {
    Eigen::Index arg;
    g.skin_logits.maxCoeff(&arg);
    if (arg == 1) CHECK(g.mean.x() >= obj.joints[0].origin.x() - 1e-9);
  }
}

TEST_CASE("cabinet2part has one revolute and one prismatic joint") {
  const GeneratedObject obj = generate_object(ObjectTemplate::Cabinet2Part, 3, {200});
  REQUIRE(obj.joints.size() == 2);
  CHECK(obj.scene.part_count == 2);
  CHECK(obj.joints[0].type == JointType::Revolute);
  CHECK(obj.joints[1].type == JointType::Prismatic);
  CHECK(obj.grasp_points.size() == 2);
  CHECK(obj.target_deltas.size() == 2);
}

TEST_CASE("all templates build valid scenes with one-hot parts") {
  for (const auto tmpl : {ObjectTemplate::Door, ObjectTemplate::Drawer,
                          ObjectTemplate::Cabinet2Part, ObjectTemplate::Microwave}) {
    const GeneratedObject obj = generate_object(tmpl, 11, {220});
    CHECK_NOTHROW(obj.scene.check());
    CHECK(obj.scene.gaussians.size() >= 200);
    for (const auto& g : obj.scene.gaussians) {
      const VecX w = g.skin_weights();
      CHECK(w.maxCoeff() > 0.999);  // effectively one-hot
    }
    for (const auto& j : obj.joints) CHECK_NOTHROW(j.check());
  }
}

TEST_CASE("generation is deterministic per seed") {
  const GeneratedObject a = generate_object(ObjectTemplate::Drawer, 42, {150});
  const GeneratedObject b = generate_object(ObjectTemplate::Drawer, 42, {150});
  REQUIRE(a.scene.gaussians.size() == b.scene.gaussians.size());
  for (size_t i = 0; i < a.scene.gaussians.size(); ++i) {
    CHECK((a.scene.gaussians[i].mean - b.scene.gaussians[i].mean).norm() == 0.0);
    CHECK((a.scene.gaussians[i].color - b.scene.gaussians[i].color).norm() == 0.0);
    CHECK(a.scene.gaussians[i].scale == b.scene.gaussians[i].scale);
  }
  CHECK(a.target_deltas[0] == b.target_deltas[0]);
  CHECK((a.joints[0].origin - b.joints[0].origin).norm() == 0.0);

  const GeneratedObject c = generate_object(ObjectTemplate::Drawer, 43, {150});
  CHECK((a.scene.gaussians[0].color - c.scene.gaussians[0].color).norm() > 0.0);
}

TEST_CASE("unknown template string is rejected") {
  CHECK_THROWS_AS(object_template_from_string("fridge"), ConfigError);
  CHECK(object_template_from_string("door") == ObjectTemplate::Door);
  CHECK(to_string(ObjectTemplate::Microwave) == "microwave");
}

TEST_CASE("camera rig looks at the object") {
  const auto rig = make_camera_rig(4, 1.5, 128);
  REQUIRE(rig.size() == 4);
  for (const auto& cam : rig) {
    CHECK_NOTHROW(cam.check());
    const Vec3 eye = cam.extrinsics.inverse().translation_vec();
    CHECK(eye.norm() == doctest::Approx(1.5).epsilon(1e-9));
    const Vec3 fwd = cam.extrinsics.rotation_block().row(2).transpose();
    CHECK(fwd.dot((-eye).normalized()) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(eye.z() > 0);  // front hemisphere
  }
  // first camera is the most frontal one
  const Vec3 eye0 = rig[0].extrinsics.inverse().translation_vec();
  for (size_t i = 1; i < rig.size(); ++i) {
    const Vec3 eye = rig[i].extrinsics.inverse().translation_vec();
    CHECK(std::abs(eye0.x()) <= std::abs(eye.x()) + 1e-9);
  }
  CHECK_THROWS_AS(make_camera_rig(0, 1.5, 128), ConfigError);
}
