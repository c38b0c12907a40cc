#pragma once

#include <string>
#include <vector>

#include "artic/scene.hpp"

namespace artic {

enum class ObjectTemplate { Door, Drawer, Cabinet2Part, Microwave };

ObjectTemplate object_template_from_string(const std::string& s);
std::string to_string(ObjectTemplate t);

struct GeneratedObject {
  Scene scene;
  std::vector<JointSpec> joints;
  std::vector<Vec3> grasp_points;     // one per movable part
  std::vector<double> target_deltas;  // nominal manipulation target per part
};

struct GenerateOptions {
  int gaussians_per_part = 300;  // approximate; grids round to it
};

/// Procedural articulated object: a static body plus movable panels built
/// from surface grids of gaussians, one-hot skinning, exact ground-truth
/// joints, and a handle grasp point per part. Deterministic per seed.
GeneratedObject generate_object(ObjectTemplate tmpl, uint64_t seed,
                                const GenerateOptions& opts = {});

/// Cameras on an arc facing the object front (+z side), looking at `center`.
std::vector<Camera> make_camera_rig(int count, double radius, int resolution,
                                    const Vec3& center = Vec3::Zero());

}  // namespace artic
