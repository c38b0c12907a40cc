#pragma once

#include <random>

#include "artic/objects.hpp"
#include "artic/render.hpp"
#include "artic/scene.hpp"

namespace artic::testing {

inline Mat3 rot_x(double a) {
  Mat3 m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return m;
}
inline Mat3 rot_y(double a) {
  Mat3 m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return m;
}
inline Mat3 rot_z(double a) {
  Mat3 m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}

inline Quat random_unit_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  Quat q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q;
}

inline Vec3 random_unit_vec(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  Vec3 v(n(rng), n(rng), n(rng));
  while (v.norm() < 1e-6) v = Vec3(n(rng), n(rng), n(rng));
  return v.normalized();
}

/// Camera at `eye` looking at `target`, y-down image convention.
inline Camera look_at_camera(const Vec3& eye, const Vec3& target, int res,
                             double focal) {
  const Vec3 fwd = (target - eye).normalized();
  Vec3 down = -(Vec3::UnitY() - Vec3::UnitY().dot(fwd) * fwd);
  if (down.norm() < 1e-9) down = -(Vec3::UnitX() - Vec3::UnitX().dot(fwd) * fwd);
  down.normalize();
  const Vec3 right = down.cross(fwd);
  Mat3 rot;
  rot.row(0) = right;
  rot.row(1) = down;
  rot.row(2) = fwd;
  Camera cam;
  cam.width = cam.height = res;
  cam.fx = cam.fy = focal;
  cam.cx = cam.cy = res / 2.0;
  cam.extrinsics = SE3::from_rt(rot, -rot * eye);
  return cam;
}

/// Identity-extrinsics camera.
inline Camera simple_camera(int w, int h, double fx, double fy, double cx, double cy) {
  Camera cam;
  cam.width = w;
  cam.height = h;
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = cx;
  cam.cy = cy;
  return cam;
}

/// Random scene in front of an identity camera (z in [1.5, 3.2]), distinct
/// depths, part_count parts with mixed skinning logits.
inline Scene random_scene(std::mt19937_64& rng, int n_gaussians, int part_count,
                          bool gentle = false) {
  std::uniform_real_distribution<double> u(0, 1);
  Scene scene;
  scene.part_count = part_count;
  for (int i = 0; i < n_gaussians; ++i) {
    GaussianSphere g;
    g.mean = Vec3(-0.5 + u(rng), -0.5 + u(rng), 1.5 + 1.7 * u(rng));
    g.mean.z() += i * 1e-4;  // keep view depths distinct
    g.rotation = random_unit_quat(rng);
    const double base = gentle ? 0.05 : 0.02;
    g.scale = Vec3(base + 0.08 * u(rng), base + 0.08 * u(rng), base + 0.08 * u(rng));
    g.opacity = 0.2 + 0.7 * u(rng);
    g.color = Vec3(u(rng), u(rng), u(rng));
    g.skin_logits = VecX::Zero(part_count + 1);
    for (int k = 0; k <= part_count; ++k) g.skin_logits[k] = 2.0 * u(rng) - 1.0;
    scene.gaussians.push_back(g);
  }
  return scene;
}

/// Exact depth map of a set of rectangular plane patches (z-buffered
/// ray-casting); rgb left black. Used as ideal sensor data for joint-init
/// geometry tests.
struct PlanePatch {
  Vec3 center;
  Vec3 u_dir;  // unit
  Vec3 v_dir;  // unit
  double half_u, half_v;
};

/// Door-like planar scene with a known hinge: one gaussian-gridded panel (no
/// backdrop, so edge samples that miss the panel drop out cleanly).
struct PlanarDoorScene {
  Scene scene;
  std::vector<JointSpec> joints;
  std::vector<PlanePatch> patches;
};

inline PlanarDoorScene make_planar_door(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  PlanarDoorScene d;
  const double hw = 0.25 + 0.1 * u(rng);
  const double hh = 0.35 + 0.1 * u(rng);
  const Vec3 center(0.2 * u(rng), 0.1 * u(rng), 2.0 + 0.2 * u(rng));
  d.patches.push_back({center, Vec3::UnitX(), Vec3::UnitY(), hw, hh});

  Scene scene;
  scene.part_count = 1;
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 16; ++j) {
      GaussianSphere g;
      g.mean = center + Vec3((-1.0 + (2.0 * i + 1) / 12.0) * hw,
                             (-1.0 + (2.0 * j + 1) / 16.0) * hh, 0);
      g.scale = Vec3(hw / 12, hh / 16, 0.004);
      g.opacity = 0.9;
      g.color = Vec3(0.5, 0.5, 0.5);
      g.skin_logits = VecX(2);
      g.skin_logits << -30, 30;
      scene.gaussians.push_back(g);
    }
  d.scene = scene;

  JointSpec hinge;
  hinge.type = JointType::Revolute;
  hinge.axis = Vec3::UnitY();
  hinge.origin = center + Vec3(-hw, 0, 0);
  d.joints = {hinge};
  return d;
}

inline Image ideal_depth_map(const std::vector<PlanePatch>& patches,
                             const Camera& cam) {
  Image im = Image::zeros(cam.width, cam.height);
  const SE3 inv = cam.extrinsics.inverse();
  const Vec3 origin = inv.translation_vec();
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Vec3 dir_cam((x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0);
      const Vec3 dir = inv.rotation_block() * dir_cam;  // unnormalized, z_cam = t
      double best = 0;
      for (const auto& p : patches) {
        const Vec3 n = p.u_dir.cross(p.v_dir);
        const double denom = n.dot(dir);
        if (std::abs(denom) < 1e-12) continue;
        const double t = n.dot(p.center - origin) / denom;
        if (t <= 0) continue;
        const Vec3 hit = origin + t * dir;
        const Vec3 rel = hit - p.center;
        if (std::abs(rel.dot(p.u_dir)) > p.half_u ||
            std::abs(rel.dot(p.v_dir)) > p.half_v)
          continue;
        if (best == 0 || t < best) best = t;  // t equals camera-frame depth
      }
      im.depth[im.idx(x, y)] = best;
    }
  }
  return im;
}

}  // namespace artic::testing
