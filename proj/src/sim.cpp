#include "artic/sim.hpp"

#include <cmath>

#include "artic/kinematics.hpp"

namespace artic {

EEState impedance_step(const EEState& state, const Vec3& x_d, const Vec3& v_d,
                       const Vec3& a_d, const Vec3& f_ext, const ImpedanceParams& p) {
  p.check();
  EEState out;
  const Vec3 rhs = f_ext - p.damping * (state.v - v_d) - p.stiffness * (state.x - x_d);
  out.a = a_d + p.inertia.llt().solve(rhs);
  out.v = state.v + out.a * p.dt;
  out.x = state.x + out.v * p.dt;
  return out;
}

std::vector<Waypoint> plan_trajectory(const JointSpec& joint, const Vec3& grasp_point,
                                      double target_delta, int n_waypoints) {
  if (n_waypoints < 2)
    throw InvalidInputError("plan_trajectory: need at least 2 waypoints");
  joint.check();
  if (joint.type == JointType::Revolute) {
    const Vec3 rel = grasp_point - joint.origin;
    const Vec3 perp = rel - rel.dot(joint.axis) * joint.axis;
    if (perp.norm() <= 1e-6)
      throw DegenerateError("plan_trajectory: grasp point lies on the joint axis");
  }

  std::vector<Waypoint> wps(n_waypoints);
  for (int i = 0; i < n_waypoints; ++i) {
    const double s = static_cast<double>(i) / (n_waypoints - 1);
    if (joint.type == JointType::Revolute)
      wps[i].x = revolute_transform(joint, s * target_delta).apply(grasp_point);
    else
      wps[i].x = grasp_point + s * target_delta * joint.axis;
  }
  // Finite-difference velocities/accelerations in normalized time s in [0,1].
  const double h = 1.0 / (n_waypoints - 1);
  for (int i = 0; i < n_waypoints; ++i) {
    const int lo = std::max(0, i - 1), hi = std::min(n_waypoints - 1, i + 1);
    wps[i].v = (wps[hi].x - wps[lo].x) / ((hi - lo) * h);
  }
  for (int i = 1; i + 1 < n_waypoints; ++i)
    wps[i].a = (wps[i + 1].x - 2.0 * wps[i].x + wps[i - 1].x) / (h * h);
  if (n_waypoints > 2) {
    wps[0].a = wps[1].a;
    wps[n_waypoints - 1].a = wps[n_waypoints - 2].a;
  }
  return wps;
}

namespace {

// Projection of a point onto the true 1-DOF motion manifold of the grasped
// material point; returns the articulation parameter.
struct ManifoldProjection {
  double theta;
  Vec3 closest;
};

ManifoldProjection project_to_manifold(const JointSpec& joint, const Vec3& grasp0,
                                       const Vec3& x, double prev_theta) {
  if (joint.type == JointType::Prismatic) {
    const double th = joint.axis.dot(x - grasp0);
    return {th, grasp0 + th * joint.axis};
  }
  const Vec3 u = joint.axis;
  const Vec3 c0 = joint.origin + (grasp0 - joint.origin).dot(u) * u;
  const Vec3 r0 = grasp0 - c0;
  const double radius = r0.norm();
  if (radius <= 1e-9)
    throw DegenerateError("simulate: grasp point on the true joint axis");
  const Vec3 y = x - c0;
  const Vec3 y_perp = y - u.dot(y) * u;
  if (y_perp.norm() < 1e-12) return {prev_theta, c0 + rodrigues(u, prev_theta) * r0};
  const double th = std::atan2(u.dot(r0.cross(y_perp)), r0.dot(y_perp));
  return {th, c0 + radius * y_perp.normalized()};
}

}  // namespace

InteractionResult simulate_interaction(const Scene& gt_scene,
                                       const std::vector<JointSpec>& gt_joints,
                                       int part_index, double target_delta,
                                       const std::vector<Camera>& cameras,
                                       int n_frames, const SimConfig& cfg,
                                       const JointSpec& planned_joint,
                                       const Vec3& grasp_point) {
  if (part_index < 0 || part_index >= static_cast<int>(gt_joints.size()))
    throw InvalidInputError("simulate: part index out of range");
  if (cameras.empty()) throw ConfigError("simulate: at least one camera required");
  if (n_frames < 1) throw ConfigError("simulate: n_frames must be >= 1");
  cfg.impedance.check();

  const auto plan = plan_trajectory(planned_joint, grasp_point, target_delta, 64);
  const JointSpec& true_joint = gt_joints[part_index];
  const int k = static_cast<int>(gt_joints.size());

  const int steps = std::max(1, static_cast<int>(std::lround(cfg.duration_s /
                                                             cfg.impedance.dt)));
  EEState ee;
  ee.x = grasp_point;

  InteractionResult res;
  res.seq.cameras = cameras;

  double theta = 0.0;
  bool broken = false;
  int next_frame = 0;

  for (int step = 0; step < steps; ++step) {
    Vec3 f_ext = Vec3::Zero();
    if (!broken) {
      const auto proj = project_to_manifold(true_joint, grasp_point, ee.x, theta);
      const Vec3 residual = ee.x - proj.closest;
      if (residual.norm() > cfg.break_distance) {
        broken = true;  // grasp slipped; the object stops following
      } else {
        theta = proj.theta;
        f_ext = -cfg.grasp_stiffness * residual;
      }
    }

    // Desired state: linear interpolation of the plan in normalized time.
    const double s = static_cast<double>(step + 1) / steps;
    const double fidx = s * (plan.size() - 1);
    const int i0 = std::min(static_cast<int>(fidx), static_cast<int>(plan.size()) - 2);
    const double frac = fidx - i0;
    const Vec3 x_d = (1.0 - frac) * plan[i0].x + frac * plan[i0 + 1].x;
    const Vec3 v_d = ((1.0 - frac) * plan[i0].v + frac * plan[i0 + 1].v) / cfg.duration_s;
    const Vec3 a_d = ((1.0 - frac) * plan[i0].a + frac * plan[i0 + 1].a) /
                     (cfg.duration_s * cfg.duration_s);
    ee = impedance_step(ee, x_d, v_d, a_d, f_ext, cfg.impedance);

    // Frame sampling: n_frames uniformly over the motion, last frame at the end.
    const int frame_step =
        static_cast<int>(std::lround(static_cast<double>(next_frame + 1) / n_frames *
                                     steps)) - 1;
    if (next_frame < n_frames && step == std::max(frame_step, next_frame)) {
      ObservationFrame frame;
      frame.time = (step + 1) * cfg.impedance.dt;
      frame.gt_theta = VecX::Zero(k);
      frame.gt_theta[part_index] = theta;
      const Scene posed = deform_scene(gt_scene, gt_joints, frame.gt_theta);
      for (const auto& cam : cameras)
        frame.images.push_back(render(posed, cam, cfg.render));
      res.seq.frames.push_back(std::move(frame));
      ++next_frame;
    }
  }
  res.achieved_delta = theta;
  res.grasp_broken = broken;
  return res;
}

}  // namespace artic
