#pragma once

#include <vector>

#include "artic/render.hpp"
#include "artic/scene.hpp"

namespace artic {

struct ImpedanceParams {
  Mat3 inertia = Mat3::Identity();          // kg
  Mat3 damping = 40.0 * Mat3::Identity();   // N s/m
  Mat3 stiffness = 400.0 * Mat3::Identity();// N/m
  double dt = 1e-3;                         // s

  static ImpedanceParams isotropic(double m, double d, double k, double dt = 1e-3) {
    ImpedanceParams p;
    p.inertia = m * Mat3::Identity();
    p.damping = d * Mat3::Identity();
    p.stiffness = k * Mat3::Identity();
    p.dt = dt;
    return p;
  }

  void check() const {
    if (!(dt > 0)) throw InvalidInputError("ImpedanceParams: dt must be positive");
    Eigen::LLT<Mat3> llt_m(inertia), llt_k(stiffness);
    if (llt_m.info() != Eigen::Success || llt_k.info() != Eigen::Success)
      throw InvalidInputError("ImpedanceParams: M and K must be positive definite");
  }
};

struct EEState {
  Vec3 x = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();
};

/// One semi-implicit Euler step of M(a-a_d) + D(v-v_d) + K(x-x_d) = F_ext.
EEState impedance_step(const EEState& state, const Vec3& x_d, const Vec3& v_d,
                       const Vec3& a_d, const Vec3& f_ext, const ImpedanceParams& p);

struct Waypoint {
  Vec3 x, v, a;
};

/// Desired end-effector trajectory from a joint hypothesis: circular arc for
/// revolute joints, straight line for prismatic; velocities and accelerations
/// by finite-differencing the waypoints.
std::vector<Waypoint> plan_trajectory(const JointSpec& joint, const Vec3& grasp_point,
                                      double target_delta, int n_waypoints);

struct SimConfig {
  ImpedanceParams impedance;
  double duration_s = 4.0;
  double grasp_stiffness = 200.0;  // N/m, spring from the constraint residual
  double break_distance = 0.03;    // m, grasp releases beyond this residual
  RenderConfig render;
};

struct InteractionResult {
  ObservationSequence seq;
  double achieved_delta = 0;
  bool grasp_broken = false;
};

/// Executes impedance tracking of a trajectory planned with `planned_joint`
/// (possibly a wrong estimate) while the object articulates along its TRUE
/// joint: each step the end-effector position is projected onto the true
/// motion arc/line, the projection parameter becomes theta_t, and the
/// projection residual feeds back as a spring force. Renders all cameras at
/// n_frames uniformly spaced sample times.
InteractionResult simulate_interaction(const Scene& gt_scene,
                                       const std::vector<JointSpec>& gt_joints,
                                       int part_index, double target_delta,
                                       const std::vector<Camera>& cameras,
                                       int n_frames, const SimConfig& cfg,
                                       const JointSpec& planned_joint,
                                       const Vec3& grasp_point);

}  // namespace artic
