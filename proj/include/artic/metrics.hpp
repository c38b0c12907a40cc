#pragma once

#include <optional>

#include "artic/scene.hpp"

namespace artic {

/// Sign-agnostic angle between unit axes, in degrees, range [0, 90].
inline double axis_error_deg(const Vec3& u_est, const Vec3& u_gt) {
  if (std::abs(u_est.norm() - 1.0) > 1e-6 || std::abs(u_gt.norm() - 1.0) > 1e-6)
    throw InvalidInputError("axis_error: inputs must be unit vectors");
  const double c = std::min(1.0, std::abs(u_est.dot(u_gt)));
  return std::acos(c) * 180.0 / M_PI;
}

/// Minimum distance between the estimated and ground-truth joint lines, in
/// centimeters. Not applicable to prismatic joints (axis-only parameters):
/// returns nullopt.
inline std::optional<double> origin_error_cm(const JointSpec& est, const Vec3& q_gt,
                                             const Vec3& u_gt) {
  if (est.type == JointType::Prismatic) return std::nullopt;
  const Vec3 u1 = est.axis.normalized();
  const Vec3 u2 = u_gt.normalized();
  const Vec3 dq = q_gt - est.origin;
  const Vec3 cross = u1.cross(u2);
  const double cn = cross.norm();
  double dist;
  if (cn < 1e-9) {
    dist = (dq - dq.dot(u1) * u1).norm();  // parallel: point-to-line
  } else {
    dist = std::abs(dq.dot(cross)) / cn;
  }
  return dist * 100.0;
}

}  // namespace artic
