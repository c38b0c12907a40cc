#pragma once

#include <type_traits>
#include <vector>

#include "artic/scene.hpp"

namespace artic {

/// Modified Denavit-Hartenberg link parameters.
template <typename S>
struct MDHParamsT {
  S beta = S(0);   // twist angle, radians
  S a = S(0);      // link length, meters
  S d = S(0);      // link offset, meters
  S theta = S(0);  // joint angle, radians

  void check() const {
    if (!std::isfinite(beta) || !std::isfinite(a) || !std::isfinite(d) ||
        !std::isfinite(theta))
      throw InvalidInputError("MDHParams: non-finite parameters");
  }
};

using MDHParams = MDHParamsT<double>;

enum class MDHJointKind { Revolute, Prismatic };  // pose adds to theta / to d

template <typename S>
struct RobotLinkT {
  MDHParamsT<S> mdh;
  MDHJointKind kind = MDHJointKind::Revolute;
  std::vector<int> gaussian_indices;
};

/// Serial chain; link i's gaussian_indices partition the robot scene.
template <typename S>
struct RobotModelT {
  std::vector<RobotLinkT<S>> links;

  void check_against(const SceneT<S>& scene) const {
    std::vector<int> owner(scene.gaussians.size(), -1);
    for (size_t l = 0; l < links.size(); ++l) {
      for (int gi : links[l].gaussian_indices) {
        if (gi < 0 || gi >= static_cast<int>(scene.gaussians.size()))
          throw InvalidInputError("RobotModel: gaussian index out of range");
        if (owner[gi] != -1)
          throw InvalidInputError("RobotModel: gaussian assigned to two links");
        owner[gi] = static_cast<int>(l);
      }
    }
    for (int o : owner)
      if (o == -1) throw InvalidInputError("RobotModel: unassigned gaussian");
  }
};

using RobotLink = RobotLinkT<double>;
using RobotModel = RobotModelT<double>;

using Pose = VecX;  // K articulation values: radians (revolute), meters (prismatic)

/// Frame of joint i relative to joint i-1 for MDH parameters
/// (cos/sin rows in theta, twist beta, length a, offset d).
template <typename S>
SE3T<S> mdh_link_transform(const MDHParamsT<S>& p) {
  p.check();
  const S ct = std::cos(p.theta), st = std::sin(p.theta);
  const S cb = std::cos(p.beta), sb = std::sin(p.beta);
  Mat4T<S> m;
  m << ct, -st * cb, st * sb, p.a * ct,
       st, ct * cb, -ct * sb, p.a * st,
       S(0), sb, cb, p.d,
       S(0), S(0), S(0), S(1);
  return SE3T<S>::from_matrix(m);
}

/// T_j = product of the first j link matrices, pose values injected into
/// theta (revolute) or d (prismatic). Returns [T_0 .. T_n], T_0 = identity.
template <typename S>
std::vector<SE3T<S>> forward_kinematics(const RobotModelT<S>& model,
                                        const std::type_identity_t<VecXT<S>>& pose) {
  if (pose.size() != static_cast<Eigen::Index>(model.links.size()))
    throw DimensionError("forward_kinematics: pose length != link count");
  std::vector<SE3T<S>> out;
  out.reserve(model.links.size() + 1);
  out.push_back(SE3T<S>::identity());
  for (size_t i = 0; i < model.links.size(); ++i) {
    MDHParamsT<S> p = model.links[i].mdh;
    if (model.links[i].kind == MDHJointKind::Revolute)
      p.theta += pose[static_cast<Eigen::Index>(i)];
    else
      p.d += pose[static_cast<Eigen::Index>(i)];
    out.push_back(out.back() * mdh_link_transform(p));
  }
  return out;
}

/// Rigidly carries each link's gaussians by that link's chain transform.
template <typename S>
SceneT<S> pose_robot(const RobotModelT<S>& model, const SceneT<S>& robot_scene,
                     const std::type_identity_t<VecXT<S>>& pose) {
  model.check_against(robot_scene);
  const auto chain = forward_kinematics(model, pose);
  SceneT<S> out = robot_scene;
  for (size_t l = 0; l < model.links.size(); ++l) {
    const SE3T<S>& t = chain[l + 1];
    const QuatT<S> rq(t.rotation_block());
    for (int gi : model.links[l].gaussian_indices) {
      auto& g = out.gaussians[gi];
      g.mean = t.apply(g.mean);
      g.rotation = (rq * g.rotation).normalized();
    }
  }
  return out;
}

/// Rotation by angle about the line through `origin` with direction `axis`.
template <typename S>
SE3T<S> revolute_transform(const JointSpecT<S>& joint, S angle) {
  if (joint.type != JointType::Revolute)
    throw InvalidInputError("revolute_transform: joint is not revolute");
  joint.check();
  const Mat3T<S> r = rodrigues(joint.axis, angle);
  return SE3T<S>::from_rt(r, joint.origin - r * joint.origin);
}

/// Pure translation by displacement along the joint axis.
template <typename S>
SE3T<S> prismatic_transform(const JointSpecT<S>& joint, S displacement) {
  if (joint.type != JointType::Prismatic)
    throw InvalidInputError("prismatic_transform: joint is not prismatic");
  joint.check();
  return SE3T<S>::translation(displacement * joint.axis);
}

/// [B_0 .. B_K]: identity for the static base, per-joint transform at the
/// pose value otherwise.
template <typename S>
std::vector<SE3T<S>> skeleton_transforms(const std::vector<JointSpecT<S>>& joints,
                                         const std::type_identity_t<VecXT<S>>& pose) {
  if (pose.size() != static_cast<Eigen::Index>(joints.size()))
    throw DimensionError("skeleton_transforms: pose length != joint count");
  std::vector<SE3T<S>> bones;
  bones.reserve(joints.size() + 1);
  bones.push_back(SE3T<S>::identity());
  for (size_t i = 0; i < joints.size(); ++i) {
    const S v = pose[static_cast<Eigen::Index>(i)];
    bones.push_back(joints[i].type == JointType::Revolute
                        ? revolute_transform(joints[i], v)
                        : prismatic_transform(joints[i], v));
  }
  return bones;
}

using BoneTransforms = std::vector<SE3>;

/// Linear blend skinning of one splat: the softmax-weighted sum of bone
/// matrices moves the mean; its rotation block is re-orthonormalized by
/// polar decomposition before being applied to the splat rotation, so the
/// unit-rotation invariant survives blending.
template <typename S>
GaussianSphereT<S> lbs_deform(const GaussianSphereT<S>& g,
                              const std::vector<SE3T<S>>& bones) {
  if (g.skin_logits.size() != static_cast<Eigen::Index>(bones.size()))
    throw DimensionError("lbs_deform: skin weight count != bone count");
  const VecXT<S> w = softmax(g.skin_logits);
  Mat4T<S> blended = Mat4T<S>::Zero();
  for (size_t j = 0; j < bones.size(); ++j)
    blended += w[static_cast<Eigen::Index>(j)] * bones[j].matrix();

  GaussianSphereT<S> out = g;
  out.mean = blended.template topLeftCorner<3, 3>() * g.mean +
             blended.template topRightCorner<3, 1>();
  const Mat3T<S> u = polar_rotation<S>(blended.template topLeftCorner<3, 3>());
  out.rotation = (QuatT<S>(u) * g.rotation).normalized();
  return out;
}

/// Whole-scene LBS at a pose.
template <typename S>
SceneT<S> deform_scene(const SceneT<S>& scene,
                       const std::vector<JointSpecT<S>>& joints,
                       const std::type_identity_t<VecXT<S>>& pose) {
  if (scene.part_count != static_cast<int>(joints.size()))
    throw DimensionError("deform_scene: scene.part_count != joint count");
  const auto bones = skeleton_transforms(joints, pose);
  SceneT<S> out = scene;
  for (auto& g : out.gaussians) g = lbs_deform(g, bones);
  return out;
}

}  // namespace artic
