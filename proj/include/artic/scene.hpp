#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "artic/geometry.hpp"

namespace artic {

/// Numerically stable softmax (shift by max before exponentiating).
template <typename S>
VecXT<S> softmax(const VecXT<S>& logits) {
  if (logits.size() == 0) throw InvalidInputError("softmax: empty input");
  VecXT<S> w = (logits.array() - logits.maxCoeff()).exp();
  return w / w.sum();
}

template <typename S>
S entropy(const VecXT<S>& probs) {
  S h = S(0);
  for (Eigen::Index i = 0; i < probs.size(); ++i)
    if (probs[i] > S(0)) h -= probs[i] * std::log(probs[i]);
  return h;
}

/// Sigma = R * diag(s) * diag(s)^T * R^T. Symmetric positive definite for
/// positive scales and a unit rotation.
template <typename S>
Mat3T<S> covariance_from_rs(const QuatT<S>& rotation, const Vec3T<S>& scale) {
  if (!rotation.coeffs().allFinite() || !scale.allFinite())
    throw InvalidInputError("covariance_from_rs: non-finite inputs");
  if (std::abs(rotation.norm() - S(1)) > S(kOrthonormalTol))
    throw InvalidInputError("covariance_from_rs: rotation must be unit norm");
  if ((scale.array() <= S(0)).any())
    throw InvalidInputError("covariance_from_rs: scale must be strictly positive");
  const Mat3T<S> r = rotation.toRotationMatrix();
  return r * scale.cwiseProduct(scale).asDiagonal() * r.transpose();
}

/// One splat. skin_logits has length K+1; softmax(skin_logits) are the
/// skinning weights, index 0 being the static base.
template <typename S>
struct GaussianSphereT {
  Vec3T<S> mean = Vec3T<S>::Zero();
  QuatT<S> rotation = QuatT<S>::Identity();  // unit, stored wxyz in files
  Vec3T<S> scale = Vec3T<S>::Ones();         // meters, strictly positive
  S opacity = S(1);
  Vec3T<S> color = Vec3T<S>::Constant(S(0.5));  // degree-0 SH, view independent
  VecXT<S> skin_logits = VecXT<S>::Zero(1);

  Mat3T<S> covariance() const { return covariance_from_rs(rotation, scale); }
  VecXT<S> skin_weights() const { return softmax(skin_logits); }

  void check(int part_count = -1) const {
    if (!mean.allFinite() || !scale.allFinite() || !color.allFinite() ||
        !skin_logits.allFinite() || !std::isfinite(opacity))
      throw InvalidInputError("GaussianSphere: non-finite fields");
    if (std::abs(rotation.norm() - S(1)) > S(kOrthonormalTol))
      throw InvalidInputError("GaussianSphere: rotation must be unit norm");
    if ((scale.array() <= S(0)).any())
      throw InvalidInputError("GaussianSphere: scale must be strictly positive");
    if (opacity < S(0) || opacity > S(1))
      throw InvalidInputError("GaussianSphere: opacity must lie in [0,1]");
    if (part_count >= 0 && skin_logits.size() != part_count + 1)
      throw DimensionError("GaussianSphere: skin_logits length must be part_count+1");
  }
};

using GaussianSphere = GaussianSphereT<double>;

template <typename S>
struct SceneT {
  std::vector<GaussianSphereT<S>> gaussians;
  int part_count = 0;

  void check() const {
    if (part_count < 0) throw InvalidInputError("Scene: negative part_count");
    for (const auto& g : gaussians) g.check(part_count);
  }
};

using Scene = SceneT<double>;

enum class JointType { Revolute, Prismatic };

inline std::string to_string(JointType t) {
  return t == JointType::Revolute ? "revolute" : "prismatic";
}

/// One articulated bone: unit axis direction, origin point, type.
template <typename S>
struct JointSpecT {
  Vec3T<S> axis = Vec3T<S>::UnitZ();
  Vec3T<S> origin = Vec3T<S>::Zero();
  JointType type = JointType::Revolute;

  void check() const {
    if (!axis.allFinite() || !origin.allFinite())
      throw InvalidInputError("JointSpec: non-finite fields");
    if (std::abs(axis.norm() - S(1)) > S(kOrthonormalTol))
      throw InvalidInputError("JointSpec: axis must be unit norm");
  }
};

using JointSpec = JointSpecT<double>;

/// Pinhole camera: intrinsics in pixels, extrinsics world->camera.
/// Pixel (x, y) corresponds to image column x, row y; integer coordinates
/// sample the pixel grid directly (no half-pixel offset).
template <typename S>
struct CameraT {
  S fx = S(1), fy = S(1), cx = S(0), cy = S(0);
  int width = 0, height = 0;
  SE3T<S> extrinsics;

  void check() const {
    if (!(fx > S(0)) || !(fy > S(0)))
      throw InvalidInputError("Camera: focal lengths must be positive");
    extrinsics.check();
  }

  Vec3T<S> world_to_camera(const Vec3T<S>& p) const { return extrinsics.apply(p); }

  Vec2T<S> project_camera_point(const Vec3T<S>& pc) const {
    return {fx * pc.x() / pc.z() + cx, fy * pc.y() / pc.z() + cy};
  }

  /// Viewing direction (+z of the camera frame) expressed in world coordinates.
  Vec3T<S> forward_world() const {
    return extrinsics.rotation_block().transpose() * Vec3T<S>::UnitZ();
  }
};

using Camera = CameraT<double>;

/// RGB-D-A raster, channels stored planar in row-major pixel order.
struct Image {
  int width = 0, height = 0;
  Eigen::ArrayXd r, g, b;
  Eigen::ArrayXd depth;  // meters, 0 = no hit
  Eigen::ArrayXd alpha;  // accumulated opacity

  static Image zeros(int w, int h) {
    Image im;
    im.width = w;
    im.height = h;
    const Eigen::Index n = static_cast<Eigen::Index>(w) * h;
    im.r = Eigen::ArrayXd::Zero(n);
    im.g = Eigen::ArrayXd::Zero(n);
    im.b = Eigen::ArrayXd::Zero(n);
    im.depth = Eigen::ArrayXd::Zero(n);
    im.alpha = Eigen::ArrayXd::Zero(n);
    return im;
  }

  Eigen::Index idx(int x, int y) const {
    return static_cast<Eigen::Index>(y) * width + x;
  }
  Vec3 rgb_at(int x, int y) const {
    const auto i = idx(x, y);
    return {r[i], g[i], b[i]};
  }

  void check() const {
    const Eigen::Index n = static_cast<Eigen::Index>(width) * height;
    if (r.size() != n || g.size() != n || b.size() != n || depth.size() != n ||
        alpha.size() != n)
      throw DimensionError("Image: channel size mismatch");
    if (!r.allFinite() || !g.allFinite() || !b.allFinite() || !depth.allFinite() ||
        !alpha.allFinite())
      throw InvalidInputError("Image: non-finite pixels");
    if (n > 0 && (alpha.minCoeff() < 0.0 || alpha.maxCoeff() > 1.0 + 1e-12))
      throw InvalidInputError("Image: alpha outside [0,1]");
  }
};

/// Timed multi-view RGB-D frames captured during a manipulation episode.
/// gt_theta is simulator ground truth; it is written to an evaluation sidecar
/// only and must never feed the optimizer.
struct ObservationFrame {
  double time = 0;
  VecX gt_theta;
  std::vector<Image> images;  // one per camera, same order as cameras
};

struct ObservationSequence {
  std::vector<Camera> cameras;
  std::vector<ObservationFrame> frames;

  void check() const {
    for (const auto& c : cameras) c.check();
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& f : frames) {
      if (f.time <= prev)
        throw InvalidInputError("ObservationSequence: times must strictly increase");
      prev = f.time;
      if (f.images.size() != cameras.size())
        throw DimensionError("ObservationSequence: image count != camera count");
    }
  }
};

}  // namespace artic
