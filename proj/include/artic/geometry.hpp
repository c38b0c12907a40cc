#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>

#include "artic/common.hpp"

namespace artic {

template <typename S>
using Vec2T = Eigen::Matrix<S, 2, 1>;
template <typename S>
using Vec3T = Eigen::Matrix<S, 3, 1>;
template <typename S>
using Vec4T = Eigen::Matrix<S, 4, 1>;
template <typename S>
using VecXT = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S>
using Mat2T = Eigen::Matrix<S, 2, 2>;
template <typename S>
using Mat3T = Eigen::Matrix<S, 3, 3>;
template <typename S>
using Mat4T = Eigen::Matrix<S, 4, 4>;
template <typename S>
using QuatT = Eigen::Quaternion<S>;

using Vec2 = Vec2T<double>;
using Vec3 = Vec3T<double>;
using Vec4 = Vec4T<double>;
using VecX = VecXT<double>;
using Mat2 = Mat2T<double>;
using Mat3 = Mat3T<double>;
using Mat4 = Mat4T<double>;
using Quat = QuatT<double>;

inline constexpr double kOrthonormalTol = 1e-9;

template <typename S>
Mat3T<S> skew(const Vec3T<S>& v) {
  Mat3T<S> m;
  m << S(0), -v.z(), v.y(), v.z(), S(0), -v.x(), -v.y(), v.x(), S(0);
  return m;
}

/// Rotation about unit axis by angle (Rodrigues form).
template <typename S>
Mat3T<S> rodrigues(const Vec3T<S>& unit_axis, S angle) {
  const Mat3T<S> k = skew(unit_axis);
  return Mat3T<S>::Identity() + std::sin(angle) * k + (S(1) - std::cos(angle)) * k * k;
}

/// Rigid transform stored as a dense homogeneous 4x4 matrix.
template <typename S>
class SE3T {
 public:
  SE3T() : m_(Mat4T<S>::Identity()) {}

  static SE3T identity() { return SE3T(); }

  static SE3T from_matrix(const Mat4T<S>& m) {
    SE3T t;
    t.m_ = m;
    t.check();
    return t;
  }

  static SE3T from_rt(const Mat3T<S>& r, const Vec3T<S>& t) {
    Mat4T<S> m = Mat4T<S>::Identity();
    m.template topLeftCorner<3, 3>() = r;
    m.template topRightCorner<3, 1>() = t;
    return from_matrix(m);
  }

  static SE3T translation(const Vec3T<S>& t) {
    return from_rt(Mat3T<S>::Identity(), t);
  }

  static SE3T rotation(const Mat3T<S>& r) { return from_rt(r, Vec3T<S>::Zero()); }

  const Mat4T<S>& matrix() const { return m_; }
  Mat3T<S> rotation_block() const { return m_.template topLeftCorner<3, 3>(); }
  Vec3T<S> translation_vec() const { return m_.template topRightCorner<3, 1>(); }

  SE3T operator*(const SE3T& other) const {
    SE3T out;
    out.m_ = m_ * other.m_;
    return out;
  }

  Vec3T<S> apply(const Vec3T<S>& p) const {
    return m_.template topLeftCorner<3, 3>() * p + m_.template topRightCorner<3, 1>();
  }

  /// Rotates a direction (no translation).
  Vec3T<S> rotate(const Vec3T<S>& v) const {
    return m_.template topLeftCorner<3, 3>() * v;
  }

  SE3T inverse() const {
    const Mat3T<S> rt = rotation_block().transpose();
    SE3T out;
    out.m_ = Mat4T<S>::Identity();
    out.m_.template topLeftCorner<3, 3>() = rt;
    out.m_.template topRightCorner<3, 1>() = -rt * translation_vec();
    return out;
  }

  void check() const {
    if (!m_.allFinite()) throw InvalidInputError("SE3: non-finite entries");
    if (m_(3, 0) != S(0) || m_(3, 1) != S(0) || m_(3, 2) != S(0) || m_(3, 3) != S(1))
      throw InvalidInputError("SE3: bottom row must be (0,0,0,1)");
    const Mat3T<S> r = rotation_block();
    if (((r.transpose() * r) - Mat3T<S>::Identity()).cwiseAbs().maxCoeff() >
        S(kOrthonormalTol))
      throw InvalidInputError("SE3: rotation block not orthonormal");
    if (std::abs(r.determinant() - S(1)) > S(kOrthonormalTol) * S(10))
      throw InvalidInputError("SE3: rotation block must have det +1");
  }

 private:
  Mat4T<S> m_;
};

using SE3 = SE3T<double>;

/// Orthogonal (polar) factor of a 3x3 matrix, via SVD. det(m) must be > tol.
template <typename S>
Mat3T<S> polar_rotation(const Mat3T<S>& m, S det_tol = S(1e-12)) {
  if (m.determinant() <= det_tol)
    throw DegenerateError("polar_rotation: blended matrix is singular or reflecting");
  Eigen::JacobiSVD<Mat3T<S>> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3T<S> u = svd.matrixU() * svd.matrixV().transpose();
  return u;
}

}  // namespace artic
