#pragma once

// Independent reference implementations used to freeze expected values.
// These deliberately avoid the production code paths: plain loops, explicit
// formulas, no shared helpers beyond basic Eigen containers.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "artic/kinematics.hpp"
#include "artic/render.hpp"
#include "artic/scene.hpp"

namespace artic::testing {

// 4x4 matrix in row-major std::array form, multiplied with explicit loops.
using Raw4 = std::array<double, 16>;

inline Raw4 oracle_mdh_matrix(double beta, double a, double d, double theta) {
  const double ct = std::cos(theta), st = std::sin(theta);
  const double cb = std::cos(beta), sb = std::sin(beta);
  return {ct, -st * cb, st * sb,  a * ct,
          st, ct * cb,  -ct * sb, a * st,
          0,  sb,       cb,       d,
          0,  0,        0,        1};
}

inline Raw4 oracle_mat_mul(const Raw4& a, const Raw4& b) {
  Raw4 out{};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      double s = 0;
      for (int k = 0; k < 4; ++k) s += a[r * 4 + k] * b[k * 4 + c];
      out[r * 4 + c] = s;
    }
  return out;
}

inline Raw4 oracle_identity4() {
  return {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
}

/// Chained-matrix-product forward kinematics with pose injection.
inline std::vector<Raw4> oracle_chain(const std::vector<MDHParams>& links,
                                      const std::vector<MDHJointKind>& kinds,
                                      const std::vector<double>& pose) {
  std::vector<Raw4> out{oracle_identity4()};
  Raw4 acc = oracle_identity4();
  for (size_t i = 0; i < links.size(); ++i) {
    const double theta =
        links[i].theta + (kinds[i] == MDHJointKind::Revolute ? pose[i] : 0.0);
    const double d = links[i].d + (kinds[i] == MDHJointKind::Prismatic ? pose[i] : 0.0);
    acc = oracle_mat_mul(acc, oracle_mdh_matrix(links[i].beta, links[i].a, d, theta));
    out.push_back(acc);
  }
  return out;
}

inline double raw4_max_diff(const Raw4& a, const Mat4& b) {
  double m = 0;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m = std::max(m, std::abs(a[r * 4 + c] - b(r, c)));
  return m;
}

// ---------------------------------------------------------------------------
// Brute-force per-pixel renderer: evaluates every gaussian at every pixel (no
// spatial culling, no footprint radius). The compositing rule itself matches
// the render contract: alpha_min clip, transmittance stop, background under,
// smooth depth normalization dsum/(acc + 1e-6).
// ---------------------------------------------------------------------------

struct OracleSplat {
  double mx, my;       // projected mean, pixels
  double a11, a12, a22;  // cov2d entries (with 0.3 px^2 low-pass)
  double z;
  Vec3 color;
  double opacity;
  int index;
  bool visible;
};

inline OracleSplat oracle_project(const GaussianSphere& g, const Camera& cam,
                                  double near_plane) {
  OracleSplat s{};
  const Mat4 e = cam.extrinsics.matrix();
  const Vec3 pc = e.topLeftCorner<3, 3>() * g.mean + e.topRightCorner<3, 1>();
  s.z = pc.z();
  s.visible = pc.z() > near_plane;
  if (!s.visible) return s;
  s.mx = cam.fx * pc.x() / pc.z() + cam.cx;
  s.my = cam.fy * pc.y() / pc.z() + cam.cy;

  const Mat3 r = g.rotation.toRotationMatrix();
  Mat3 cov = Mat3::Zero();
  for (int i = 0; i < 3; ++i)
    cov += (g.scale[i] * g.scale[i]) * (r.col(i) * r.col(i).transpose());
  const Mat3 w = e.topLeftCorner<3, 3>();
  const Mat3 cov_cam = w * cov * w.transpose();
  const double z = pc.z();
  Eigen::Matrix<double, 2, 3> jac;
  jac << cam.fx / z, 0, -cam.fx * pc.x() / (z * z),
         0, cam.fy / z, -cam.fy * pc.y() / (z * z);
  const Mat2 c2 = jac * cov_cam * jac.transpose();
  s.a11 = c2(0, 0) + 0.3;
  s.a12 = c2(0, 1);
  s.a22 = c2(1, 1) + 0.3;
  s.color = g.color;
  s.opacity = g.opacity;
  return s;
}

inline Image oracle_render(const Scene& scene, const Camera& cam,
                           const RenderConfig& cfg) {
  std::vector<OracleSplat> splats;
  for (size_t i = 0; i < scene.gaussians.size(); ++i) {
    OracleSplat s = oracle_project(scene.gaussians[i], cam, cfg.near_plane);
    s.index = static_cast<int>(i);
    if (s.visible) splats.push_back(s);
  }
  std::sort(splats.begin(), splats.end(), [](const OracleSplat& a, const OracleSplat& b) {
    if (a.z != b.z) return a.z < b.z;
    return a.index < b.index;
  });

  Image im = Image::zeros(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      double t = 1.0, acc = 0.0, dsum = 0.0;
      Vec3 rgb = Vec3::Zero();
      for (const auto& s : splats) {
        if (t < cfg.transmittance_stop) break;
        const double dx = x - s.mx, dy = y - s.my;
        const double det = s.a11 * s.a22 - s.a12 * s.a12;
        const double q =
            (s.a22 * dx * dx - 2.0 * s.a12 * dx * dy + s.a11 * dy * dy) / det;
        const double alpha = s.opacity * std::exp(-0.5 * q);
        if (alpha < cfg.alpha_min) continue;
        rgb += alpha * t * s.color;
        acc += alpha * t;
        dsum += alpha * t * s.z;
        t *= (1.0 - alpha);
      }
      rgb += t * cfg.background;
      const auto p = im.idx(x, y);
      im.r[p] = rgb.x();
      im.g[p] = rgb.y();
      im.b[p] = rgb.z();
      im.alpha[p] = std::min(acc, 1.0);
      im.depth[p] = dsum / (acc + 1e-6);
    }
  }
  return im;
}

inline double image_max_diff(const Image& a, const Image& b) {
  double m = 0;
  m = std::max(m, (a.r - b.r).abs().maxCoeff());
  m = std::max(m, (a.g - b.g).abs().maxCoeff());
  m = std::max(m, (a.b - b.b).abs().maxCoeff());
  m = std::max(m, (a.depth - b.depth).abs().maxCoeff());
  m = std::max(m, (a.alpha - b.alpha).abs().maxCoeff());
  return m;
}

}  // namespace artic::testing
