#pragma once

#include <utility>
#include <vector>

#include "artic/kinematics.hpp"
#include "artic/scene.hpp"

namespace artic {

struct RenderConfig {
  double cutoff_sigma = 3.0;
  double alpha_min = 1.0 / 255.0;
  double transmittance_stop = 1e-4;
  Vec3 background = Vec3::Zero();
  double near_plane = 0.01;

  void check() const {
    if (!(cutoff_sigma >= 1.0) || !(alpha_min > 0.0) || !(transmittance_stop > 0.0) ||
        !(near_plane > 0.0))
      throw ConfigError("RenderConfig: cutoff_sigma >= 1 and positive thresholds required");
  }
};

/// Screen-space footprint of one splat. Low-pass regularization (0.3 px^2 on
/// the diagonal) is already applied to cov2d.
struct Projected2D {
  Vec2 mean2d = Vec2::Zero();
  Mat2 cov2d = Mat2::Identity();
  double view_depth = 0;  // camera-frame z, meters
  Vec3 color = Vec3::Zero();
  double opacity = 0;
  bool culled = false;  // behind the near plane; excluded from compositing
};

Projected2D project_gaussian(const GaussianSphere& g, const Camera& cam,
                             const RenderConfig& cfg = {});

struct ColorAlpha {
  Vec3 color;
  double alpha;
};

/// Front-to-back compositing of a depth-ordered contribution list over the
/// configured background. Returns (rgb, accumulated alpha).
std::pair<Vec3, double> composite_pixel(const std::vector<ColorAlpha>& ordered,
                                        const RenderConfig& cfg = {});

Image render(const Scene& scene, const Camera& cam, const RenderConfig& cfg = {});

Image render_articulated(const Scene& scene, const std::vector<JointSpec>& joints,
                         const Pose& pose, const Camera& cam,
                         const RenderConfig& cfg = {});

namespace detail {

/// Projected splat plus everything the adjoint pass has to re-chain through.
struct SplatRecord {
  int gaussian = -1;   // index into the source scene
  Vec3 p_cam;          // camera-frame mean
  Vec2 mean2d;
  Mat2 cov2d;          // includes the low-pass term
  Mat2 inv_cov;
  double view_depth;
  Vec3 color;
  double opacity;
  double radius_px;    // conservative footprint radius
};

/// Projects one splat given its world covariance. Returns false when culled
/// or when no pixel can clear the alpha_min clip.
bool project_record(int gaussian_index, const Vec3& mean_w, const Mat3& cov_w,
                    const Vec3& color, double opacity, const Camera& cam,
                    const RenderConfig& cfg, SplatRecord& out);

/// Per-pixel splat lists in CSR form; entries are indices into the record
/// vector, depth-ordered (ties broken by gaussian index) within each pixel.
struct PixelBins {
  std::vector<int> offsets;  // size width*height + 1
  std::vector<int> entries;
};

PixelBins build_bins(const std::vector<SplatRecord>& records, int width, int height);

/// Forward compositing of all pixels. Single code path for render() and the
/// loss/gradient evaluators.
Image composite_image(const std::vector<SplatRecord>& records, const PixelBins& bins,
                      const RenderConfig& cfg, int width, int height);

inline double max_eigenvalue_2x2(const Mat2& m) {
  const double tr = m(0, 0) + m(1, 1);
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  return tr / 2.0 + disc;
}

inline constexpr double kLowPass = 0.3;        // px^2 added to cov2d diagonal
inline constexpr double kDepthNormEps = 1e-6;  // smooth alpha normalization

}  // namespace detail

}  // namespace artic
