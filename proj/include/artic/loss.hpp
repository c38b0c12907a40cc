#pragma once

#include <vector>

#include "artic/render.hpp"
#include "artic/scene.hpp"

namespace artic {

struct LossConfig {
  double lambda_l1 = 0.8;
  double lambda_ssim = 0.2;
  double lambda_unit = 0.01;     // axis unit-norm penalty
  double lambda_entropy = 0.001; // skinning-weight entropy penalty
  double depth_weight = 0.1;
  // Charbonnier smoothing width for the absolute-value terms; keeps the
  // loss C^1 so finite-difference checks of the analytic gradients converge.
  double l1_eps = 1e-3;
  RenderConfig render;

  void check() const {
    if (lambda_l1 < 0 || lambda_ssim < 0 || lambda_unit < 0 || lambda_entropy < 0 ||
        depth_weight < 0)
      throw ConfigError("LossConfig: weights must be non-negative");
    if (!(lambda_l1 + lambda_ssim > 0))
      throw ConfigError("LossConfig: lambda_l1 + lambda_ssim must be positive");
    render.check();
  }
};

/// Photometric + regularization objective over an observation sequence,
/// evaluated at per-frame poses `thetas`.
double articulation_loss(const Scene& scene, const std::vector<JointSpec>& joints,
                         const std::vector<Pose>& thetas,
                         const ObservationSequence& seq, const LossConfig& cfg);

/// Exact adjoints of articulation_loss for every articulation parameter.
/// Deterministic: per-view work is merged in frame-major, view-minor order.
struct LossGradients {
  double loss = 0;
  std::vector<Vec3> d_axis;        // per joint
  std::vector<Vec3> d_origin;      // per joint
  std::vector<VecX> d_theta;       // per frame, length K
  Eigen::MatrixXd d_skin_logits;   // n_gaussians x (K+1)
};

LossGradients loss_gradients(const Scene& scene, const std::vector<JointSpec>& joints,
                             const std::vector<Pose>& thetas,
                             const ObservationSequence& seq, const LossConfig& cfg);

/// Static multi-view photometric objective (no articulation terms) and its
/// adjoints with respect to every splat attribute. Backs fit_static.
struct StaticGradients {
  double loss = 0;
  Eigen::MatrixXd d_mean;      // n x 3
  Eigen::MatrixXd d_rotation;  // n x 4, wxyz
  Eigen::MatrixXd d_scale;     // n x 3
  VecX d_opacity;              // n
  Eigen::MatrixXd d_color;     // n x 3
};

double static_loss(const Scene& scene, const std::vector<Camera>& cams,
                   const std::vector<Image>& observed, const LossConfig& cfg);

StaticGradients static_gradients(const Scene& scene, const std::vector<Camera>& cams,
                                 const std::vector<Image>& observed,
                                 const LossConfig& cfg);

inline double psnr(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height)
    throw DimensionError("psnr: image dimensions differ");
  const double mse = ((a.r - b.r).square().sum() + (a.g - b.g).square().sum() +
                      (a.b - b.b).square().sum()) /
                     (3.0 * static_cast<double>(a.r.size()));
  return 10.0 * std::log10(1.0 / std::max(mse, 1e-20));
}

}  // namespace artic
