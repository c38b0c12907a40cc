#pragma once

#include <optional>
#include <vector>

#include "artic/loss.hpp"

namespace artic {

struct OptimizeConfig {
  int max_iters = 250;
  // Per-group learning rates (Adam step sizes).
  double lr_axis = 0.01;
  double lr_origin = 0.01;
  double lr_theta = 0.04;
  double lr_skin = 0.005;
  // fit_static groups
  double lr_mean = 0.002;
  double lr_rotation = 0.01;
  double lr_scale = 0.005;
  double lr_opacity = 0.01;
  double lr_color = 0.02;
  // Convergence: stop when the relative loss change across the window drops
  // below eps.
  double converge_eps = 1e-6;
  int converge_window = 20;
  uint64_t seed = 0;  // reserved; the optimizer itself is deterministic
  // theta_t starts at zero unless a ramp target is configured (frame t starts
  // at ramp * (t+1)/T) or an explicit per-frame init is given.
  std::optional<VecX> theta_init_ramp;
  std::optional<std::vector<VecX>> theta_init;
  int theta_warmup_iters = 0;  // iterations updating theta only
  bool optimize_skin_logits = true;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void check() const {
    if (max_iters < 1) throw ConfigError("OptimizeConfig: max_iters must be >= 1");
    if (lr_axis <= 0 || lr_origin <= 0 || lr_theta <= 0 || lr_skin < 0)
      throw ConfigError("OptimizeConfig: learning rates must be positive");
    if (converge_window < 1) throw ConfigError("OptimizeConfig: window must be >= 1");
  }
};

struct RefinementResult {
  std::vector<JointSpec> joints;
  std::vector<Pose> thetas;
  std::vector<double> loss_trace;
  int iterations = 0;
  // Present when ground truth was supplied.
  std::vector<double> initial_ae_deg, final_ae_deg;
  std::vector<std::optional<double>> initial_oe_cm, final_oe_cm;
  // Per-iteration mean AE over joints / mean OE over revolute joints.
  std::vector<double> ae_trace, oe_trace;
};

/// Gradient-based refinement of joint parameters and per-frame states from an
/// observation sequence. Joint types are taken from j_init and never changed;
/// axes are renormalized to unit length after every step.
RefinementResult refine(const Scene& scene, const std::vector<JointSpec>& j_init,
                        const ObservationSequence& seq, const LossConfig& loss_cfg,
                        const OptimizeConfig& opt_cfg,
                        const std::vector<JointSpec>* ground_truth = nullptr);

struct StaticFitResult {
  Scene scene;
  std::vector<double> psnr;  // final, per view
  std::vector<double> loss_trace;
  int iterations = 0;
};

/// Multi-view photometric fit of a fixed-count splat set (means, rotations,
/// scales, opacities, colors).
StaticFitResult fit_static(const Scene& init_scene,
                           const std::vector<std::pair<Camera, Image>>& views,
                           const LossConfig& loss_cfg, const OptimizeConfig& opt_cfg);

}  // namespace artic
