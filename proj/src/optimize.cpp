#include "artic/optimize.hpp"

#include <cmath>

#include "artic/metrics.hpp"

namespace artic {

namespace {

// Flat-vector Adam state; step() applies one update in place.
struct Adam {
  VecX m, v;
  int t = 0;
  double beta1, beta2, eps;

  Adam(Eigen::Index n, const OptimizeConfig& cfg)
      : m(VecX::Zero(n)), v(VecX::Zero(n)), beta1(cfg.adam_beta1),
        beta2(cfg.adam_beta2), eps(cfg.adam_eps) {}

  void step(Eigen::Ref<VecX> params, const VecX& grad, double lr) {
    ++t;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    params -= (lr / bc1) * (m.array() / ((v.array() / bc2).sqrt() + eps)).matrix();
  }
};

bool converged(const std::vector<double>& trace, const OptimizeConfig& cfg) {
  const int w = cfg.converge_window;
  const int it = static_cast<int>(trace.size());
  if (it <= w) return false;
  const double a = trace[it - 1 - w];
  const double b = trace[it - 1];
  return std::abs(a - b) / std::max(std::abs(a), 1e-12) < cfg.converge_eps;
}

}  // namespace

RefinementResult refine(const Scene& scene, const std::vector<JointSpec>& j_init,
                        const ObservationSequence& seq, const LossConfig& loss_cfg,
                        const OptimizeConfig& opt_cfg,
                        const std::vector<JointSpec>* ground_truth) {
  opt_cfg.check();
  loss_cfg.check();
  if (static_cast<int>(j_init.size()) != scene.part_count)
    throw DimensionError("refine: j_init length != scene.part_count");
  if (seq.frames.size() < 2)
    throw InvalidInputError("refine: at least 2 observation frames required");
  if (ground_truth && ground_truth->size() != j_init.size())
    throw DimensionError("refine: ground truth joint count mismatch");

  const int k = static_cast<int>(j_init.size());
  const int n_frames = static_cast<int>(seq.frames.size());
  const Eigen::Index n = static_cast<Eigen::Index>(scene.gaussians.size());

  Scene work = scene;
  std::vector<JointSpec> joints = j_init;
  std::vector<Pose> thetas(n_frames, VecX::Zero(k));
  if (opt_cfg.theta_init) {
    if (opt_cfg.theta_init->size() != static_cast<size_t>(n_frames))
      throw DimensionError("refine: theta_init frame count mismatch");
    for (int t = 0; t < n_frames; ++t) {
      if ((*opt_cfg.theta_init)[t].size() != k)
        throw DimensionError("refine: theta_init length != joint count");
      thetas[t] = (*opt_cfg.theta_init)[t];
    }
  } else if (opt_cfg.theta_init_ramp) {
    if (opt_cfg.theta_init_ramp->size() != k)
      throw DimensionError("refine: theta ramp length != joint count");
    for (int t = 0; t < n_frames; ++t)
      thetas[t] = *opt_cfg.theta_init_ramp * (static_cast<double>(t + 1) / n_frames);
  }

  Adam adam_axis(3 * k, opt_cfg), adam_origin(3 * k, opt_cfg);
  Adam adam_theta(static_cast<Eigen::Index>(n_frames) * k, opt_cfg);
  Adam adam_skin(n * (k + 1), opt_cfg);

  RefinementResult res;
  res.loss_trace.reserve(opt_cfg.max_iters);

  auto record_metric_traces = [&] {
    if (!ground_truth) return;
    double ae = 0;
    double oe = 0;
    int n_oe = 0;
    for (int j = 0; j < k; ++j) {
      ae += axis_error_deg(joints[j].axis.normalized(),
                           (*ground_truth)[j].axis.normalized());
      const auto o =
          origin_error_cm(joints[j], (*ground_truth)[j].origin, (*ground_truth)[j].axis);
      if (o) {
        oe += *o;
        ++n_oe;
      }
    }
    res.ae_trace.push_back(k > 0 ? ae / k : 0.0);
    res.oe_trace.push_back(n_oe > 0 ? oe / n_oe : 0.0);
  };

  int iter = 0;
  for (; iter < opt_cfg.max_iters; ++iter) {
    const LossGradients lg = loss_gradients(work, joints, thetas, seq, loss_cfg);
    if (!std::isfinite(lg.loss))
      throw DivergenceError("refine: non-finite loss at iteration " +
                            std::to_string(iter));
    res.loss_trace.push_back(lg.loss);
    record_metric_traces();

    // theta update
    {
      VecX flat(static_cast<Eigen::Index>(n_frames) * k), grad(flat.size());
      for (int t = 0; t < n_frames; ++t)
        for (int j = 0; j < k; ++j) {
          flat[t * k + j] = thetas[t][j];
          grad[t * k + j] = lg.d_theta[t][j];
        }
      adam_theta.step(flat, grad, opt_cfg.lr_theta);
      for (int t = 0; t < n_frames; ++t)
        for (int j = 0; j < k; ++j) thetas[t][j] = flat[t * k + j];
    }

    if (iter >= opt_cfg.theta_warmup_iters && k > 0) {
      VecX ax(3 * k), gax(3 * k), og(3 * k), gog(3 * k);
      for (int j = 0; j < k; ++j) {
        ax.segment<3>(3 * j) = joints[j].axis;
        gax.segment<3>(3 * j) = lg.d_axis[j];
        og.segment<3>(3 * j) = joints[j].origin;
        gog.segment<3>(3 * j) = lg.d_origin[j];
      }
      adam_axis.step(ax, gax, opt_cfg.lr_axis);
      adam_origin.step(og, gog, opt_cfg.lr_origin);
      for (int j = 0; j < k; ++j) {
        joints[j].axis = ax.segment<3>(3 * j).normalized();
        joints[j].origin = og.segment<3>(3 * j);
      }
    }

    if (opt_cfg.optimize_skin_logits && iter >= opt_cfg.theta_warmup_iters && n > 0) {
      VecX flat(n * (k + 1)), grad(n * (k + 1));
      for (Eigen::Index i = 0; i < n; ++i) {
        flat.segment(i * (k + 1), k + 1) = work.gaussians[i].skin_logits;
        grad.segment(i * (k + 1), k + 1) = lg.d_skin_logits.row(i).transpose();
      }
      adam_skin.step(flat, grad, opt_cfg.lr_skin);
      for (Eigen::Index i = 0; i < n; ++i)
        work.gaussians[i].skin_logits = flat.segment(i * (k + 1), k + 1);
    }

    if (converged(res.loss_trace, opt_cfg)) {
      ++iter;
      break;
    }
  }
  res.iterations = iter;
  res.joints = joints;
  res.thetas = thetas;

  if (ground_truth) {
    for (int j = 0; j < k; ++j) {
      const auto& gt = (*ground_truth)[j];
      res.initial_ae_deg.push_back(
          axis_error_deg(j_init[j].axis.normalized(), gt.axis.normalized()));
      res.final_ae_deg.push_back(
          axis_error_deg(joints[j].axis.normalized(), gt.axis.normalized()));
      res.initial_oe_cm.push_back(origin_error_cm(j_init[j], gt.origin, gt.axis));
      res.final_oe_cm.push_back(origin_error_cm(joints[j], gt.origin, gt.axis));
    }
  }
  return res;
}

StaticFitResult fit_static(const Scene& init_scene,
                           const std::vector<std::pair<Camera, Image>>& views,
                           const LossConfig& loss_cfg, const OptimizeConfig& opt_cfg) {
  opt_cfg.check();
  loss_cfg.check();
  if (views.size() < 3)
    throw InvalidInputError("fit_static: at least 3 views required");

  std::vector<Camera> cams;
  std::vector<Image> observed;
  for (const auto& [c, im] : views) {
    cams.push_back(c);
    observed.push_back(im);
  }

  Scene work = init_scene;
  const Eigen::Index n = static_cast<Eigen::Index>(work.gaussians.size());
  Adam a_mean(3 * n, opt_cfg), a_rot(4 * n, opt_cfg), a_scale(3 * n, opt_cfg),
      a_op(n, opt_cfg), a_col(3 * n, opt_cfg);

  StaticFitResult res;
  int iter = 0;
  for (; iter < opt_cfg.max_iters; ++iter) {
    const StaticGradients sg = static_gradients(work, cams, observed, loss_cfg);
    if (!std::isfinite(sg.loss))
      throw DivergenceError("fit_static: non-finite loss at iteration " +
                            std::to_string(iter));
    res.loss_trace.push_back(sg.loss);

    VecX mean(3 * n), rot(4 * n), scl(3 * n), op(n), col(3 * n);
    VecX g_mean(3 * n), g_rot(4 * n), g_scl(3 * n), g_op(n), g_col(3 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& g = work.gaussians[i];
      mean.segment<3>(3 * i) = g.mean;
      rot.segment<4>(4 * i) << g.rotation.w(), g.rotation.x(), g.rotation.y(),
          g.rotation.z();
      scl.segment<3>(3 * i) = g.scale;
      op[i] = g.opacity;
      col.segment<3>(3 * i) = g.color;
      g_mean.segment<3>(3 * i) = sg.d_mean.row(i).transpose();
      g_rot.segment<4>(4 * i) = sg.d_rotation.row(i).transpose();
      g_scl.segment<3>(3 * i) = sg.d_scale.row(i).transpose();
      g_op[i] = sg.d_opacity[i];
      g_col.segment<3>(3 * i) = sg.d_color.row(i).transpose();
    }
    a_mean.step(mean, g_mean, opt_cfg.lr_mean);
    a_rot.step(rot, g_rot, opt_cfg.lr_rotation);
    a_scale.step(scl, g_scl, opt_cfg.lr_scale);
    a_op.step(op, g_op, opt_cfg.lr_opacity);
    a_col.step(col, g_col, opt_cfg.lr_color);

    for (Eigen::Index i = 0; i < n; ++i) {
      auto& g = work.gaussians[i];
      g.mean = mean.segment<3>(3 * i);
      Quat q(rot[4 * i], rot[4 * i + 1], rot[4 * i + 2], rot[4 * i + 3]);
      g.rotation = q.normalized();
      g.scale = scl.segment<3>(3 * i).cwiseMax(1e-4);
      g.opacity = std::clamp(op[i], 1e-4, 0.999);
      g.color = col.segment<3>(3 * i).cwiseMax(0.0).cwiseMin(1.0);
    }

    if (converged(res.loss_trace, opt_cfg)) {
      ++iter;
      break;
    }
  }
  res.iterations = iter;
  res.scene = work;
  for (size_t v = 0; v < cams.size(); ++v)
    res.psnr.push_back(psnr(render(res.scene, cams[v], loss_cfg.render), observed[v]));
  return res;
}

}  // namespace artic
