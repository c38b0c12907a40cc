#include <cmath>
#include <vector>

#include "artic/common.hpp"
#include "artic/kinematics.hpp"
#include "artic/loss.hpp"
#include "artic/ssim.hpp"

namespace artic {

namespace {

using Mat34 = Eigen::Matrix<double, 3, 4>;

inline double charb(double x, double eps) {
  return std::sqrt(x * x + eps * eps) - eps;
}
inline double charb_grad(double x, double eps) {
  return x / std::sqrt(x * x + eps * eps);
}

inline Vec3 vee_adjoint(const Mat3& m) {
  return {m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)};
}

// ---------------------------------------------------------------------------
// Image-level loss and its per-pixel adjoint
// ---------------------------------------------------------------------------

struct ImageAdjoint {
  Eigen::ArrayXd dr, dg, db, ddepth;
};

double view_photometric(const Image& rendered, const Image& observed,
                        const LossConfig& cfg, ImageAdjoint* adj) {
  if (rendered.width != observed.width || rendered.height != observed.height)
    throw DimensionError("loss: rendered/observed dimensions differ");
  const Eigen::Index n = rendered.r.size();
  if (adj) {
    adj->dr.setZero(n);
    adj->dg.setZero(n);
    adj->db.setZero(n);
    adj->ddepth.setZero(n);
  }

  double loss = 0.0;
  const double l1_norm = cfg.lambda_l1 / (3.0 * static_cast<double>(n));
  auto l1_term = [&](const Eigen::ArrayXd& a, const Eigen::ArrayXd& o,
                     Eigen::ArrayXd* d) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double diff = a[i] - o[i];
      s += charb(diff, cfg.l1_eps);
      if (d) (*d)[i] += l1_norm * charb_grad(diff, cfg.l1_eps);
    }
    return s * l1_norm;
  };
  loss += l1_term(rendered.r, observed.r, adj ? &adj->dr : nullptr);
  loss += l1_term(rendered.g, observed.g, adj ? &adj->dg : nullptr);
  loss += l1_term(rendered.b, observed.b, adj ? &adj->db : nullptr);

  if (cfg.lambda_ssim > 0) {
    const double coeff = -cfg.lambda_ssim / 3.0;  // d(1 - mean ssim)/d(channel)
    const double sr = detail::ssim_channel(rendered.r, observed.r, rendered.width,
                                           rendered.height, coeff,
                                           adj ? &adj->dr : nullptr);
    const double sg = detail::ssim_channel(rendered.g, observed.g, rendered.width,
                                           rendered.height, coeff,
                                           adj ? &adj->dg : nullptr);
    const double sb = detail::ssim_channel(rendered.b, observed.b, rendered.width,
                                           rendered.height, coeff,
                                           adj ? &adj->db : nullptr);
    loss += cfg.lambda_ssim * (1.0 - (sr + sg + sb) / 3.0);
  }

  if (cfg.depth_weight > 0) {
    Eigen::Index n_valid = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (observed.depth[i] > 0) ++n_valid;
    if (n_valid > 0) {
      const double d_norm = cfg.depth_weight / static_cast<double>(n_valid);
      double s = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!(observed.depth[i] > 0)) continue;
        const double diff = rendered.depth[i] - observed.depth[i];
        s += charb(diff, cfg.l1_eps);
        if (adj) adj->ddepth[i] = d_norm * charb_grad(diff, cfg.l1_eps);
      }
      loss += s * d_norm;
    }
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Compositing backward (mirrors detail::composite_image exactly)
// ---------------------------------------------------------------------------

struct RecordAdjoint {
  Vec2 d_mean2d = Vec2::Zero();
  Mat2 d_cov2d = Mat2::Zero();
  double d_depth = 0;
  Vec3 d_color = Vec3::Zero();
  double d_opacity = 0;
};

struct UsedContribution {
  int record;
  double alpha;
  double trans;  // transmittance in front of this contribution
  double phi;    // payload adjoint inner product
};

void composite_backward(const std::vector<detail::SplatRecord>& records,
                        const detail::PixelBins& bins, const RenderConfig& cfg,
                        int width, int height, const ImageAdjoint& adj,
                        std::vector<RecordAdjoint>& out) {
  out.assign(records.size(), RecordAdjoint{});
  std::vector<UsedContribution> used;
  used.reserve(64);

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const size_t p = static_cast<size_t>(y) * width + x;
      const Vec3 d_rgb(adj.dr[p], adj.dg[p], adj.db[p]);
      const double d_depth_px = adj.ddepth[p];
      if (d_rgb.isZero(0.0) && d_depth_px == 0.0) continue;

      // Forward replay, keeping the surviving contributions.
      used.clear();
      double t = 1.0, acc_a = 0.0, acc_d = 0.0;
      for (int e = bins.offsets[p]; e < bins.offsets[p + 1]; ++e) {
        if (t < cfg.transmittance_stop) break;
        const auto& s = records[bins.entries[e]];
        const Vec2 d(x - s.mean2d.x(), y - s.mean2d.y());
        const double q = d.dot(s.inv_cov * d);
        const double a = s.opacity * std::exp(-0.5 * q);
        if (a < cfg.alpha_min) continue;
        used.push_back({bins.entries[e], a, t, 0.0});
        const double w = a * t;
        acc_a += w;
        acc_d += w * s.view_depth;
        t *= (1.0 - a);
      }

      const double denom = acc_a + detail::kDepthNormEps;
      const double d_dsum = d_depth_px / denom;
      const double d_acc = -d_depth_px * acc_d / (denom * denom);

      for (auto& u : used) {
        const auto& s = records[u.record];
        u.phi = d_rgb.dot(s.color) + d_dsum * s.view_depth + d_acc;
      }

      // Suffix recurrence: d alpha_i = T_i (phi_i - rest_i), where rest is the
      // composited payload adjoint of everything behind i (background last).
      double rest = d_rgb.dot(cfg.background);
      for (int i = static_cast<int>(used.size()) - 1; i >= 0; --i) {
        const auto& u = used[i];
        const auto& s = records[u.record];
        const double d_alpha = u.trans * (u.phi - rest);
        rest = u.alpha * u.phi + (1.0 - u.alpha) * rest;

        const double w = u.alpha * u.trans;
        auto& ra = out[u.record];
        ra.d_color += w * d_rgb;
        ra.d_depth += w * d_dsum;
        ra.d_opacity += (u.alpha / s.opacity) * d_alpha;

        const Vec2 d(x - s.mean2d.x(), y - s.mean2d.y());
        const Vec2 gv = s.inv_cov * d;
        ra.d_mean2d += (d_alpha * u.alpha) * gv;
        ra.d_cov2d += (0.5 * d_alpha * u.alpha) * (gv * gv.transpose());
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Projection backward, including the Jacobian's dependence on the mean
// ---------------------------------------------------------------------------

struct ProjectionAdjoint {
  Vec3 d_mean_world = Vec3::Zero();
  Mat3 d_cov_world = Mat3::Zero();
};

ProjectionAdjoint project_backward(const detail::SplatRecord& rec, const Camera& cam,
                                   const Mat3& cov_world, const RecordAdjoint& ra) {
  const Vec3& p = rec.p_cam;
  const double z = p.z();
  const Mat3 rot = cam.extrinsics.rotation_block();
  const Mat3 cov_cam = rot * cov_world * rot.transpose();

  Eigen::Matrix<double, 2, 3> jac;
  jac << cam.fx / z, 0.0, -cam.fx * p.x() / (z * z),
         0.0, cam.fy / z, -cam.fy * p.y() / (z * z);

  // cov2d = J cov_cam J^T + const
  const Mat3 d_cov_cam = jac.transpose() * ra.d_cov2d * jac;
  const Eigen::Matrix<double, 2, 3> d_jac =
      (ra.d_cov2d + ra.d_cov2d.transpose()) * jac * cov_cam;

  Vec3 dp = Vec3::Zero();
  // mean2d = (fx px/z + cx, fy py/z + cy)
  dp.x() += ra.d_mean2d.x() * cam.fx / z;
  dp.y() += ra.d_mean2d.y() * cam.fy / z;
  dp.z() += -ra.d_mean2d.x() * cam.fx * p.x() / (z * z) -
            ra.d_mean2d.y() * cam.fy * p.y() / (z * z);
  // view depth payload
  dp.z() += ra.d_depth;
  // J's own dependence on the camera-frame mean
  dp.x() += d_jac(0, 2) * (-cam.fx / (z * z));
  dp.y() += d_jac(1, 2) * (-cam.fy / (z * z));
  dp.z() += d_jac(0, 0) * (-cam.fx / (z * z)) + d_jac(1, 1) * (-cam.fy / (z * z)) +
            d_jac(0, 2) * (2.0 * cam.fx * p.x() / (z * z * z)) +
            d_jac(1, 2) * (2.0 * cam.fy * p.y() / (z * z * z));

  ProjectionAdjoint out;
  out.d_mean_world = rot.transpose() * dp;
  out.d_cov_world = rot.transpose() * d_cov_cam * rot;
  return out;
}

// ---------------------------------------------------------------------------
// Differentiable bone construction (axis normalized inside, no unit check)
// ---------------------------------------------------------------------------

struct BoneMatrix {
  Mat3 rot;
  Vec3 trans;
};

BoneMatrix make_bone(const JointSpec& joint, double value) {
  const double norm = joint.axis.norm();
  if (norm < 1e-12) throw DegenerateError("bone: zero-length axis");
  const Vec3 uh = joint.axis / norm;
  BoneMatrix b;
  if (joint.type == JointType::Revolute) {
    b.rot = rodrigues(uh, value);
    b.trans = joint.origin - b.rot * joint.origin;
  } else {
    b.rot = Mat3::Identity();
    b.trans = value * uh;
  }
  return b;
}

struct BoneAdjoint {
  Vec3 d_axis = Vec3::Zero();
  Vec3 d_origin = Vec3::Zero();
  double d_theta = 0;
};

BoneAdjoint bone_backward(const JointSpec& joint, double value, const Mat34& d_bone) {
  const double norm = joint.axis.norm();
  const Vec3 uh = joint.axis / norm;
  const Mat3 proj = (Mat3::Identity() - uh * uh.transpose()) / norm;

  BoneAdjoint out;
  const Vec3 dt = d_bone.col(3);
  if (joint.type == JointType::Prismatic) {
    out.d_theta = uh.dot(dt);
    out.d_axis = proj * (value * dt);
    return out;
  }
  const Mat3 k = skew(uh);
  const Mat3 k2 = k * k;
  const double c = std::cos(value), s = std::sin(value);
  const Mat3 rot = Mat3::Identity() + s * k + (1.0 - c) * k2;

  // t = q - R q
  out.d_origin = (Mat3::Identity() - rot).transpose() * dt;
  const Mat3 d_rot = d_bone.leftCols<3>() - dt * joint.origin.transpose();

  out.d_theta = (d_rot.array() * (c * k + s * k2).array()).sum();
  const Mat3 d_k =
      s * d_rot + (1.0 - c) * (d_rot * k.transpose() + k.transpose() * d_rot);
  out.d_axis = proj * vee_adjoint(d_k);
  return out;
}

// ---------------------------------------------------------------------------
// LBS forward state and backward
// ---------------------------------------------------------------------------

struct DeformedGaussian {
  Mat3 lin;    // blended linear block
  Vec3 trans;  // blended translation
  Mat3 polar;  // orthogonal factor of lin
  Mat3 q_rot;  // polar * R_gaussian
  Vec3 mean;
  Mat3 cov;
};

struct FrameState {
  std::vector<BoneMatrix> bones;  // K+1, bone 0 identity
  std::vector<DeformedGaussian> gaussians;
};

FrameState build_frame_state(const Scene& scene, const std::vector<JointSpec>& joints,
                             const Pose& theta,
                             const std::vector<VecX>& weights) {
  FrameState st;
  const size_t k = joints.size();
  st.bones.resize(k + 1);
  st.bones[0] = {Mat3::Identity(), Vec3::Zero()};
  for (size_t j = 0; j < k; ++j)
    st.bones[j + 1] = make_bone(joints[j], theta[static_cast<Eigen::Index>(j)]);

  st.gaussians.resize(scene.gaussians.size());
  for (size_t i = 0; i < scene.gaussians.size(); ++i) {
    const auto& g = scene.gaussians[i];
    const VecX& w = weights[i];
    Mat3 lin = Mat3::Zero();
    Vec3 tr = Vec3::Zero();
    for (size_t j = 0; j <= k; ++j) {
      lin += w[static_cast<Eigen::Index>(j)] * st.bones[j].rot;
      tr += w[static_cast<Eigen::Index>(j)] * st.bones[j].trans;
    }
    auto& d = st.gaussians[i];
    d.lin = lin;
    d.trans = tr;
    d.polar = polar_rotation(lin);
    d.q_rot = d.polar * g.rotation.toRotationMatrix();
    d.mean = lin * g.mean + tr;
    const Vec3 s2 = g.scale.cwiseProduct(g.scale);
    d.cov = d.q_rot * s2.asDiagonal() * d.q_rot.transpose();
  }
  return st;
}

// VJP of the orthogonal polar factor U of M: returns dM given dU.
Mat3 polar_backward(const Mat3& u, const Mat3& m, const Mat3& d_u) {
  const Mat3 a = u.transpose() * d_u;
  const Vec3 avec = vee_adjoint(a);
  Mat3 p = u.transpose() * m;
  p = 0.5 * (p + p.transpose());
  const Mat3 g = p.trace() * Mat3::Identity() - p;
  const Vec3 b = g.ldlt().solve(avec);
  return u * skew(b);
}

// Per-gaussian backward from world-space adjoints to blended-matrix and
// skinning-weight adjoints.
void lbs_backward(const GaussianSphere& g, const VecX& w, const DeformedGaussian& d,
                  const ProjectionAdjoint& pa, const std::vector<BoneMatrix>& bones,
                  std::vector<Mat34>& d_bones, VecX& d_w) {
  const Vec3 s2 = g.scale.cwiseProduct(g.scale);
  // cov = Q S^2 Q^T
  const Mat3 d_q =
      (pa.d_cov_world + pa.d_cov_world.transpose()) * d.q_rot * s2.asDiagonal();
  const Mat3 d_polar = d_q * g.rotation.toRotationMatrix().transpose();
  Mat3 d_lin = polar_backward(d.polar, d.lin, d_polar);
  // mean = lin * mu + trans
  d_lin += pa.d_mean_world * g.mean.transpose();
  const Vec3 d_trans = pa.d_mean_world;

  const size_t kb = bones.size();
  d_w.resize(static_cast<Eigen::Index>(kb));
  for (size_t j = 0; j < kb; ++j) {
    d_w[static_cast<Eigen::Index>(j)] =
        (d_lin.array() * bones[j].rot.array()).sum() + d_trans.dot(bones[j].trans);
    if (j > 0) {
      d_bones[j - 1].leftCols<3>() += w[static_cast<Eigen::Index>(j)] * d_lin;
      d_bones[j - 1].col(3) += w[static_cast<Eigen::Index>(j)] * d_trans;
    }
  }
}

inline VecX softmax_vjp(const VecX& w, const VecX& d_w) {
  return w.array() * (d_w.array() - d_w.dot(w));
}

// ---------------------------------------------------------------------------
// Articulated evaluation (loss + optional gradients)
// ---------------------------------------------------------------------------

struct ViewTaskOut {
  double loss = 0;
  std::vector<Mat34> d_bones;      // per joint
  Eigen::MatrixXd d_skin_logits;   // n x (K+1)
};

double evaluate_articulated(const Scene& scene, const std::vector<JointSpec>& joints,
                            const std::vector<Pose>& thetas,
                            const ObservationSequence& seq, const LossConfig& cfg,
                            LossGradients* grads) {
  cfg.check();
  seq.check();
  const int k = static_cast<int>(joints.size());
  if (scene.part_count != k)
    throw DimensionError("loss: scene.part_count != joint count");
  if (thetas.size() != seq.frames.size())
    throw DimensionError("loss: theta count != frame count");
  for (const auto& th : thetas)
    if (th.size() != k) throw DimensionError("loss: theta length != joint count");
  const size_t n = scene.gaussians.size();

  std::vector<VecX> weights(n);
  for (size_t i = 0; i < n; ++i) {
    if (scene.gaussians[i].skin_logits.size() != k + 1)
      throw DimensionError("loss: skin_logits length != K+1");
    weights[i] = softmax(scene.gaussians[i].skin_logits);
  }

  const size_t n_frames = seq.frames.size();
  const size_t n_views = seq.cameras.size();
  std::vector<FrameState> frames;
  frames.reserve(n_frames);
  for (size_t t = 0; t < n_frames; ++t)
    frames.push_back(build_frame_state(scene, joints, thetas[t], weights));

  const size_t n_tasks = n_frames * n_views;
  std::vector<ViewTaskOut> tasks(n_tasks);

  parallel_chunks(static_cast<int>(n_tasks), 0, [&](int begin, int end) {
    std::vector<detail::SplatRecord> records;
    std::vector<RecordAdjoint> rec_adj;
    for (int task = begin; task < end; ++task) {
      const size_t t = static_cast<size_t>(task) / n_views;
      const size_t v = static_cast<size_t>(task) % n_views;
      const Camera& cam = seq.cameras[v];
      const FrameState& fs = frames[t];

      records.clear();
      detail::SplatRecord rec;
      for (size_t i = 0; i < n; ++i) {
        const auto& dg = fs.gaussians[i];
        const auto& g = scene.gaussians[i];
        if (detail::project_record(static_cast<int>(i), dg.mean, dg.cov, g.color,
                                   g.opacity, cam, cfg.render, rec))
          records.push_back(rec);
      }
      const auto bins = detail::build_bins(records, cam.width, cam.height);
      const Image rendered =
          detail::composite_image(records, bins, cfg.render, cam.width, cam.height);

      auto& out = tasks[task];
      if (!grads) {
        out.loss = view_photometric(rendered, seq.frames[t].images[v], cfg, nullptr);
        continue;
      }
      ImageAdjoint adj;
      out.loss = view_photometric(rendered, seq.frames[t].images[v], cfg, &adj);
      composite_backward(records, bins, cfg.render, cam.width, cam.height, adj,
                         rec_adj);

      out.d_bones.assign(k, Mat34::Zero());
      out.d_skin_logits = Eigen::MatrixXd::Zero(n, k + 1);
      VecX d_w;
      for (size_t rix = 0; rix < records.size(); ++rix) {
        const auto& ra = rec_adj[rix];
        const auto& sr = records[rix];
        const size_t gi = static_cast<size_t>(sr.gaussian);
        const ProjectionAdjoint pa =
            project_backward(sr, cam, frames[t].gaussians[gi].cov, ra);
        lbs_backward(scene.gaussians[gi], weights[gi], fs.gaussians[gi], pa,
                     fs.bones, out.d_bones, d_w);
        out.d_skin_logits.row(gi) += softmax_vjp(weights[gi], d_w).transpose();
      }
    }
  });

  double loss = 0.0;
  std::vector<std::vector<Mat34>> frame_bone_adj;
  if (grads) {
    grads->d_axis.assign(k, Vec3::Zero());
    grads->d_origin.assign(k, Vec3::Zero());
    grads->d_theta.assign(n_frames, VecX::Zero(k));
    grads->d_skin_logits = Eigen::MatrixXd::Zero(n, k + 1);
    frame_bone_adj.assign(n_frames, std::vector<Mat34>(k, Mat34::Zero()));
  }
  for (size_t task = 0; task < n_tasks; ++task) {
    loss += tasks[task].loss;
    if (!grads) continue;
    const size_t t = task / n_views;
    for (int j = 0; j < k; ++j) frame_bone_adj[t][j] += tasks[task].d_bones[j];
    grads->d_skin_logits += tasks[task].d_skin_logits;
  }

  if (grads) {
    for (size_t t = 0; t < n_frames; ++t)
      for (int j = 0; j < k; ++j) {
        const BoneAdjoint ba =
            bone_backward(joints[j], thetas[t][j], frame_bone_adj[t][j]);
        grads->d_axis[j] += ba.d_axis;
        grads->d_origin[j] += ba.d_origin;
        grads->d_theta[t][j] = ba.d_theta;
      }
  }

  // Regularizers: unit-norm axes and skinning entropy, added once.
  for (int j = 0; j < k; ++j) {
    const double norm = joints[j].axis.norm();
    loss += cfg.lambda_unit * (norm - 1.0) * (norm - 1.0);
    if (grads)
      grads->d_axis[j] +=
          cfg.lambda_unit * 2.0 * (norm - 1.0) * joints[j].axis / norm;
  }
  if (cfg.lambda_entropy > 0) {
    for (size_t i = 0; i < n; ++i) {
      loss += cfg.lambda_entropy * entropy(weights[i]);
      if (grads) {
        VecX d_w(k + 1);
        for (int j = 0; j <= k; ++j) {
          const double w = weights[i][j];
          d_w[j] = -cfg.lambda_entropy * (std::log(std::max(w, 1e-300)) + 1.0);
        }
        grads->d_skin_logits.row(i) += softmax_vjp(weights[i], d_w).transpose();
      }
    }
  }

  if (grads) grads->loss = loss;
  return loss;
}

// ---------------------------------------------------------------------------
// Static (per-splat attribute) evaluation for fit_static
// ---------------------------------------------------------------------------

// VJP of R(q/|q|) for quaternion stored (w,x,y,z).
Vec4 quat_rotation_vjp(const Quat& q_raw, const Mat3& d_rot) {
  const double norm = q_raw.norm();
  const Quat q = Quat(q_raw.coeffs() / norm);
  const double w = q.w(), x = q.x(), y = q.y(), z = q.z();

  Mat3 dw, dx, dy, dz;
  dw << 0, -2 * z, 2 * y, 2 * z, 0, -2 * x, -2 * y, 2 * x, 0;
  dx << 0, 2 * y, 2 * z, 2 * y, -4 * x, -2 * w, 2 * z, 2 * w, -4 * x;
  dy << -4 * y, 2 * x, 2 * w, 2 * x, 0, 2 * z, -2 * w, 2 * z, -4 * y;
  dz << -4 * z, -2 * w, 2 * x, 2 * w, -4 * z, 2 * y, 2 * x, 2 * y, 0;

  Vec4 d_unit;  // (w,x,y,z)
  d_unit << (d_rot.array() * dw.array()).sum(), (d_rot.array() * dx.array()).sum(),
      (d_rot.array() * dy.array()).sum(), (d_rot.array() * dz.array()).sum();

  Vec4 qv;
  qv << w, x, y, z;
  return (Eigen::Matrix4d::Identity() - qv * qv.transpose()) * d_unit / norm;
}

struct StaticTaskOut {
  double loss = 0;
  Eigen::MatrixXd d_mean, d_rotation, d_scale, d_color;
  VecX d_opacity;
};

double evaluate_static(const Scene& scene, const std::vector<Camera>& cams,
                       const std::vector<Image>& observed, const LossConfig& cfg,
                       StaticGradients* grads) {
  cfg.check();
  if (cams.size() != observed.size())
    throw DimensionError("static loss: camera/observation count mismatch");
  const size_t n = scene.gaussians.size();
  const size_t n_views = cams.size();

  // Normalized rotations so finite-difference probes stay on the manifold.
  std::vector<Mat3> rots(n);
  std::vector<Mat3> covs(n);
  for (size_t i = 0; i < n; ++i) {
    const auto& g = scene.gaussians[i];
    rots[i] = Quat(g.rotation.coeffs() / g.rotation.norm()).toRotationMatrix();
    const Vec3 s2 = g.scale.cwiseProduct(g.scale);
    covs[i] = rots[i] * s2.asDiagonal() * rots[i].transpose();
  }

  std::vector<StaticTaskOut> tasks(n_views);
  parallel_chunks(static_cast<int>(n_views), 0, [&](int begin, int end) {
    std::vector<detail::SplatRecord> records;
    std::vector<RecordAdjoint> rec_adj;
    for (int v = begin; v < end; ++v) {
      const Camera& cam = cams[v];
      records.clear();
      detail::SplatRecord rec;
      for (size_t i = 0; i < n; ++i) {
        const auto& g = scene.gaussians[i];
        if (detail::project_record(static_cast<int>(i), g.mean, covs[i], g.color,
                                   g.opacity, cam, cfg.render, rec))
          records.push_back(rec);
      }
      const auto bins = detail::build_bins(records, cam.width, cam.height);
      const Image rendered =
          detail::composite_image(records, bins, cfg.render, cam.width, cam.height);

      auto& out = tasks[v];
      if (!grads) {
        out.loss = view_photometric(rendered, observed[v], cfg, nullptr);
        continue;
      }
      ImageAdjoint adj;
      out.loss = view_photometric(rendered, observed[v], cfg, &adj);
      composite_backward(records, bins, cfg.render, cam.width, cam.height, adj,
                         rec_adj);

      out.d_mean = Eigen::MatrixXd::Zero(n, 3);
      out.d_rotation = Eigen::MatrixXd::Zero(n, 4);
      out.d_scale = Eigen::MatrixXd::Zero(n, 3);
      out.d_color = Eigen::MatrixXd::Zero(n, 3);
      out.d_opacity = VecX::Zero(n);
      for (size_t rix = 0; rix < records.size(); ++rix) {
        const auto& ra = rec_adj[rix];
        const auto& sr = records[rix];
        const size_t gi = static_cast<size_t>(sr.gaussian);
        const auto& g = scene.gaussians[gi];
        const ProjectionAdjoint pa = project_backward(sr, cam, covs[gi], ra);

        out.d_mean.row(gi) += pa.d_mean_world.transpose();
        out.d_color.row(gi) += ra.d_color.transpose();
        out.d_opacity[gi] += ra.d_opacity;

        // cov = R S^2 R^T
        const Vec3 s2 = g.scale.cwiseProduct(g.scale);
        const Mat3 d_sym = pa.d_cov_world + pa.d_cov_world.transpose();
        const Mat3 d_rot = d_sym * rots[gi] * s2.asDiagonal();
        const Mat3 inner = rots[gi].transpose() * pa.d_cov_world * rots[gi];
        for (int a = 0; a < 3; ++a)
          out.d_scale(gi, a) += 2.0 * g.scale[a] * inner(a, a);
        const Vec4 dq = quat_rotation_vjp(g.rotation, d_rot);
        out.d_rotation.row(gi) += dq.transpose();
      }
    }
  });

  double loss = 0.0;
  if (grads) {
    grads->d_mean = Eigen::MatrixXd::Zero(n, 3);
    grads->d_rotation = Eigen::MatrixXd::Zero(n, 4);
    grads->d_scale = Eigen::MatrixXd::Zero(n, 3);
    grads->d_color = Eigen::MatrixXd::Zero(n, 3);
    grads->d_opacity = VecX::Zero(n);
  }
  for (size_t v = 0; v < n_views; ++v) {
    loss += tasks[v].loss;
    if (!grads) continue;
    grads->d_mean += tasks[v].d_mean;
    grads->d_rotation += tasks[v].d_rotation;
    grads->d_scale += tasks[v].d_scale;
    grads->d_color += tasks[v].d_color;
    grads->d_opacity += tasks[v].d_opacity;
  }
  if (grads) grads->loss = loss;
  return loss;
}

}  // namespace

double articulation_loss(const Scene& scene, const std::vector<JointSpec>& joints,
                         const std::vector<Pose>& thetas,
                         const ObservationSequence& seq, const LossConfig& cfg) {
  return evaluate_articulated(scene, joints, thetas, seq, cfg, nullptr);
}

LossGradients loss_gradients(const Scene& scene, const std::vector<JointSpec>& joints,
                             const std::vector<Pose>& thetas,
                             const ObservationSequence& seq, const LossConfig& cfg) {
  LossGradients out;
  evaluate_articulated(scene, joints, thetas, seq, cfg, &out);
  return out;
}

double static_loss(const Scene& scene, const std::vector<Camera>& cams,
                   const std::vector<Image>& observed, const LossConfig& cfg) {
  return evaluate_static(scene, cams, observed, cfg, nullptr);
}

StaticGradients static_gradients(const Scene& scene, const std::vector<Camera>& cams,
                                 const std::vector<Image>& observed,
                                 const LossConfig& cfg) {
  StaticGradients out;
  evaluate_static(scene, cams, observed, cfg, &out);
  return out;
}

}  // namespace artic
