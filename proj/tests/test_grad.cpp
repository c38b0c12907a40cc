#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "artic/loss.hpp"
#include "artic/render.hpp"
#include "helpers.hpp"

using namespace artic;
using namespace artic::testing;

namespace {

struct GradSetup {
  Scene scene;
  std::vector<JointSpec> joints;
  std::vector<Pose> thetas;
  ObservationSequence seq;
  LossConfig cfg;
};

// Random articulated configuration with observations rendered at different
// parameters. Smooth render thresholds keep the loss finite-difference
// checkable (see LossConfig.l1_eps for the matching data-term smoothing).
GradSetup random_setup(std::mt19937_64& rng, int n_gauss, int k, int res,
                       int n_frames, int n_views) {
  std::uniform_real_distribution<double> u(-1, 1);
  GradSetup s;
  s.scene = random_scene(rng, n_gauss, k, /*gentle=*/true);
  for (int j = 0; j < k; ++j) {
    JointSpec joint;
    joint.type = (j % 2 == 0) ? JointType::Revolute : JointType::Prismatic;
    joint.axis = random_unit_vec(rng);
    joint.origin = Vec3(0.3 * u(rng), 0.3 * u(rng), 2.0 + 0.3 * u(rng));
    s.joints.push_back(joint);
  }
  for (int t = 0; t < n_frames; ++t) {
    Pose th(k);
    for (int j = 0; j < k; ++j) th[j] = 0.25 * u(rng);
    s.thetas.push_back(th);
  }

  s.cfg.render.alpha_min = 1e-9;
  s.cfg.render.transmittance_stop = 1e-9;

  for (int v = 0; v < n_views; ++v) {
    Camera cam = v == 0 ? simple_camera(res, res, 0.9 * res, 0.9 * res, res / 2.0,
                                        res / 2.0)
                        : look_at_camera(Vec3(0.8, 0.3, -0.2), Vec3(0, 0, 2.2), res,
                                         0.9 * res);
    s.seq.cameras.push_back(cam);
  }

  // Observations: same scene articulated at perturbed joints/poses.
  std::vector<JointSpec> obs_joints = s.joints;
  for (auto& j : obs_joints) {
    j.axis = (j.axis + 0.2 * random_unit_vec(rng)).normalized();
    j.origin += Vec3(0.05 * u(rng), 0.05 * u(rng), 0.05 * u(rng));
  }
  for (int t = 0; t < n_frames; ++t) {
    ObservationFrame frame;
    frame.time = 0.1 * (t + 1);
    Pose obs_theta = s.thetas[t];
    for (int j = 0; j < k; ++j) obs_theta[j] += 0.15 * u(rng);
    for (const auto& cam : s.seq.cameras)
      frame.images.push_back(
          render_articulated(s.scene, obs_joints, obs_theta, cam, s.cfg.render));
    s.seq.frames.push_back(std::move(frame));
  }
  return s;
}

bool grad_close(double analytic, double fd, double rel_tol = 1e-3,
                double floor = 1e-8) {
  const double err = std::abs(analytic - fd);
  return err <= std::max(rel_tol * std::max(std::abs(analytic), std::abs(fd)), floor);
}

}  // namespace

TEST_CASE("loss value matches between articulation_loss and loss_gradients") {
  std::mt19937_64 rng(211);
  const GradSetup s = random_setup(rng, 8, 1, 20, 2, 1);
  const double a = articulation_loss(s.scene, s.joints, s.thetas, s.seq, s.cfg);
  const LossGradients g = loss_gradients(s.scene, s.joints, s.thetas, s.seq, s.cfg);
  CHECK(a == g.loss);

  const LossGradients g2 = loss_gradients(s.scene, s.joints, s.thetas, s.seq, s.cfg);
  CHECK(g.loss == g2.loss);
  for (size_t j = 0; j < g.d_axis.size(); ++j) {
    CHECK((g.d_axis[j] - g2.d_axis[j]).norm() == 0.0);
    CHECK((g.d_origin[j] - g2.d_origin[j]).norm() == 0.0);
  }
  CHECK((g.d_skin_logits - g2.d_skin_logits).norm() == 0.0);
}

TEST_CASE("self-consistent observations leave only the regularizer") {
  std::mt19937_64 rng(223);
  GradSetup s = random_setup(rng, 8, 1, 20, 2, 1);
  // overwrite observations with renders at the evaluation parameters
  for (size_t t = 0; t < s.seq.frames.size(); ++t)
    for (size_t v = 0; v < s.seq.cameras.size(); ++v)
      s.seq.frames[t].images[v] = render_articulated(
          s.scene, s.joints, s.thetas[t], s.seq.cameras[v], s.cfg.render);

  double entropy_floor = 0.0;
  for (const auto& g : s.scene.gaussians)
    entropy_floor += s.cfg.lambda_entropy * entropy(g.skin_weights());

  const LossGradients g = loss_gradients(s.scene, s.joints, s.thetas, s.seq, s.cfg);
  CHECK(std::abs(g.loss - entropy_floor) < 1e-6);
  for (const auto& dth : g.d_theta) CHECK(dth.cwiseAbs().maxCoeff() < 1e-6);
  for (const auto& da : g.d_axis) CHECK(da.cwiseAbs().maxCoeff() < 1e-6);
  for (const auto& dq : g.d_origin) CHECK(dq.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("analytic gradients match central finite differences") {
  std::mt19937_64 rng(227);
  for (int trial = 0; trial < 2; ++trial) {
    const int k = 1 + trial;  // one revolute-only, one revolute+prismatic
    GradSetup s = random_setup(rng, 8, k, 20, 2, 1);
    const LossGradients g = loss_gradients(s.scene, s.joints, s.thetas, s.seq, s.cfg);

    auto loss_at = [&](const GradSetup& c) {
      return articulation_loss(c.scene, c.joints, c.thetas, c.seq, c.cfg);
    };

    // theta
    const double h_ang = 1e-4;
    for (size_t t = 0; t < s.thetas.size(); ++t)
      for (int j = 0; j < k; ++j) {
        GradSetup p = s, m = s;
        p.thetas[t][j] += h_ang;
        m.thetas[t][j] -= h_ang;
        const double fd = (loss_at(p) - loss_at(m)) / (2 * h_ang);
        CAPTURE(t);
        CAPTURE(j);
        CHECK(grad_close(g.d_theta[t][j], fd));
      }

    // axis
    for (int j = 0; j < k; ++j)
      for (int c = 0; c < 3; ++c) {
        GradSetup p = s, m = s;
        p.joints[j].axis[c] += h_ang;
        m.joints[j].axis[c] -= h_ang;
        const double fd = (loss_at(p) - loss_at(m)) / (2 * h_ang);
        CHECK(grad_close(g.d_axis[j][c], fd));
      }

    // origin
    const double h_len = 1e-5;
    for (int j = 0; j < k; ++j)
      for (int c = 0; c < 3; ++c) {
        GradSetup p = s, m = s;
        p.joints[j].origin[c] += h_len;
        m.joints[j].origin[c] -= h_len;
        const double fd = (loss_at(p) - loss_at(m)) / (2 * h_len);
        CHECK(grad_close(g.d_origin[j][c], fd));
      }

    // skin logits (subset of gaussians to keep the unit test fast)
    for (size_t i = 0; i < std::min<size_t>(3, s.scene.gaussians.size()); ++i)
      for (int c = 0; c <= k; ++c) {
        GradSetup p = s, m = s;
        p.scene.gaussians[i].skin_logits[c] += h_ang;
        m.scene.gaussians[i].skin_logits[c] -= h_ang;
        const double fd = (loss_at(p) - loss_at(m)) / (2 * h_ang);
        CHECK(grad_close(g.d_skin_logits(i, c), fd));
      }
  }
}

TEST_CASE("prismatic axis gradient vanishes at zero displacement") {
  std::mt19937_64 rng(229);
  GradSetup s = random_setup(rng, 6, 1, 20, 2, 1);
  s.joints[0].type = JointType::Prismatic;
  for (auto& th : s.thetas) th.setZero();
  const LossGradients g = loss_gradients(s.scene, s.joints, s.thetas, s.seq, s.cfg);
  CHECK(g.d_axis[0].cwiseAbs().maxCoeff() < 1e-12);
  CHECK(g.d_origin[0].cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("static gradients match central finite differences") {
  std::mt19937_64 rng(233);
  Scene scene = random_scene(rng, 6, 0, /*gentle=*/true);
  LossConfig cfg;
  cfg.render.alpha_min = 1e-9;
  cfg.render.transmittance_stop = 1e-9;
  cfg.lambda_entropy = 0.0;

  std::vector<Camera> cams{simple_camera(20, 20, 18, 18, 10, 10),
                           look_at_camera(Vec3(0.6, 0.4, 0.1), Vec3(0, 0, 2.3), 20, 18)};
  // observations: jittered copy of the scene
  Scene obs_scene = scene;
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& g : obs_scene.gaussians) {
    g.mean += Vec3(0.01 * u(rng), 0.01 * u(rng), 0.01 * u(rng));
    g.color = (g.color + Vec3(0.05 * u(rng), 0.05 * u(rng), 0.05 * u(rng)))
                  .cwiseMax(0.0)
                  .cwiseMin(1.0);
  }
  std::vector<Image> observed;
  for (const auto& c : cams) observed.push_back(render(obs_scene, c, cfg.render));

  const StaticGradients g = static_gradients(scene, cams, observed, cfg);
  CHECK(g.loss == static_loss(scene, cams, observed, cfg));

  auto fd_check = [&](auto mutate, double analytic, double h) {
    Scene p = scene, m = scene;
    mutate(p, +h);
    mutate(m, -h);
    const double fd =
        (static_loss(p, cams, observed, cfg) - static_loss(m, cams, observed, cfg)) /
        (2 * h);
    CHECK(grad_close(analytic, fd, 2e-3));
  };

  for (size_t i = 0; i < 3; ++i) {
    for (int c = 0; c < 3; ++c) {
      fd_check([&](Scene& s, double h) { s.gaussians[i].mean[c] += h; },
               g.d_mean(i, c), 1e-6);
      fd_check([&](Scene& s, double h) { s.gaussians[i].scale[c] += h; },
               g.d_scale(i, c), 1e-6);
      fd_check([&](Scene& s, double h) { s.gaussians[i].color[c] += h; },
               g.d_color(i, c), 1e-5);
    }
    fd_check([&](Scene& s, double h) { s.gaussians[i].opacity += h; }, g.d_opacity[i],
             1e-5);
    // quaternion components (forward normalizes internally)
    auto qcomp = [](Quat& q, int c) -> double& {
      switch (c) {
        case 0: return q.w();
        case 1: return q.x();
        case 2: return q.y();
        default: return q.z();
      }
    };
    for (int c = 0; c < 4; ++c)
      fd_check([&](Scene& s, double h) { qcomp(s.gaussians[i].rotation, c) += h; },
               g.d_rotation(i, c), 1e-5);
  }
}
