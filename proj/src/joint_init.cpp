#include "artic/joint_init.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

namespace artic {

namespace {

struct Pca {
  Vec3 mean;
  Vec3 eigenvalues;  // ascending
  Mat3 eigenvectors;
};

Pca run_pca(const std::vector<Vec3>& pts) {
  Pca out;
  out.mean = Vec3::Zero();
  for (const auto& p : pts) out.mean += p;
  out.mean /= static_cast<double>(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : pts) {
    const Vec3 c = p - out.mean;
    cov += c * c.transpose();
  }
  cov /= static_cast<double>(pts.size());
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  out.eigenvalues = es.eigenvalues();
  out.eigenvectors = es.eigenvectors();
  return out;
}

Vec3 fix_sign_largest_component(Vec3 v) {
  int arg = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
  return v[arg] < 0 ? Vec3(-v) : v;
}

std::vector<Vec3> unproject_samples(const Vec2& a, const Vec2& b, int n,
                                    const Image& depth_map, const Camera& cam) {
  std::vector<Vec3> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double s = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    const Vec2 px = a + s * (b - a);
    const int ix = static_cast<int>(std::lround(px.x()));
    const int iy = static_cast<int>(std::lround(px.y()));
    if (ix < 0 || iy < 0 || ix >= depth_map.width || iy >= depth_map.height) continue;
    if (!(depth_map.depth[depth_map.idx(ix, iy)] > 0)) continue;
    pts.push_back(unproject(px, depth_map, cam));
  }
  return pts;
}

template <typename Fn>
auto with_part_context(size_t part, Fn&& fn) {
  const std::string prefix = "part " + std::to_string(part) + ": ";
  try {
    return fn();
  } catch (const NoDepthError& e) {
    throw NoDepthError(prefix + e.what());
  } catch (const InsufficientDepthError& e) {
    throw InsufficientDepthError(prefix + e.what());
  } catch (const DegenerateError& e) {
    throw DegenerateError(prefix + e.what());
  } catch (const InvalidInputError& e) {
    throw InvalidInputError(prefix + e.what());
  }
}

}  // namespace

Vec3 unproject(const Vec2& pixel, const Image& depth_map, const Camera& cam) {
  const int ix = static_cast<int>(std::lround(pixel.x()));
  const int iy = static_cast<int>(std::lround(pixel.y()));
  if (ix < 0 || iy < 0 || ix >= depth_map.width || iy >= depth_map.height)
    throw InvalidInputError("unproject: pixel outside image bounds");
  const double z = depth_map.depth[depth_map.idx(ix, iy)];
  if (!(z > 0)) throw NoDepthError("unproject: no depth at pixel");
  const Vec3 pc(z * (pixel.x() - cam.cx) / cam.fx, z * (pixel.y() - cam.cy) / cam.fy,
                z);
  return cam.extrinsics.inverse().apply(pc);
}

std::pair<Vec3, Vec3> estimate_revolute(const Vec2& p1_px, const Vec2& p2_px,
                                        const Image& depth_map, const Camera& cam,
                                        const JointInitConfig& cfg) {
  if (cfg.n_samples < 3)
    throw InvalidInputError("estimate_revolute: n_samples must be >= 3");
  const auto pts = unproject_samples(p1_px, p2_px, cfg.n_samples, depth_map, cam);
  if (pts.size() < 3)
    throw InsufficientDepthError("estimate_revolute: fewer than 3 valid depth samples");

  const Pca pca = run_pca(pts);
  const double l1 = pca.eigenvalues[2];
  if (l1 < 1e-10)
    throw DegenerateError("estimate_revolute: degenerate point spread");
  if (l1 > cfg.tau_hi * l1 || l1 < cfg.tau_lo * l1)
    throw DegenerateError("estimate_revolute: principal component filtered out");
  const Vec3 axis = fix_sign_largest_component(pca.eigenvectors.col(2)).normalized();
  return {axis, pca.mean};
}

Vec3 estimate_prismatic(const Vec2& bbox_min, const Vec2& bbox_max,
                        const Image& depth_map, const Camera& cam,
                        const JointInitConfig& cfg) {
  // A mid-line needs at least two distinct pixels to fit a direction.
  if (std::lround(bbox_min.x()) == std::lround(bbox_max.x()) ||
      std::lround(bbox_min.y()) == std::lround(bbox_max.y()))
    throw DegenerateError("estimate_prismatic: bbox collapses to a single pixel line");
  const double mx = 0.5 * (bbox_min.x() + bbox_max.x());
  const double my = 0.5 * (bbox_min.y() + bbox_max.y());
  const auto h_pts = unproject_samples({bbox_min.x(), my}, {bbox_max.x(), my},
                                       cfg.n_samples, depth_map, cam);
  const auto v_pts = unproject_samples({mx, bbox_min.y()}, {mx, bbox_max.y()},
                                       cfg.n_samples, depth_map, cam);
  if (h_pts.size() < 2 || v_pts.size() < 2)
    throw InsufficientDepthError("estimate_prismatic: bbox mid-lines lack depth");

  auto fit_direction = [](const std::vector<Vec3>& pts) {
    const Pca pca = run_pca(pts);
    if (pca.eigenvalues[2] < 1e-10)
      throw DegenerateError("estimate_prismatic: degenerate mid-line spread");
    return Vec3(pca.eigenvectors.col(2));
  };
  const Vec3 h_dir = fit_direction(h_pts);
  const Vec3 v_dir = fit_direction(v_pts);
  const Vec3 cross = h_dir.cross(v_dir);
  if (cross.norm() < 1e-6)
    throw DegenerateError("estimate_prismatic: fitted directions are parallel");
  Vec3 axis = cross.normalized();
  if (axis.dot(cam.forward_world()) > 0) axis = -axis;
  return axis;
}

std::vector<JointSpec> init_joints(const AnnotationSet& ann, const Image& depth_map,
                                   const Camera& cam, const JointInitConfig& cfg) {
  std::vector<JointSpec> joints;
  joints.reserve(ann.parts.size());
  for (size_t i = 0; i < ann.parts.size(); ++i) {
    const auto& part = ann.parts[i];
    with_part_context(i, [&] {
      part.check(depth_map.width, depth_map.height);
      JointSpec j;
      j.type = part.joint_type;
      if (part.joint_type == JointType::Revolute) {
        auto [axis, origin] = estimate_revolute(part.v1, part.v2, depth_map, cam, cfg);
        j.axis = axis;
        j.origin = origin;
      } else {
        j.axis = estimate_prismatic(part.bbox_min, part.bbox_max, depth_map, cam, cfg);
        // Only the direction matters for a prismatic joint; anchor the line
        // at the unprojected bbox center for reporting.
        const Vec2 center = 0.5 * (part.bbox_min + part.bbox_max);
        j.origin = unproject(center, depth_map, cam);
      }
      joints.push_back(j);
    });
  }
  return joints;
}

namespace {

// Projects every gaussian whose argmax skinning weight selects `part`;
// returns pixel positions.
std::vector<Vec2> project_part_pixels(const Scene& scene, int part, const Camera& cam) {
  std::vector<Vec2> px;
  for (const auto& g : scene.gaussians) {
    Eigen::Index arg;
    g.skin_logits.maxCoeff(&arg);
    if (static_cast<int>(arg) != part) continue;
    const Vec3 pc = cam.world_to_camera(g.mean);
    if (pc.z() <= 1e-6) continue;
    px.push_back(cam.project_camera_point(pc));
  }
  return px;
}

bool inside_image(const Vec2& p, const Camera& cam) {
  return p.x() >= 0 && p.y() >= 0 && p.x() <= cam.width - 1 && p.y() <= cam.height - 1;
}

}  // namespace

AnnotationSet synthesize_annotations(const Scene& gt_scene,
                                     const std::vector<JointSpec>& gt_joints,
                                     const Camera& cam, const AnnotationNoise& noise) {
  AnnotationSet ann;
  ann.noise_meta = "tilt[" + std::to_string(noise.tilt_min_deg) + "," +
                   std::to_string(noise.tilt_max_deg) + "]deg shift" +
                   std::to_string(noise.shift_px) + "px bbox" +
                   std::to_string(noise.bbox_px) + "px seed" +
                   std::to_string(noise.seed);
  std::mt19937_64 rng(noise.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (size_t j = 0; j < gt_joints.size(); ++j) {
    const auto& joint = gt_joints[j];
    const auto px = project_part_pixels(gt_scene, static_cast<int>(j) + 1, cam);
    if (px.empty())
      throw VisibilityError("synthesize_annotations: part " + std::to_string(j) +
                            " has no visible gaussians");
    Vec2 lo = px[0], hi = px[0];
    for (const auto& p : px) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }

    PartAnnotation part;
    part.joint_type = joint.type;

    if (joint.type == JointType::Revolute) {
      // Joint segment: span of the part along the axis line.
      double t_lo = std::numeric_limits<double>::infinity(), t_hi = -t_lo;
      for (const auto& g : gt_scene.gaussians) {
        Eigen::Index arg;
        g.skin_logits.maxCoeff(&arg);
        if (static_cast<int>(arg) != static_cast<int>(j) + 1) continue;
        const double t = (g.mean - joint.origin).dot(joint.axis);
        t_lo = std::min(t_lo, t);
        t_hi = std::max(t_hi, t);
      }
      const Vec3 w1 = joint.origin + t_lo * joint.axis;
      const Vec3 w2 = joint.origin + t_hi * joint.axis;
      const Vec3 c1 = cam.world_to_camera(w1), c2 = cam.world_to_camera(w2);
      if (c1.z() <= 1e-6 && c2.z() <= 1e-6)
        throw VisibilityError("synthesize_annotations: joint line behind camera");
      Vec2 v1 = cam.project_camera_point(c1);
      Vec2 v2 = cam.project_camera_point(c2);

      // In-plane tilt about the segment midpoint plus a pixel shift.
      const double mag =
          noise.tilt_min_deg + (noise.tilt_max_deg - noise.tilt_min_deg) * unit(rng);
      const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
      const double ang = sign * mag * M_PI / 180.0;
      const Vec2 mid = 0.5 * (v1 + v2);
      Mat2 rot;
      rot << std::cos(ang), -std::sin(ang), std::sin(ang), std::cos(ang);
      const Vec2 shift(noise.shift_px * (2.0 * unit(rng) - 1.0),
                       noise.shift_px * (2.0 * unit(rng) - 1.0));
      v1 = mid + rot * (v1 - mid) + shift;
      v2 = mid + rot * (v2 - mid) + shift;
      if (!inside_image(v1, cam) || !inside_image(v2, cam))
        throw VisibilityError("synthesize_annotations: perturbed joint line left the image");
      part.v1 = v1;
      part.v2 = v2;
    } else {
      part.v1 = 0.5 * (lo + hi) + Vec2(-2, 0);
      part.v2 = 0.5 * (lo + hi) + Vec2(2, 0);
    }

    Vec2 bmin = lo, bmax = hi;
    if (noise.bbox_px > 0) {
      for (int c = 0; c < 2; ++c) {
        bmin[c] += noise.bbox_px * (2.0 * unit(rng) - 1.0);
        bmax[c] += noise.bbox_px * (2.0 * unit(rng) - 1.0);
        if (bmin[c] > bmax[c]) std::swap(bmin[c], bmax[c]);
      }
    }
    if (!inside_image(bmin, cam) || !inside_image(bmax, cam))
      throw VisibilityError("synthesize_annotations: part bbox left the image");
    if (!(bmin.x() < bmax.x()) || !(bmin.y() < bmax.y()))
      throw DegenerateError("synthesize_annotations: collapsed bbox");
    part.bbox_min = bmin;
    part.bbox_max = bmax;
    const Vec2 hc = 0.5 * (bmin + bmax);
    part.handle_bbox = {{hc - Vec2(4, 4)}, {hc + Vec2(4, 4)}};

    ann.parts.push_back(part);
  }
  return ann;
}

}  // namespace artic
