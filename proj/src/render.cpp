#include "artic/render.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "artic/common.hpp"

namespace artic {

namespace detail {

bool project_record(int gaussian_index, const Vec3& mean_w, const Mat3& cov_w,
                    const Vec3& color, double opacity, const Camera& cam,
                    const RenderConfig& cfg, SplatRecord& out) {
  const Vec3 pc = cam.world_to_camera(mean_w);
  if (pc.z() <= cfg.near_plane) return false;

  const double z = pc.z();
  Eigen::Matrix<double, 2, 3> jac;
  jac << cam.fx / z, 0.0, -cam.fx * pc.x() / (z * z),
         0.0, cam.fy / z, -cam.fy * pc.y() / (z * z);
  const Mat3 rot = cam.extrinsics.rotation_block();
  const Mat3 cov_cam = rot * cov_w * rot.transpose();
  Mat2 cov2d = jac * cov_cam * jac.transpose();
  cov2d(0, 0) += kLowPass;
  cov2d(1, 1) += kLowPass;

  out.gaussian = gaussian_index;
  out.p_cam = pc;
  out.mean2d = cam.project_camera_point(pc);
  out.cov2d = cov2d;
  const double det = cov2d(0, 0) * cov2d(1, 1) - cov2d(0, 1) * cov2d(1, 0);
  out.inv_cov << cov2d(1, 1) / det, -cov2d(0, 1) / det,
                 -cov2d(1, 0) / det, cov2d(0, 0) / det;
  out.view_depth = z;
  out.color = color;
  out.opacity = opacity;

  // Footprint wide enough that every contribution the alpha_min clip keeps
  // lies inside it; beyond this radius alpha <= alpha_min by the eigenvalue
  // bound, so skipping the pixel equals evaluating and clipping it.
  if (opacity <= cfg.alpha_min) {
    out.radius_px = 0.0;  // clips everywhere; rasterization drops the splat
  } else {
    const double cut2 = std::max(cfg.cutoff_sigma * cfg.cutoff_sigma,
                                 2.0 * std::log(opacity / cfg.alpha_min));
    out.radius_px = std::sqrt(cut2 * max_eigenvalue_2x2(cov2d)) + 1.0;
  }
  return true;
}

PixelBins build_bins(const std::vector<SplatRecord>& records, int width, int height) {
  const size_t n_px = static_cast<size_t>(width) * height;
  PixelBins bins;
  bins.offsets.assign(n_px + 1, 0);

  // Depth-sorted splat order; per-pixel entries inherit it during the fill.
  std::vector<int> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (records[a].view_depth != records[b].view_depth)
      return records[a].view_depth < records[b].view_depth;
    return records[a].gaussian < records[b].gaussian;
  });

  auto pixel_rect = [&](const SplatRecord& s, int& x0, int& x1, int& y0, int& y1) {
    x0 = std::max(0, static_cast<int>(std::ceil(s.mean2d.x() - s.radius_px)));
    x1 = std::min(width - 1, static_cast<int>(std::floor(s.mean2d.x() + s.radius_px)));
    y0 = std::max(0, static_cast<int>(std::ceil(s.mean2d.y() - s.radius_px)));
    y1 = std::min(height - 1, static_cast<int>(std::floor(s.mean2d.y() + s.radius_px)));
  };

  for (const auto& s : records) {
    int x0, x1, y0, y1;
    pixel_rect(s, x0, x1, y0, y1);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) ++bins.offsets[static_cast<size_t>(y) * width + x + 1];
  }
  for (size_t i = 1; i < bins.offsets.size(); ++i) bins.offsets[i] += bins.offsets[i - 1];

  bins.entries.resize(bins.offsets.back());
  std::vector<int> cursor(bins.offsets.begin(), bins.offsets.end() - 1);
  for (int idx : order) {
    const auto& s = records[idx];
    int x0, x1, y0, y1;
    pixel_rect(s, x0, x1, y0, y1);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const size_t p = static_cast<size_t>(y) * width + x;
        bins.entries[cursor[p]++] = idx;
      }
  }
  return bins;
}

Image composite_image(const std::vector<SplatRecord>& records, const PixelBins& bins,
                      const RenderConfig& cfg, int width, int height) {
  Image im = Image::zeros(width, height);
  parallel_chunks(height, 0, [&](int y_begin, int y_end) {
    for (int y = y_begin; y < y_end; ++y) {
      for (int x = 0; x < width; ++x) {
        const size_t p = static_cast<size_t>(y) * width + x;
        double t = 1.0, acc_a = 0.0, acc_d = 0.0;
        Vec3 rgb = Vec3::Zero();
        for (int e = bins.offsets[p]; e < bins.offsets[p + 1]; ++e) {
          if (t < cfg.transmittance_stop) break;
          const SplatRecord& s = records[bins.entries[e]];
          const Vec2 d(x - s.mean2d.x(), y - s.mean2d.y());
          const double q = d.dot(s.inv_cov * d);
          const double a = s.opacity * std::exp(-0.5 * q);
          if (a < cfg.alpha_min) continue;
          const double w = a * t;
          rgb += w * s.color;
          acc_a += w;
          acc_d += w * s.view_depth;
          t *= (1.0 - a);
        }
        rgb += t * cfg.background;
        im.r[p] = rgb.x();
        im.g[p] = rgb.y();
        im.b[p] = rgb.z();
        im.alpha[p] = std::min(acc_a, 1.0);
        im.depth[p] = acc_d / (acc_a + kDepthNormEps);
      }
    }
  });
  return im;
}

}  // namespace detail

Projected2D project_gaussian(const GaussianSphere& g, const Camera& cam,
                             const RenderConfig& cfg) {
  cfg.check();
  cam.check();
  Projected2D out;
  detail::SplatRecord rec;
  if (!detail::project_record(0, g.mean, g.covariance(), g.color, g.opacity, cam, cfg,
                              rec)) {
    out.culled = true;
    out.view_depth = cam.world_to_camera(g.mean).z();
    return out;
  }
  out.mean2d = rec.mean2d;
  out.cov2d = rec.cov2d;
  out.view_depth = rec.view_depth;
  out.color = g.color;
  out.opacity = g.opacity;
  out.culled = false;
  return out;
}

std::pair<Vec3, double> composite_pixel(const std::vector<ColorAlpha>& ordered,
                                        const RenderConfig& cfg) {
  double t = 1.0, acc = 0.0;
  Vec3 rgb = Vec3::Zero();
  for (const auto& c : ordered) {
    if (t < cfg.transmittance_stop) break;
    const double w = c.alpha * t;
    rgb += w * c.color;
    acc += w;
    t *= (1.0 - c.alpha);
  }
  rgb += t * cfg.background;
  return {rgb, std::min(acc, 1.0)};
}

Image render(const Scene& scene, const Camera& cam, const RenderConfig& cfg) {
  cfg.check();
  cam.check();
  if (cam.width <= 0 || cam.height <= 0)
    throw ConfigError("render: camera resolution must be positive");

  std::vector<detail::SplatRecord> records;
  records.reserve(scene.gaussians.size());
  detail::SplatRecord rec;
  for (size_t i = 0; i < scene.gaussians.size(); ++i) {
    const auto& g = scene.gaussians[i];
    if (detail::project_record(static_cast<int>(i), g.mean, g.covariance(), g.color,
                               g.opacity, cam, cfg, rec))
      records.push_back(rec);
  }
  const detail::PixelBins bins = detail::build_bins(records, cam.width, cam.height);
  return detail::composite_image(records, bins, cfg, cam.width, cam.height);
}

Image render_articulated(const Scene& scene, const std::vector<JointSpec>& joints,
                         const Pose& pose, const Camera& cam, const RenderConfig& cfg) {
  return render(deform_scene(scene, joints, pose), cam, cfg);
}

}  // namespace artic
