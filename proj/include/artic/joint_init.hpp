#pragma once

#include <optional>
#include <string>
#include <vector>

#include "artic/scene.hpp"

namespace artic {

/// One movable part as reported by the annotation source: a bounding box,
/// the joint type, and a pixel segment on (or near) the joint line.
struct PartAnnotation {
  Vec2 bbox_min, bbox_max;  // pixels, ordered (x1<x2, y1<y2)
  JointType joint_type = JointType::Revolute;
  Vec2 v1, v2;  // joint-line segment endpoints in pixels
  std::optional<std::pair<Vec2, Vec2>> handle_bbox;

  void check(int width, int height) const {
    if (!(bbox_min.x() < bbox_max.x()) || !(bbox_min.y() < bbox_max.y()))
      throw InvalidInputError("PartAnnotation: bbox must be ordered");
    auto inside = [&](const Vec2& p) {
      return p.x() >= 0 && p.y() >= 0 && p.x() <= width - 1 && p.y() <= height - 1;
    };
    if (!inside(bbox_min) || !inside(bbox_max) || !inside(v1) || !inside(v2))
      throw InvalidInputError("PartAnnotation: coordinates outside image bounds");
  }
};

struct AnnotationSet {
  std::string image_ref, depth_ref, camera_ref;
  std::vector<PartAnnotation> parts;
  std::string noise_meta;  // provenance of synthetic noise, free-form
};

struct JointInitConfig {
  int n_samples = 32;
  // Eigenvalue filter relative to the largest eigenvalue; components outside
  // [tau_lo, tau_hi] * lambda_1 are discarded. Defaults keep the principal
  // component unconditionally.
  double tau_lo = 0.01;
  double tau_hi = std::numeric_limits<double>::infinity();
};

/// Pinhole unprojection of a pixel through the depth map to a world point.
Vec3 unproject(const Vec2& pixel, const Image& depth_map, const Camera& cam);

/// Revolute joint line from depth samples along the annotated segment:
/// PCA principal direction as the axis, mean of the samples as the origin.
std::pair<Vec3, Vec3> estimate_revolute(const Vec2& p1_px, const Vec2& p2_px,
                                        const Image& depth_map, const Camera& cam,
                                        const JointInitConfig& cfg = {});

/// Prismatic axis as the cross product of directions fitted along the bbox
/// mid-lines, sign fixed toward the camera.
Vec3 estimate_prismatic(const Vec2& bbox_min, const Vec2& bbox_max,
                        const Image& depth_map, const Camera& cam,
                        const JointInitConfig& cfg = {});

std::vector<JointSpec> init_joints(const AnnotationSet& ann, const Image& depth_map,
                                   const Camera& cam, const JointInitConfig& cfg = {});

/// Noise model for synthetic annotations. Revolute: the projected joint
/// segment is rotated in the image plane by an angle of magnitude uniform in
/// [tilt_min_deg, tilt_max_deg] (random sign) and shifted; prismatic: bbox
/// corners are displaced by uniform pixel noise.
struct AnnotationNoise {
  double tilt_min_deg = 14.0;
  double tilt_max_deg = 30.0;
  double shift_px = 3.0;
  double bbox_px = 10.0;
  uint64_t seed = 0;

  static AnnotationNoise none() { return {0.0, 0.0, 0.0, 0.0, 0}; }
};

/// Stand-in for the upstream detector: projects ground-truth joint lines and
/// part extents into the camera and perturbs them per the noise model.
AnnotationSet synthesize_annotations(const Scene& gt_scene,
                                     const std::vector<JointSpec>& gt_joints,
                                     const Camera& cam, const AnnotationNoise& noise);

}  // namespace artic
