#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "artic/joint_init.hpp"
#include "artic/kinematics.hpp"
#include "artic/scene.hpp"

namespace artic::io {

namespace fs = std::filesystem;

// Scene JSON: {part_count, gaussians:[{mean, rotation(wxyz), scale, opacity,
// color, skin_logits}]}
void save_scene(const fs::path& path, const Scene& scene);
Scene load_scene(const fs::path& path);

// Joints JSON: {joints:[{axis, origin, type}]}
void save_joints(const fs::path& path, const std::vector<JointSpec>& joints);
std::vector<JointSpec> load_joints(const fs::path& path);

// Camera JSON: {fx, fy, cx, cy, width, height, extrinsics: 16 row-major}
void save_camera(const fs::path& path, const Camera& cam);
Camera load_camera(const fs::path& path);
void save_rig(const fs::path& path, const std::vector<Camera>& rig);
std::vector<Camera> load_rig(const fs::path& path);

// Robot model JSON: {links:[{beta, a, d, theta, kind, gaussian_indices}]}
void save_robot(const fs::path& path, const RobotModel& model);
RobotModel load_robot(const fs::path& path);

// Annotation JSON: {image, depth, camera, parts:[{bbox, joint_type, vertices,
// handle_bbox?}], noise}
void save_annotations(const fs::path& path, const AnnotationSet& ann);
AnnotationSet load_annotations(const fs::path& path);

// Raw float image: 16-byte header {magic 'GSIM', width u32, height u32,
// channels u32}, then float32 little-endian, row-major, channel-interleaved.
void write_gsim(const fs::path& path, int width, int height,
                const std::vector<const Eigen::ArrayXd*>& channels);
struct GsimData {
  int width = 0, height = 0, channels = 0;
  std::vector<Eigen::ArrayXd> data;  // planar
};
GsimData read_gsim(const fs::path& path);

void write_gsim_rgb(const fs::path& path, const Image& im);
void write_gsim_rgbd(const fs::path& path, const Image& im);
void write_gsim_depth(const fs::path& path, const Image& im);
/// Accepts 1 (depth), 3 (rgb) or 4+ (rgbd) channel files; missing channels
/// are zero-filled.
Image read_gsim_image(const fs::path& path);

// 8-bit binary PPM for RGB; 16-bit binary PGM in millimeters for depth.
void write_ppm(const fs::path& path, const Image& im);
void write_pgm16_depth(const fs::path& path, const Image& im);

// Observation sequence directory: manifest.json + per-frame rgbd .gsim files.
// Ground-truth thetas go to a separate sidecar (gt_thetas.json) that
// load_sequence does NOT read.
void save_sequence(const fs::path& dir, const ObservationSequence& seq,
                   double achieved_delta, bool grasp_broken);
ObservationSequence load_sequence(const fs::path& dir);
std::vector<VecX> load_gt_thetas(const fs::path& dir);
struct SequenceSummary {
  double achieved_delta = 0;
  bool grasp_broken = false;
};
SequenceSummary load_sequence_summary(const fs::path& dir);

}  // namespace artic::io
