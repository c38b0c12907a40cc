#include "artic/io.hpp"

#include <fstream>

#include <json.hpp>

namespace artic::io {

using nlohmann::ordered_json;

namespace {

ordered_json parse_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError("parse error in " + path.string() + ": " + e.what());
  }
  return j;
}

void write_file(const fs::path& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed for " + path.string());
}

ordered_json vec_to_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
ordered_json vec2_to_json(const Vec2& v) { return {v.x(), v.y()}; }

Vec3 json_to_vec3(const ordered_json& j) {
  if (!j.is_array() || j.size() != 3) throw IoError("expected 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}
Vec2 json_to_vec2(const ordered_json& j) {
  if (!j.is_array() || j.size() != 2) throw IoError("expected 2-vector");
  return {j[0].get<double>(), j[1].get<double>()};
}

JointType joint_type_from_string(const std::string& s) {
  if (s == "revolute") return JointType::Revolute;
  if (s == "prismatic") return JointType::Prismatic;
  throw IoError("unknown joint type: " + s);
}

}  // namespace

void save_scene(const fs::path& path, const Scene& scene) {
  ordered_json j;
  j["part_count"] = scene.part_count;
  j["gaussians"] = ordered_json::array();
  for (const auto& g : scene.gaussians) {
    ordered_json gj;
    gj["mean"] = vec_to_json(g.mean);
    gj["rotation"] = {g.rotation.w(), g.rotation.x(), g.rotation.y(), g.rotation.z()};
    gj["scale"] = vec_to_json(g.scale);
    gj["opacity"] = g.opacity;
    gj["color"] = vec_to_json(g.color);
    gj["skin_logits"] = std::vector<double>(
        g.skin_logits.data(), g.skin_logits.data() + g.skin_logits.size());
    j["gaussians"].push_back(std::move(gj));
  }
  write_file(path, j);
}

Scene load_scene(const fs::path& path) {
  const ordered_json j = parse_file(path);
  Scene scene;
  scene.part_count = j.at("part_count").get<int>();
  for (const auto& gj : j.at("gaussians")) {
    GaussianSphere g;
    g.mean = json_to_vec3(gj.at("mean"));
    const auto& r = gj.at("rotation");
    g.rotation = Quat(r[0].get<double>(), r[1].get<double>(), r[2].get<double>(),
                      r[3].get<double>());
    g.scale = json_to_vec3(gj.at("scale"));
    g.opacity = gj.at("opacity").get<double>();
    g.color = json_to_vec3(gj.at("color"));
    const auto logits = gj.at("skin_logits").get<std::vector<double>>();
    g.skin_logits = Eigen::Map<const VecX>(logits.data(), logits.size());
    scene.gaussians.push_back(std::move(g));
  }
  scene.check();
  return scene;
}

void save_joints(const fs::path& path, const std::vector<JointSpec>& joints) {
  ordered_json j;
  j["joints"] = ordered_json::array();
  for (const auto& spec : joints) {
    ordered_json sj;
    sj["axis"] = vec_to_json(spec.axis);
    sj["origin"] = vec_to_json(spec.origin);
    sj["type"] = to_string(spec.type);
    j["joints"].push_back(std::move(sj));
  }
  write_file(path, j);
}

std::vector<JointSpec> load_joints(const fs::path& path) {
  const ordered_json j = parse_file(path);
  std::vector<JointSpec> joints;
  for (const auto& sj : j.at("joints")) {
    JointSpec spec;
    spec.axis = json_to_vec3(sj.at("axis"));
    spec.origin = json_to_vec3(sj.at("origin"));
    spec.type = joint_type_from_string(sj.at("type").get<std::string>());
    spec.check();
    joints.push_back(spec);
  }
  return joints;
}

namespace {

ordered_json camera_to_json(const Camera& cam) {
  ordered_json j;
  j["fx"] = cam.fx;
  j["fy"] = cam.fy;
  j["cx"] = cam.cx;
  j["cy"] = cam.cy;
  j["width"] = cam.width;
  j["height"] = cam.height;
  std::vector<double> ext;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) ext.push_back(cam.extrinsics.matrix()(r, c));
  j["extrinsics"] = ext;
  return j;
}

Camera camera_from_json(const ordered_json& j) {
  Camera cam;
  cam.fx = j.at("fx").get<double>();
  cam.fy = j.at("fy").get<double>();
  cam.cx = j.at("cx").get<double>();
  cam.cy = j.at("cy").get<double>();
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  const auto ext = j.at("extrinsics").get<std::vector<double>>();
  if (ext.size() != 16) throw IoError("camera extrinsics must have 16 entries");
  Mat4 m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = ext[r * 4 + c];
  cam.extrinsics = SE3::from_matrix(m);
  cam.check();
  return cam;
}

}  // namespace

void save_camera(const fs::path& path, const Camera& cam) {
  write_file(path, camera_to_json(cam));
}

Camera load_camera(const fs::path& path) { return camera_from_json(parse_file(path)); }

void save_rig(const fs::path& path, const std::vector<Camera>& rig) {
  ordered_json j;
  j["cameras"] = ordered_json::array();
  for (const auto& c : rig) j["cameras"].push_back(camera_to_json(c));
  write_file(path, j);
}

std::vector<Camera> load_rig(const fs::path& path) {
  const ordered_json j = parse_file(path);
  std::vector<Camera> rig;
  for (const auto& cj : j.at("cameras")) rig.push_back(camera_from_json(cj));
  return rig;
}

void save_robot(const fs::path& path, const RobotModel& model) {
  ordered_json j;
  j["links"] = ordered_json::array();
  for (const auto& link : model.links) {
    ordered_json lj;
    lj["beta"] = link.mdh.beta;
    lj["a"] = link.mdh.a;
    lj["d"] = link.mdh.d;
    lj["theta"] = link.mdh.theta;
    lj["kind"] = link.kind == MDHJointKind::Revolute ? "revolute" : "prismatic";
    lj["gaussian_indices"] = link.gaussian_indices;
    j["links"].push_back(std::move(lj));
  }
  write_file(path, j);
}

RobotModel load_robot(const fs::path& path) {
  const ordered_json j = parse_file(path);
  RobotModel model;
  for (const auto& lj : j.at("links")) {
    RobotLink link;
    link.mdh.beta = lj.at("beta").get<double>();
    link.mdh.a = lj.at("a").get<double>();
    link.mdh.d = lj.at("d").get<double>();
    link.mdh.theta = lj.at("theta").get<double>();
    const auto kind = lj.at("kind").get<std::string>();
    if (kind == "revolute")
      link.kind = MDHJointKind::Revolute;
    else if (kind == "prismatic")
      link.kind = MDHJointKind::Prismatic;
    else
      throw IoError("unknown MDH joint kind: " + kind);
    link.gaussian_indices = lj.at("gaussian_indices").get<std::vector<int>>();
    model.links.push_back(std::move(link));
  }
  return model;
}

void save_annotations(const fs::path& path, const AnnotationSet& ann) {
  ordered_json j;
  j["image"] = ann.image_ref;
  j["depth"] = ann.depth_ref;
  j["camera"] = ann.camera_ref;
  j["parts"] = ordered_json::array();
  for (const auto& p : ann.parts) {
    ordered_json pj;
    pj["bbox"] = {vec2_to_json(p.bbox_min), vec2_to_json(p.bbox_max)};
    pj["joint_type"] = to_string(p.joint_type);
    pj["vertices"] = {p.v1.x(), p.v1.y(), p.v2.x(), p.v2.y()};
    if (p.handle_bbox)
      pj["handle_bbox"] = {vec2_to_json(p.handle_bbox->first),
                           vec2_to_json(p.handle_bbox->second)};
    j["parts"].push_back(std::move(pj));
  }
  j["noise"] = ann.noise_meta;
  write_file(path, j);
}

AnnotationSet load_annotations(const fs::path& path) {
  const ordered_json j = parse_file(path);
  AnnotationSet ann;
  ann.image_ref = j.value("image", "");
  ann.depth_ref = j.value("depth", "");
  ann.camera_ref = j.value("camera", "");
  ann.noise_meta = j.value("noise", "");
  for (const auto& pj : j.at("parts")) {
    PartAnnotation p;
    p.bbox_min = json_to_vec2(pj.at("bbox")[0]);
    p.bbox_max = json_to_vec2(pj.at("bbox")[1]);
    p.joint_type = joint_type_from_string(pj.at("joint_type").get<std::string>());
    const auto& v = pj.at("vertices");
    if (v.size() != 4) throw IoError("vertices must have 4 entries");
    p.v1 = {v[0].get<double>(), v[1].get<double>()};
    p.v2 = {v[2].get<double>(), v[3].get<double>()};
    if (pj.contains("handle_bbox"))
      p.handle_bbox = {json_to_vec2(pj.at("handle_bbox")[0]),
                       json_to_vec2(pj.at("handle_bbox")[1])};
    ann.parts.push_back(p);
  }
  return ann;
}

// ---------------------------------------------------------------------------
// Binary image formats
// ---------------------------------------------------------------------------

void write_gsim(const fs::path& path, int width, int height,
                const std::vector<const Eigen::ArrayXd*>& channels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const char magic[4] = {'G', 'S', 'I', 'M'};
  out.write(magic, 4);
  const uint32_t wh[3] = {static_cast<uint32_t>(width), static_cast<uint32_t>(height),
                          static_cast<uint32_t>(channels.size())};
  out.write(reinterpret_cast<const char*>(wh), 12);
  const Eigen::Index n = static_cast<Eigen::Index>(width) * height;
  for (const auto* ch : channels)
    if (ch->size() != n) throw DimensionError("write_gsim: channel size mismatch");
  std::vector<float> row(channels.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (size_t c = 0; c < channels.size(); ++c)
      row[c] = static_cast<float>((*channels[c])[i]);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(sizeof(float) * row.size()));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

GsimData read_gsim(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4];
  uint32_t wh[3];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(wh), 12);
  if (!in || std::string(magic, 4) != "GSIM")
    throw IoError("not a GSIM file: " + path.string());
  GsimData g;
  g.width = static_cast<int>(wh[0]);
  g.height = static_cast<int>(wh[1]);
  g.channels = static_cast<int>(wh[2]);
  const Eigen::Index n = static_cast<Eigen::Index>(g.width) * g.height;
  g.data.assign(g.channels, Eigen::ArrayXd(n));
  std::vector<float> row(g.channels);
  for (Eigen::Index i = 0; i < n; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(sizeof(float) * row.size()));
    for (int c = 0; c < g.channels; ++c) g.data[c][i] = row[c];
  }
  if (!in) throw IoError("truncated GSIM file: " + path.string());
  return g;
}

void write_gsim_rgb(const fs::path& path, const Image& im) {
  write_gsim(path, im.width, im.height, {&im.r, &im.g, &im.b});
}
void write_gsim_rgbd(const fs::path& path, const Image& im) {
  write_gsim(path, im.width, im.height, {&im.r, &im.g, &im.b, &im.depth});
}
void write_gsim_depth(const fs::path& path, const Image& im) {
  write_gsim(path, im.width, im.height, {&im.depth});
}

Image read_gsim_image(const fs::path& path) {
  const GsimData g = read_gsim(path);
  Image im = Image::zeros(g.width, g.height);
  if (g.channels == 1) {
    im.depth = g.data[0];
  } else if (g.channels >= 3) {
    im.r = g.data[0];
    im.g = g.data[1];
    im.b = g.data[2];
    if (g.channels >= 4) im.depth = g.data[3];
    if (g.channels >= 5) im.alpha = g.data[4];
  } else {
    throw IoError("unsupported GSIM channel count: " + std::to_string(g.channels));
  }
  return im;
}

void write_ppm(const fs::path& path, const Image& im) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P6\n" << im.width << " " << im.height << "\n255\n";
  auto quant = [](double v) {
    return static_cast<unsigned char>(
        std::clamp(std::lround(v * 255.0), 0L, 255L));
  };
  for (Eigen::Index i = 0; i < im.r.size(); ++i) {
    const unsigned char px[3] = {quant(im.r[i]), quant(im.g[i]), quant(im.b[i])};
    out.write(reinterpret_cast<const char*>(px), 3);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_pgm16_depth(const fs::path& path, const Image& im) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << im.width << " " << im.height << "\n65535\n";
  for (Eigen::Index i = 0; i < im.depth.size(); ++i) {
    const long mm = std::clamp(std::lround(im.depth[i] * 1000.0), 0L, 65535L);
    const unsigned char bytes[2] = {static_cast<unsigned char>(mm >> 8),
                                    static_cast<unsigned char>(mm & 0xff)};
    out.write(reinterpret_cast<const char*>(bytes), 2);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Observation sequences
// ---------------------------------------------------------------------------

void save_sequence(const fs::path& dir, const ObservationSequence& seq,
                   double achieved_delta, bool grasp_broken) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  ordered_json manifest;
  manifest["cameras"] = ordered_json::array();
  for (const auto& c : seq.cameras) manifest["cameras"].push_back(camera_to_json(c));
  manifest["frames"] = ordered_json::array();
  ordered_json gt;
  gt["times"] = ordered_json::array();
  gt["thetas"] = ordered_json::array();
  for (size_t t = 0; t < seq.frames.size(); ++t) {
    const auto& f = seq.frames[t];
    ordered_json fj;
    fj["time"] = f.time;
    fj["images"] = ordered_json::array();
    for (size_t v = 0; v < f.images.size(); ++v) {
      char name[64];
      std::snprintf(name, sizeof(name), "frame%03zu_cam%02zu.gsim", t, v);
      write_gsim_rgbd(dir / name, f.images[v]);
      fj["images"].push_back(name);
    }
    manifest["frames"].push_back(std::move(fj));
    gt["times"].push_back(f.time);
    gt["thetas"].push_back(std::vector<double>(
        f.gt_theta.data(), f.gt_theta.data() + f.gt_theta.size()));
  }
  write_file(dir / "manifest.json", manifest);
  // Evaluation-only sidecar; the manifest deliberately does not reference it.
  write_file(dir / "gt_thetas.json", gt);
  ordered_json summary;
  summary["achieved_delta"] = achieved_delta;
  summary["grasp_broken"] = grasp_broken;
  write_file(dir / "summary.json", summary);
}

ObservationSequence load_sequence(const fs::path& dir) {
  const ordered_json manifest = parse_file(dir / "manifest.json");
  ObservationSequence seq;
  for (const auto& cj : manifest.at("cameras")) seq.cameras.push_back(camera_from_json(cj));
  for (const auto& fj : manifest.at("frames")) {
    ObservationFrame frame;
    frame.time = fj.at("time").get<double>();
    for (const auto& name : fj.at("images"))
      frame.images.push_back(read_gsim_image(dir / name.get<std::string>()));
    seq.frames.push_back(std::move(frame));
  }
  seq.check();
  return seq;
}

std::vector<VecX> load_gt_thetas(const fs::path& dir) {
  const ordered_json gt = parse_file(dir / "gt_thetas.json");
  std::vector<VecX> thetas;
  for (const auto& tj : gt.at("thetas")) {
    const auto vals = tj.get<std::vector<double>>();
    thetas.push_back(Eigen::Map<const VecX>(vals.data(), vals.size()));
  }
  return thetas;
}

SequenceSummary load_sequence_summary(const fs::path& dir) {
  const ordered_json j = parse_file(dir / "summary.json");
  return {j.at("achieved_delta").get<double>(), j.at("grasp_broken").get<bool>()};
}

}  // namespace artic::io
