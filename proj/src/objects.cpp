#include "artic/objects.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace artic {

ObjectTemplate object_template_from_string(const std::string& s) {
  if (s == "door") return ObjectTemplate::Door;
  if (s == "drawer") return ObjectTemplate::Drawer;
  if (s == "cabinet2part") return ObjectTemplate::Cabinet2Part;
  if (s == "microwave") return ObjectTemplate::Microwave;
  throw ConfigError("unknown object template: " + s);
}

std::string to_string(ObjectTemplate t) {
  switch (t) {
    case ObjectTemplate::Door: return "door";
    case ObjectTemplate::Drawer: return "drawer";
    case ObjectTemplate::Cabinet2Part: return "cabinet2part";
    case ObjectTemplate::Microwave: return "microwave";
  }
  return "?";
}

namespace {

constexpr double kOneHotLogit = 30.0;

struct Builder {
  Scene scene;
  std::mt19937_64 rng;
  int part_count;

  Builder(uint64_t seed, int k) : rng(seed), part_count(k) { scene.part_count = k; }

  double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(rng);
  }

  Vec3 random_color() {
    return {uniform(0.15, 0.9), uniform(0.15, 0.9), uniform(0.15, 0.9)};
  }

  // Rectangular slab of splats: grid over (center, half-extent eu/ev along
  // unit u/v), flattened along the normal. Mild deterministic color texture
  // so photometric gradients exist away from silhouette edges.
  void add_panel(int part, const Vec3& center, const Vec3& u, double half_u,
                 const Vec3& v, double half_v, const Vec3& normal, double thickness,
                 const Vec3& base_color, int target_count) {
    const double aspect = half_u / half_v;
    int nu = std::max(2, static_cast<int>(std::lround(std::sqrt(target_count * aspect))));
    int nv = std::max(2, static_cast<int>(std::lround(static_cast<double>(target_count) / nu)));
    const double su = half_u / nu, sv = half_v / nv;

    Mat3 rot;
    rot.col(0) = u;
    rot.col(1) = v;
    rot.col(2) = normal;
    const Quat q(rot);

    VecX logits = VecX::Zero(part_count + 1);
    logits[part] = kOneHotLogit;

    for (int i = 0; i < nu; ++i) {
      for (int jj = 0; jj < nv; ++jj) {
        GaussianSphere g;
        const double cu = -half_u + (2.0 * i + 1.0) * su;
        const double cv = -half_v + (2.0 * jj + 1.0) * sv;
        g.mean = center + cu * u + cv * v;
        g.rotation = q.normalized();
        g.scale = Vec3(su * 0.85, sv * 0.85, thickness);
        g.opacity = 0.92;
        const double tex = 0.12 * std::sin(37.0 * cu + 3.0 * jj) +
                           0.10 * std::sin(53.0 * cv + 2.0 * i);
        g.color = (base_color.array() + tex).cwiseMax(0.02).cwiseMin(0.98);
        g.skin_logits = logits;
        scene.gaussians.push_back(g);
      }
    }
  }
};

// Open-front body: back panel plus four rim strips around the opening. The
// rim front plane sits `rim_z` behind the panel plane (z=0).
void add_body(Builder& b, double w, double h, double depth, double rim,
              double rim_z, const Vec3& color, int count) {
  const Vec3 ex = Vec3::UnitX(), ey = Vec3::UnitY(), ez = Vec3::UnitZ();
  // back
  b.add_panel(0, {0, 0, -depth}, ex, w / 2, ey, h / 2, ez, 0.006, color * 0.8,
              count / 2);
  // rims (top, bottom, left, right) at z = -rim_z
  b.add_panel(0, {0, h / 2 - rim / 2, -rim_z}, ex, w / 2, ey, rim / 2, ez, 0.006,
              color, count / 8);
  b.add_panel(0, {0, -h / 2 + rim / 2, -rim_z}, ex, w / 2, ey, rim / 2, ez, 0.006,
              color, count / 8);
  b.add_panel(0, {-w / 2 + rim / 2, 0, -rim_z}, ex, rim / 2, ey, h / 2 - rim, ez,
              0.006, color, count / 8);
  b.add_panel(0, {w / 2 - rim / 2, 0, -rim_z}, ex, rim / 2, ey, h / 2 - rim, ez,
              0.006, color, count / 8);
}

}  // namespace

GeneratedObject generate_object(ObjectTemplate tmpl, uint64_t seed,
                                const GenerateOptions& opts) {
  const int n = opts.gaussians_per_part;
  GeneratedObject out;

  switch (tmpl) {
    case ObjectTemplate::Door: {
      Builder b(seed * 1000003 + 11, 1);
      const double w = b.uniform(0.55, 0.75), h = b.uniform(0.7, 0.95);
      const Vec3 body_color = b.random_color(), door_color = b.random_color();
      add_body(b, w, h, 0.3, 0.05, 0.012, body_color, n);
      // Door panel fills the opening, hinged on its left edge.
      const double dw = w / 2 - 0.05, dh = h / 2 - 0.05;
      b.add_panel(1, {0, 0, 0}, Vec3::UnitX(), dw, Vec3::UnitY(), dh, Vec3::UnitZ(),
                  0.005, door_color, n);
      JointSpec hinge;
      hinge.type = JointType::Revolute;
      hinge.axis = Vec3::UnitY();
      hinge.origin = Vec3(-dw, 0.0, 0.0);
      out.joints = {hinge};
      out.grasp_points = {Vec3(dw - 0.03, 0.0, 0.01)};
      out.target_deltas = {-b.uniform(0.7, 0.95)};
      out.scene = std::move(b.scene);
      break;
    }
    case ObjectTemplate::Drawer: {
      Builder b(seed * 1000003 + 23, 1);
      const double w = b.uniform(0.5, 0.7), h = b.uniform(0.55, 0.8);
      const Vec3 body_color = b.random_color(), face_color = b.random_color();
      // Closed face frame behind the drawer front, plus a back panel.
      b.add_panel(0, {0, 0, -0.35}, Vec3::UnitX(), w / 2, Vec3::UnitY(), h / 2,
                  Vec3::UnitZ(), 0.006, body_color * 0.8, n / 3);
      b.add_panel(0, {0, 0, 0}, Vec3::UnitX(), w / 2, Vec3::UnitY(), h / 2,
                  Vec3::UnitZ(), 0.006, body_color, n);
      // Drawer front protrudes from the body front plane.
      const double fw = w / 2 - 0.07, fh = h / 6.0;
      const double protrude = 0.04;
      const Vec3 face_center(0, 0, protrude);
      b.add_panel(1, face_center, Vec3::UnitX(), fw, Vec3::UnitY(), fh, Vec3::UnitZ(),
                  0.005, face_color, n);
      JointSpec slide;
      slide.type = JointType::Prismatic;
      slide.axis = Vec3::UnitZ();
      slide.origin = face_center;
      out.joints = {slide};
      out.grasp_points = {face_center + Vec3(0, 0, 0.01)};
      out.target_deltas = {b.uniform(0.2, 0.3)};
      out.scene = std::move(b.scene);
      break;
    }
    case ObjectTemplate::Cabinet2Part: {
      Builder b(seed * 1000003 + 47, 2);
      const double w = b.uniform(0.8, 1.0), h = b.uniform(0.6, 0.8);
      const Vec3 body_color = b.random_color();
      const Vec3 door_color = b.random_color(), face_color = b.random_color();
      add_body(b, w, h, 0.32, 0.05, 0.012, body_color, n);
      // Closed face frame on the drawer half so off-face depth samples land
      // on the frame, not the distant back panel.
      b.add_panel(0, {w / 4, 0, 0}, Vec3::UnitX(), w / 4 - 0.02, Vec3::UnitY(),
                  h / 2 - 0.02, Vec3::UnitZ(), 0.006, body_color, n / 2);
      // Left half: revolute door. Right half: protruding drawer face.
      const double dw = w / 4 - 0.05, dh = h / 2 - 0.05;
      const Vec3 door_center(-w / 4, 0, 0);
      b.add_panel(1, door_center, Vec3::UnitX(), dw, Vec3::UnitY(), dh, Vec3::UnitZ(),
                  0.005, door_color, n);
      JointSpec hinge;
      hinge.type = JointType::Revolute;
      hinge.axis = Vec3::UnitY();
      hinge.origin = door_center + Vec3(-dw, 0, 0);

      const double fw = w / 4 - 0.06, fh = h / 5.0;
      const Vec3 face_center(w / 4, 0, 0.04);
      b.add_panel(2, face_center, Vec3::UnitX(), fw, Vec3::UnitY(), fh, Vec3::UnitZ(),
                  0.005, face_color, n);
      JointSpec slide;
      slide.type = JointType::Prismatic;
      slide.axis = Vec3::UnitZ();
      slide.origin = face_center;

      out.joints = {hinge, slide};
      out.grasp_points = {door_center + Vec3(dw - 0.03, 0, 0.01),
                          face_center + Vec3(0, 0, 0.01)};
      out.target_deltas = {-b.uniform(0.7, 0.9), b.uniform(0.18, 0.28)};
      out.scene = std::move(b.scene);
      break;
    }
    case ObjectTemplate::Microwave: {
      Builder b(seed * 1000003 + 71, 1);
      const double w = b.uniform(0.8, 0.95), h = b.uniform(0.45, 0.55);
      const Vec3 body_color = b.random_color(), door_color = b.random_color();
      add_body(b, w, h, 0.3, 0.05, 0.012, body_color, n);
      // Door covers the left 70%, control strip on the right is static.
      const double dw = 0.35 * w - 0.05, dh = h / 2 - 0.05;
      const Vec3 door_center(-0.15 * w, 0, 0);
      b.add_panel(1, door_center, Vec3::UnitX(), dw, Vec3::UnitY(), dh, Vec3::UnitZ(),
                  0.005, door_color, n);
      b.add_panel(0, {0.35 * w, 0, 0}, Vec3::UnitX(), 0.12 * w, Vec3::UnitY(), dh,
                  Vec3::UnitZ(), 0.005, body_color * 1.15, n / 3);
      JointSpec hinge;
      hinge.type = JointType::Revolute;
      hinge.axis = Vec3::UnitY();
      hinge.origin = door_center + Vec3(-dw, 0, 0);
      out.joints = {hinge};
      out.grasp_points = {door_center + Vec3(dw - 0.03, 0, 0.01)};
      out.target_deltas = {-b.uniform(0.7, 0.9)};
      out.scene = std::move(b.scene);
      break;
    }
  }
  out.scene.check();
  for (auto& j : out.joints) j.check();
  return out;
}

std::vector<Camera> make_camera_rig(int count, double radius, int resolution,
                                    const Vec3& center) {
  if (count < 1 || resolution < 8)
    throw ConfigError("make_camera_rig: need >= 1 camera and resolution >= 8");
  std::vector<Camera> rig;
  const double span = M_PI / 2.0;  // quarter circle
  std::vector<double> azimuths;
  for (int i = 0; i < count; ++i) {
    const double s = count == 1 ? 0.5 : static_cast<double>(i) / (count - 1);
    azimuths.push_back(-span / 2 + span * s);
  }
  // Most frontal camera first: downstream annotation uses rig[0].
  std::stable_sort(azimuths.begin(), azimuths.end(),
                   [](double a, double b) { return std::abs(a) < std::abs(b); });
  for (int i = 0; i < count; ++i) {
    const double az = azimuths[i];
    const double el = (i % 2 == 0 ? 0.12 : -0.08);
    const Vec3 eye = center + radius * Vec3(std::sin(az) * std::cos(el),
                                            std::sin(el), std::cos(az) * std::cos(el));
    const Vec3 fwd = (center - eye).normalized();
    Vec3 down = -(Vec3::UnitY() - Vec3::UnitY().dot(fwd) * fwd);
    down.normalize();
    const Vec3 right = down.cross(fwd);
    Mat3 rot;
    rot.row(0) = right;
    rot.row(1) = down;
    rot.row(2) = fwd;
    Camera cam;
    cam.width = cam.height = resolution;
    cam.fx = cam.fy = 1.2 * resolution;
    cam.cx = cam.cy = resolution / 2.0;
    cam.extrinsics = SE3::from_rt(rot, -rot * eye);
    rig.push_back(cam);
  }
  return rig;
}

}  // namespace artic
