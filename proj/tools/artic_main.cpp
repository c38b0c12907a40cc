#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "artic/experiment.hpp"
#include "artic/io.hpp"
#include "artic/metrics.hpp"
#include "artic/render.hpp"

namespace fs = std::filesystem;
using namespace artic;

namespace {

int run(int argc, char** argv) {
  CLI::App app{"Articulated-object gaussian splatting toolkit"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Build a procedural articulated object");
  std::string gen_template = "door", gen_out, gen_joints_out, gen_grasps_out,
              gen_rig_out;
  uint64_t gen_seed = 0;
  int gen_count = 300;
  gen->add_option("--template", gen_template, "door|drawer|cabinet2part|microwave");
  gen->add_option("--seed", gen_seed);
  gen->add_option("--out", gen_out, "scene JSON path")->required();
  gen->add_option("--joints-out", gen_joints_out, "default: <out>.joints.json");
  gen->add_option("--grasps-out", gen_grasps_out, "default: <out>.grasps.json");
  gen->add_option("--rig-out", gen_rig_out, "also write a 4-camera rig JSON");
  gen->add_option("--gaussians-per-part", gen_count);

  // render
  auto* ren = app.add_subcommand("render", "Render a scene to image files");
  std::string ren_scene, ren_cam, ren_out, ren_depth_out, ren_ppm, ren_pgm,
      ren_joints, ren_pose;
  ren->add_option("--scene", ren_scene)->required();
  ren->add_option("--camera", ren_cam)->required();
  ren->add_option("--out", ren_out, "RGB .gsim output")->required();
  ren->add_option("--depth-out", ren_depth_out, "depth .gsim output");
  ren->add_option("--ppm", ren_ppm, "8-bit PPM preview");
  ren->add_option("--pgm", ren_pgm, "16-bit millimeter PGM depth");
  ren->add_option("--joints", ren_joints, "joints JSON for articulated render");
  ren->add_option("--pose", ren_pose, "comma-separated pose values");

  // annotate
  auto* ann_cmd = app.add_subcommand(
      "annotate", "Synthesize part annotations from ground-truth joints");
  std::string ann_scene, ann_gt, ann_noise = "default", ann_out, ann_cam;
  uint64_t ann_seed = 0;
  ann_cmd->add_option("--scene", ann_scene)->required();
  ann_cmd->add_option("--gt", ann_gt, "ground-truth joints JSON")->required();
  ann_cmd->add_option("--noise", ann_noise, "default|none");
  ann_cmd->add_option("--seed", ann_seed);
  ann_cmd->add_option("--camera", ann_cam)->required();
  ann_cmd->add_option("--out", ann_out)->required();

  // init-joints
  auto* init = app.add_subcommand("init-joints",
                                  "Estimate joints from annotations and depth");
  std::string init_ann, init_depth, init_cam, init_out;
  init->add_option("--ann", init_ann)->required();
  init->add_option("--depth", init_depth, "1-channel .gsim depth map")->required();
  init->add_option("--camera", init_cam)->required();
  init->add_option("--out", init_out)->required();

  // simulate
  auto* sim_cmd = app.add_subcommand(
      "simulate", "Impedance-controlled manipulation of a ground-truth object");
  std::string sim_scene, sim_gt, sim_plan, sim_out, sim_cams, sim_grasps;
  int sim_frames = 10, sim_part = 0;
  double sim_delta = 0.0;
  sim_cmd->add_option("--scene", sim_scene)->required();
  sim_cmd->add_option("--gt", sim_gt, "true joints JSON")->required();
  sim_cmd->add_option("--plan", sim_plan, "planned joints JSON (estimate)")->required();
  sim_cmd->add_option("--frames", sim_frames);
  sim_cmd->add_option("--part", sim_part);
  sim_cmd->add_option("--delta", sim_delta, "target articulation delta");
  sim_cmd->add_option("--cameras", sim_cams, "rig JSON; default 4-camera rig");
  sim_cmd->add_option("--grasps", sim_grasps, "grasp points JSON");
  sim_cmd->add_option("--out", sim_out, "sequence directory")->required();

  // refine
  auto* ref = app.add_subcommand("refine",
                                 "Optimize joints against an observation sequence");
  std::string ref_scene, ref_seq, ref_init, ref_out, ref_gt;
  int ref_iters = 400;
  bool ref_no_ramp = false;
  ref->add_option("--scene", ref_scene)->required();
  ref->add_option("--seq", ref_seq, "sequence directory")->required();
  ref->add_option("--init", ref_init, "initial joints JSON")->required();
  ref->add_option("--out", ref_out)->required();
  ref->add_option("--gt", ref_gt, "optional ground truth for metrics");
  ref->add_option("--max-iters", ref_iters);
  ref->add_flag("--no-theta-ramp", ref_no_ramp);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Joint metrics for a refinement result");
  std::string ev_result, ev_gt, ev_out;
  ev->add_option("--result", ev_result)->required();
  ev->add_option("--gt", ev_gt)->required();
  ev->add_option("--out", ev_out)->required();

  // experiment
  auto* ex = app.add_subcommand("experiment", "Batch modeling + manipulation runs");
  std::string ex_config, ex_out;
  ex->add_option("--config", ex_config)->required();
  ex->add_option("--out", ex_out, "output directory (overrides config)");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    const auto obj = generate_object(object_template_from_string(gen_template),
                                     gen_seed, {gen_count});
    io::save_scene(gen_out, obj.scene);
    io::save_joints(gen_joints_out.empty() ? gen_out + ".joints.json" : gen_joints_out,
                    obj.joints);
    nlohmann::ordered_json gj;
    gj["grasp_points"] = nlohmann::ordered_json::array();
    for (const auto& g : obj.grasp_points)
      gj["grasp_points"].push_back({g.x(), g.y(), g.z()});
    gj["target_deltas"] = obj.target_deltas;
    std::ofstream gout(gen_grasps_out.empty() ? gen_out + ".grasps.json"
                                              : gen_grasps_out);
    gout << gj.dump(2) << "\n";
    if (!gen_rig_out.empty()) io::save_rig(gen_rig_out, make_camera_rig(4, 1.5, 128));
    return 0;
  }

  if (ren->parsed()) {
    const Scene scene = io::load_scene(ren_scene);
    const Camera cam = io::load_camera(ren_cam);
    Image im;
    if (!ren_joints.empty()) {
      const auto joints = io::load_joints(ren_joints);
      Pose pose = Pose::Zero(static_cast<Eigen::Index>(joints.size()));
      if (!ren_pose.empty()) {
        std::stringstream ss(ren_pose);
        std::string tok;
        Eigen::Index i = 0;
        while (std::getline(ss, tok, ',') && i < pose.size()) pose[i++] = std::stod(tok);
      }
      im = render_articulated(scene, joints, pose, cam);
    } else {
      im = render(scene, cam);
    }
    io::write_gsim_rgb(ren_out, im);
    if (!ren_depth_out.empty()) io::write_gsim_depth(ren_depth_out, im);
    if (!ren_ppm.empty()) io::write_ppm(ren_ppm, im);
    if (!ren_pgm.empty()) io::write_pgm16_depth(ren_pgm, im);
    return 0;
  }

  if (ann_cmd->parsed()) {
    const Scene scene = io::load_scene(ann_scene);
    const auto joints = io::load_joints(ann_gt);
    const Camera cam = io::load_camera(ann_cam);
    AnnotationNoise noise;
    if (ann_noise == "none")
      noise = AnnotationNoise::none();
    else if (ann_noise != "default")
      throw ConfigError("unknown noise preset: " + ann_noise);
    noise.seed = ann_seed;
    AnnotationSet ann = synthesize_annotations(scene, joints, cam, noise);
    ann.camera_ref = ann_cam;
    io::save_annotations(ann_out, ann);
    return 0;
  }

  if (init->parsed()) {
    const AnnotationSet ann = io::load_annotations(init_ann);
    const Image depth = io::read_gsim_image(init_depth);
    const Camera cam = io::load_camera(init_cam);
    io::save_joints(init_out, init_joints(ann, depth, cam));
    return 0;
  }

  if (sim_cmd->parsed()) {
    const Scene scene = io::load_scene(sim_scene);
    const auto gt = io::load_joints(sim_gt);
    const auto plan = io::load_joints(sim_plan);
    if (sim_part < 0 || sim_part >= static_cast<int>(plan.size()))
      throw ConfigError("simulate: part index out of range");
    std::vector<Camera> rig =
        sim_cams.empty() ? make_camera_rig(4, 1.5, 128) : io::load_rig(sim_cams);
    Vec3 grasp;
    double delta = sim_delta;
    if (!sim_grasps.empty()) {
      std::ifstream in(sim_grasps);
      if (!in) throw IoError("cannot open " + sim_grasps);
      nlohmann::json gj;
      in >> gj;
      const auto& gp = gj.at("grasp_points").at(sim_part);
      grasp = Vec3(gp[0].get<double>(), gp[1].get<double>(), gp[2].get<double>());
      if (delta == 0.0) delta = gj.at("target_deltas").at(sim_part).get<double>();
    } else {
      throw ConfigError("simulate: --grasps is required");
    }
    const auto result = simulate_interaction(scene, gt, sim_part, delta, rig,
                                             sim_frames, {}, plan[sim_part], grasp);
    io::save_sequence(sim_out, result.seq, result.achieved_delta, result.grasp_broken);
    std::cout << "achieved_delta " << result.achieved_delta << " grasp_broken "
              << (result.grasp_broken ? 1 : 0) << "\n";
    return 0;
  }

  if (ref->parsed()) {
    const Scene scene = io::load_scene(ref_scene);
    const ObservationSequence seq = io::load_sequence(ref_seq);
    const auto j_init = io::load_joints(ref_init);
    OptimizeConfig opt;
    opt.max_iters = ref_iters;
    std::optional<std::vector<JointSpec>> gt;
    if (!ref_gt.empty()) gt = io::load_joints(ref_gt);
    const RefinementResult res = refine(scene, j_init, seq, {}, opt,
                                        gt ? &*gt : nullptr);
    save_refinement(ref_out, res);
    std::cout << "iterations " << res.iterations << " final_loss "
              << (res.loss_trace.empty() ? 0.0 : res.loss_trace.back()) << "\n";
    return 0;
  }

  if (ev->parsed()) {
    std::ifstream in(ev_result);
    if (!in) throw IoError("cannot open " + ev_result);
    nlohmann::json rj;
    in >> rj;
    const auto gt = io::load_joints(ev_gt);
    nlohmann::ordered_json out;
    out["ae_deg"] = nlohmann::ordered_json::array();
    out["oe_cm"] = nlohmann::ordered_json::array();
    const auto& joints = rj.at("joints");
    if (joints.size() != gt.size())
      throw ConfigError("evaluate: joint count mismatch with ground truth");
    for (size_t j = 0; j < gt.size(); ++j) {
      JointSpec est;
      const auto& ej = joints[j];
      est.axis = Vec3(ej.at("axis")[0], ej.at("axis")[1], ej.at("axis")[2]).normalized();
      est.origin = Vec3(ej.at("origin")[0], ej.at("origin")[1], ej.at("origin")[2]);
      est.type = ej.at("type").get<std::string>() == "revolute" ? JointType::Revolute
                                                                : JointType::Prismatic;
      out["ae_deg"].push_back(axis_error_deg(est.axis, gt[j].axis.normalized()));
      const auto oe = origin_error_cm(est, gt[j].origin, gt[j].axis);
      oe ? out["oe_cm"].push_back(*oe) : out["oe_cm"].push_back(nullptr);
    }
    std::ofstream o(ev_out);
    if (!o) throw IoError("cannot write " + ev_out);
    o << out.dump(2) << "\n";
    return 0;
  }

  if (ex->parsed()) {
    ExperimentConfig cfg = load_experiment_config(ex_config);
    if (!ex_out.empty()) cfg.out_dir = ex_out;
    const MetricsReport rep = run_experiment(cfg);
    std::cout << "template " << rep.object_template << "\n"
              << "median_initial_ae_deg " << rep.median_initial_ae_deg << "\n"
              << "median_final_ae_deg " << rep.median_final_ae_deg << "\n"
              << "success_rate_pre " << rep.success_rate_pre << "\n"
              << "success_rate_post " << rep.success_rate_post << "\n"
              << "failed_seeds " << rep.failed_seeds << "\n";
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
