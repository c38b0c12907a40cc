#include "artic/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>

#include <json.hpp>

#include "artic/io.hpp"
#include "artic/metrics.hpp"

namespace artic {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

SeedResult run_seed(const ExperimentConfig& cfg, uint64_t seed) {
  SeedResult res;
  res.seed = seed;
  const auto t_start = std::chrono::steady_clock::now();

  const fs::path seed_dir =
      cfg.out_dir.empty() ? fs::path{} : cfg.out_dir / ("seed_" + std::to_string(seed));
  if (!seed_dir.empty()) fs::create_directories(seed_dir);

  try {
    const GeneratedObject obj = generate_object(cfg.tmpl, seed, cfg.gen);
    const int k = static_cast<int>(obj.joints.size());
    const auto rig = make_camera_rig(cfg.camera_count, cfg.camera_radius,
                                     cfg.resolution);

    std::vector<double> targets(k);
    for (int p = 0; p < k; ++p)
      targets[p] = cfg.target_delta ? *cfg.target_delta : obj.target_deltas[p];
    res.targets = targets;
    for (const auto& j : obj.joints) res.joint_types.push_back(to_string(j.type));

    // Static render of the frontal camera supplies the annotation depth map.
    const Image frontal = render(obj.scene, rig[0], cfg.sim.render);

    AnnotationNoise noise = cfg.noise;
    noise.seed = seed * 7919 + 13;
    const AnnotationSet ann =
        synthesize_annotations(obj.scene, obj.joints, rig[0], noise);
    const auto j_init = init_joints(ann, frontal, rig[0]);

    for (int p = 0; p < k; ++p) {
      res.initial_ae_deg.push_back(axis_error_deg(j_init[p].axis.normalized(),
                                                  obj.joints[p].axis.normalized()));
      res.initial_oe_cm.push_back(
          origin_error_cm(j_init[p], obj.joints[p].origin, obj.joints[p].axis));
    }

    auto success = [&](const InteractionResult& r, double target) {
      return !r.grasp_broken &&
             std::abs(r.achieved_delta) >= cfg.success_fraction * std::abs(target);
    };

    // Phase 1: manipulate with the raw initialization, collecting observations.
    ObservationSequence combined;
    combined.cameras = rig;
    double time_offset = 0.0;
    std::vector<VecX> theta_init;
    for (int p = 0; p < k; ++p) {
      const InteractionResult pre =
          simulate_interaction(obj.scene, obj.joints, p, targets[p], rig, cfg.frames,
                               cfg.sim, j_init[p], obj.grasp_points[p]);
      res.achieved_pre.push_back(pre.achieved_delta);
      res.success_pre.push_back(success(pre, targets[p]));
      for (size_t f = 0; f < pre.seq.frames.size(); ++f) {
        ObservationFrame frame = pre.seq.frames[f];
        frame.time += time_offset;
        combined.frames.push_back(std::move(frame));
        VecX init = VecX::Zero(k);
        if (cfg.theta_ramp)
          init[p] = targets[p] * static_cast<double>(f + 1) / cfg.frames;
        theta_init.push_back(init);
      }
      time_offset += cfg.sim.duration_s + 1.0;
    }

    // Phase 2: closed-loop refinement on the collected sequence.
    LossConfig loss_cfg = cfg.loss;
    loss_cfg.render = cfg.sim.render;  // observations came from this config
    OptimizeConfig opt_cfg = cfg.opt;
    if (cfg.theta_ramp) opt_cfg.theta_init = theta_init;
    const RefinementResult ref =
        refine(obj.scene, j_init, combined, loss_cfg, opt_cfg, &obj.joints);
    res.final_ae_deg = ref.final_ae_deg;
    res.final_oe_cm = ref.final_oe_cm;
    res.refine_iterations = ref.iterations;

    // Phase 3: re-plan with the refined joints.
    for (int p = 0; p < k; ++p) {
      const InteractionResult post =
          simulate_interaction(obj.scene, obj.joints, p, targets[p], rig, cfg.frames,
                               cfg.sim, ref.joints[p], obj.grasp_points[p]);
      res.achieved_post.push_back(post.achieved_delta);
      res.success_post.push_back(success(post, targets[p]));
    }

    if (!seed_dir.empty()) {
      io::save_scene(seed_dir / "scene.json", obj.scene);
      io::save_joints(seed_dir / "joints_gt.json", obj.joints);
      io::save_joints(seed_dir / "joints_init.json", j_init);
      io::save_joints(seed_dir / "joints_refined.json", ref.joints);
      io::save_annotations(seed_dir / "annotations.json", ann);
      io::save_rig(seed_dir / "cameras.json", rig);
      save_refinement(seed_dir / "refinement.json", ref);
      if (cfg.write_debug_images) {
        io::write_ppm(seed_dir / "static_cam0.ppm", frontal);
        io::write_pgm16_depth(seed_dir / "static_cam0_depth.pgm", frontal);
        if (!combined.frames.empty()) {
          const auto& last = combined.frames.back();
          for (size_t v = 0; v < last.images.size(); ++v)
            io::write_ppm(seed_dir / ("motion_cam" + std::to_string(v) + ".ppm"),
                          last.images[v]);
        }
      }
    }
  } catch (const Error& e) {
    res.failed = true;
    res.error = e.what();
  }

  res.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return res;
}

}  // namespace

void compute_aggregates(MetricsReport& rep) {
  std::vector<double> iae, fae, ioe, foe;
  int succ_pre = 0, succ_post = 0, attempts = 0, failed = 0;
  for (const auto& s : rep.seeds) {
    if (s.failed) {
      ++failed;
      continue;
    }
    for (size_t p = 0; p < s.initial_ae_deg.size(); ++p) {
      iae.push_back(s.initial_ae_deg[p]);
      fae.push_back(s.final_ae_deg[p]);
      if (s.initial_oe_cm[p]) ioe.push_back(*s.initial_oe_cm[p]);
      if (s.final_oe_cm[p]) foe.push_back(*s.final_oe_cm[p]);
      ++attempts;
      if (s.success_pre[p]) ++succ_pre;
      if (s.success_post[p]) ++succ_post;
    }
  }
  rep.median_initial_ae_deg = median(iae);
  rep.median_final_ae_deg = median(fae);
  rep.median_initial_oe_cm =
      ioe.empty() ? std::nullopt : std::optional<double>(median(ioe));
  rep.median_final_oe_cm =
      foe.empty() ? std::nullopt : std::optional<double>(median(foe));
  rep.success_rate_pre = attempts ? static_cast<double>(succ_pre) / attempts : 0.0;
  rep.success_rate_post = attempts ? static_cast<double>(succ_post) / attempts : 0.0;
  rep.failed_seeds = failed;
}

MetricsReport run_experiment(const ExperimentConfig& cfg) {
  cfg.check();
  if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);

  MetricsReport rep;
  rep.object_template = to_string(cfg.tmpl);
  rep.seeds.resize(cfg.seeds.size());

  parallel_chunks(static_cast<int>(cfg.seeds.size()), cfg.parallel_seeds,
                  [&](int begin, int end) {
                    for (int i = begin; i < end; ++i)
                      rep.seeds[i] = run_seed(cfg, cfg.seeds[i]);
                  });

  compute_aggregates(rep);
  if (!cfg.out_dir.empty()) save_metrics_report(cfg.out_dir, rep);
  return rep;
}

namespace {

ordered_json seed_to_json(const SeedResult& s) {
  ordered_json j;
  j["seed"] = s.seed;
  j["failed"] = s.failed;
  if (s.failed) {
    j["error"] = s.error;
    return j;
  }
  j["joint_types"] = s.joint_types;
  j["initial_ae_deg"] = s.initial_ae_deg;
  j["final_ae_deg"] = s.final_ae_deg;
  auto opt_list = [](const std::vector<std::optional<double>>& v) {
    ordered_json out = ordered_json::array();
    for (const auto& o : v)
      o ? out.push_back(*o) : out.push_back(nullptr);
    return out;
  };
  j["initial_oe_cm"] = opt_list(s.initial_oe_cm);
  j["final_oe_cm"] = opt_list(s.final_oe_cm);
  j["success_pre"] = s.success_pre;
  j["success_post"] = s.success_post;
  j["achieved_pre"] = s.achieved_pre;
  j["achieved_post"] = s.achieved_post;
  j["targets"] = s.targets;
  j["refine_iterations"] = s.refine_iterations;
  return j;
}

SeedResult seed_from_json(const ordered_json& j) {
  SeedResult s;
  s.seed = j.at("seed").get<uint64_t>();
  s.failed = j.at("failed").get<bool>();
  if (s.failed) {
    s.error = j.value("error", "");
    return s;
  }
  s.joint_types = j.at("joint_types").get<std::vector<std::string>>();
  s.initial_ae_deg = j.at("initial_ae_deg").get<std::vector<double>>();
  s.final_ae_deg = j.at("final_ae_deg").get<std::vector<double>>();
  auto opt_list = [](const ordered_json& arr) {
    std::vector<std::optional<double>> out;
    for (const auto& v : arr)
      out.push_back(v.is_null() ? std::nullopt
                                : std::optional<double>(v.get<double>()));
    return out;
  };
  s.initial_oe_cm = opt_list(j.at("initial_oe_cm"));
  s.final_oe_cm = opt_list(j.at("final_oe_cm"));
  s.success_pre = j.at("success_pre").get<std::vector<bool>>();
  s.success_post = j.at("success_post").get<std::vector<bool>>();
  s.achieved_pre = j.at("achieved_pre").get<std::vector<double>>();
  s.achieved_post = j.at("achieved_post").get<std::vector<double>>();
  s.targets = j.at("targets").get<std::vector<double>>();
  s.refine_iterations = j.at("refine_iterations").get<int>();
  return s;
}

}  // namespace

void save_metrics_report(const fs::path& dir, const MetricsReport& rep) {
  fs::create_directories(dir);
  // metrics.json is fully deterministic; wall-clock times live separately so
  // fixed-seed runs stay bit-identical.
  ordered_json j;
  j["template"] = rep.object_template;
  j["seeds"] = ordered_json::array();
  for (const auto& s : rep.seeds) j["seeds"].push_back(seed_to_json(s));
  ordered_json agg;
  agg["median_initial_ae_deg"] = rep.median_initial_ae_deg;
  agg["median_final_ae_deg"] = rep.median_final_ae_deg;
  agg["median_initial_oe_cm"] =
      rep.median_initial_oe_cm ? ordered_json(*rep.median_initial_oe_cm)
                               : ordered_json(nullptr);
  agg["median_final_oe_cm"] = rep.median_final_oe_cm
                                  ? ordered_json(*rep.median_final_oe_cm)
                                  : ordered_json(nullptr);
  agg["success_rate_pre"] = rep.success_rate_pre;
  agg["success_rate_post"] = rep.success_rate_post;
  agg["failed_seeds"] = rep.failed_seeds;
  j["aggregate"] = agg;
  {
    std::ofstream out(dir / "metrics.json");
    if (!out) throw IoError("cannot write metrics.json");
    out << j.dump(2) << "\n";
  }

  ordered_json rt;
  for (const auto& s : rep.seeds) rt[std::to_string(s.seed)] = s.runtime_s;
  {
    std::ofstream out(dir / "runtimes.json");
    out << rt.dump(2) << "\n";
  }

  std::ofstream csv(dir / "metrics.csv");
  csv << "seed,part,joint_type,initial_ae_deg,final_ae_deg,initial_oe_cm,"
         "final_oe_cm,success_pre,success_post\n";
  for (const auto& s : rep.seeds) {
    if (s.failed) continue;
    for (size_t p = 0; p < s.initial_ae_deg.size(); ++p) {
      csv << s.seed << "," << p << "," << s.joint_types[p] << ","
          << s.initial_ae_deg[p] << "," << s.final_ae_deg[p] << ",";
      if (s.initial_oe_cm[p]) csv << *s.initial_oe_cm[p];
      csv << ",";
      if (s.final_oe_cm[p]) csv << *s.final_oe_cm[p];
      csv << "," << (s.success_pre[p] ? 1 : 0) << "," << (s.success_post[p] ? 1 : 0)
          << "\n";
    }
  }
}

MetricsReport load_metrics_report(const fs::path& dir) {
  std::ifstream in(dir / "metrics.json");
  if (!in) throw IoError("cannot open metrics.json in " + dir.string());
  ordered_json j;
  in >> j;
  MetricsReport rep;
  rep.object_template = j.at("template").get<std::string>();
  for (const auto& sj : j.at("seeds")) rep.seeds.push_back(seed_from_json(sj));
  const auto& agg = j.at("aggregate");
  rep.median_initial_ae_deg = agg.at("median_initial_ae_deg").get<double>();
  rep.median_final_ae_deg = agg.at("median_final_ae_deg").get<double>();
  if (!agg.at("median_initial_oe_cm").is_null())
    rep.median_initial_oe_cm = agg.at("median_initial_oe_cm").get<double>();
  if (!agg.at("median_final_oe_cm").is_null())
    rep.median_final_oe_cm = agg.at("median_final_oe_cm").get<double>();
  rep.success_rate_pre = agg.at("success_rate_pre").get<double>();
  rep.success_rate_post = agg.at("success_rate_post").get<double>();
  rep.failed_seeds = agg.at("failed_seeds").get<int>();
  return rep;
}

void save_refinement(const fs::path& json_path, const RefinementResult& res) {
  ordered_json j;
  j["joints"] = ordered_json::array();
  for (const auto& spec : res.joints) {
    ordered_json sj;
    sj["axis"] = {spec.axis.x(), spec.axis.y(), spec.axis.z()};
    sj["origin"] = {spec.origin.x(), spec.origin.y(), spec.origin.z()};
    sj["type"] = to_string(spec.type);
    j["joints"].push_back(std::move(sj));
  }
  j["thetas"] = ordered_json::array();
  for (const auto& th : res.thetas)
    j["thetas"].push_back(std::vector<double>(th.data(), th.data() + th.size()));
  j["loss_trace"] = res.loss_trace;
  j["iterations"] = res.iterations;
  ordered_json m;
  m["initial_ae_deg"] = res.initial_ae_deg;
  m["final_ae_deg"] = res.final_ae_deg;
  auto opt_list = [](const std::vector<std::optional<double>>& v) {
    ordered_json out = ordered_json::array();
    for (const auto& o : v)
      o ? out.push_back(*o) : out.push_back(nullptr);
    return out;
  };
  m["initial_oe_cm"] = opt_list(res.initial_oe_cm);
  m["final_oe_cm"] = opt_list(res.final_oe_cm);
  j["metrics"] = m;
  std::ofstream out(json_path);
  if (!out) throw IoError("cannot write " + json_path.string());
  out << j.dump(2) << "\n";

  fs::path csv_path = json_path;
  csv_path.replace_extension(".csv");
  std::ofstream csv(csv_path);
  csv << "iter,loss,ae_deg,oe_cm\n";
  for (size_t i = 0; i < res.loss_trace.size(); ++i) {
    csv << i << "," << res.loss_trace[i] << ",";
    if (i < res.ae_trace.size()) csv << res.ae_trace[i];
    csv << ",";
    if (i < res.oe_trace.size()) csv << res.oe_trace[i];
    csv << "\n";
  }
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError("parse error in " + path.string() + ": " + e.what());
  }

  ExperimentConfig cfg;
  cfg.tmpl = object_template_from_string(j.value("template", "door"));
  if (j.contains("seeds")) {
    cfg.seeds = j.at("seeds").get<std::vector<uint64_t>>();
  } else if (j.contains("seed_count")) {
    cfg.seeds.clear();
    const uint64_t start = j.value("seed_start", 0);
    for (uint64_t s = 0; s < j.at("seed_count").get<uint64_t>(); ++s)
      cfg.seeds.push_back(start + s);
  }
  cfg.camera_count = j.value("camera_count", cfg.camera_count);
  cfg.camera_radius = j.value("camera_radius", cfg.camera_radius);
  cfg.resolution = j.value("resolution", cfg.resolution);
  cfg.frames = j.value("frames", cfg.frames);
  if (j.contains("target_delta")) cfg.target_delta = j.at("target_delta").get<double>();
  cfg.success_fraction = j.value("success_fraction", cfg.success_fraction);
  cfg.theta_ramp = j.value("theta_ramp", cfg.theta_ramp);
  cfg.parallel_seeds = j.value("parallel_seeds", cfg.parallel_seeds);
  cfg.write_debug_images = j.value("write_debug_images", cfg.write_debug_images);
  cfg.gen.gaussians_per_part = j.value("gaussians_per_part", cfg.gen.gaussians_per_part);

  if (j.contains("noise")) {
    const auto& nj = j.at("noise");
    if (nj.is_string()) {
      const auto s = nj.get<std::string>();
      if (s == "none")
        cfg.noise = AnnotationNoise::none();
      else if (s != "default")
        throw ConfigError("unknown noise preset: " + s);
    } else {
      cfg.noise.tilt_min_deg = nj.value("tilt_min_deg", cfg.noise.tilt_min_deg);
      cfg.noise.tilt_max_deg = nj.value("tilt_max_deg", cfg.noise.tilt_max_deg);
      cfg.noise.shift_px = nj.value("shift_px", cfg.noise.shift_px);
      cfg.noise.bbox_px = nj.value("bbox_px", cfg.noise.bbox_px);
    }
  }
  if (j.contains("loss")) {
    const auto& lj = j.at("loss");
    cfg.loss.lambda_l1 = lj.value("lambda_l1", cfg.loss.lambda_l1);
    cfg.loss.lambda_ssim = lj.value("lambda_ssim", cfg.loss.lambda_ssim);
    cfg.loss.lambda_unit = lj.value("lambda_unit", cfg.loss.lambda_unit);
    cfg.loss.lambda_entropy = lj.value("lambda_entropy", cfg.loss.lambda_entropy);
    cfg.loss.depth_weight = lj.value("depth_weight", cfg.loss.depth_weight);
  }
  if (j.contains("opt")) {
    const auto& oj = j.at("opt");
    cfg.opt.max_iters = oj.value("max_iters", cfg.opt.max_iters);
    cfg.opt.lr_axis = oj.value("lr_axis", cfg.opt.lr_axis);
    cfg.opt.lr_origin = oj.value("lr_origin", cfg.opt.lr_origin);
    cfg.opt.lr_theta = oj.value("lr_theta", cfg.opt.lr_theta);
    cfg.opt.lr_skin = oj.value("lr_skin", cfg.opt.lr_skin);
    cfg.opt.converge_eps = oj.value("converge_eps", cfg.opt.converge_eps);
    cfg.opt.converge_window = oj.value("converge_window", cfg.opt.converge_window);
    cfg.opt.theta_warmup_iters =
        oj.value("theta_warmup_iters", cfg.opt.theta_warmup_iters);
    cfg.opt.optimize_skin_logits =
        oj.value("optimize_skin_logits", cfg.opt.optimize_skin_logits);
  }
  if (j.contains("sim")) {
    const auto& sj = j.at("sim");
    cfg.sim.duration_s = sj.value("duration_s", cfg.sim.duration_s);
    cfg.sim.grasp_stiffness = sj.value("grasp_stiffness", cfg.sim.grasp_stiffness);
    cfg.sim.break_distance = sj.value("break_distance", cfg.sim.break_distance);
  }
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  return cfg;
}

}  // namespace artic
