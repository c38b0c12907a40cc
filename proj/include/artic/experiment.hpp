#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "artic/joint_init.hpp"
#include "artic/objects.hpp"
#include "artic/optimize.hpp"
#include "artic/sim.hpp"

namespace artic {

struct ExperimentConfig {
  ObjectTemplate tmpl = ObjectTemplate::Door;
  std::vector<uint64_t> seeds = {0};
  int camera_count = 4;
  double camera_radius = 1.5;  // meters; objects are built at ~unit scale
  int resolution = 128;
  AnnotationNoise noise;       // AnnotationNoise::none() for noiseless runs
  int frames = 10;
  std::optional<double> target_delta;  // overrides the template default
  double success_fraction = 0.9;       // achieved >= fraction * target
  bool theta_ramp = true;              // ramp theta init to the commanded target
  GenerateOptions gen;
  LossConfig loss;
  OptimizeConfig opt;
  SimConfig sim;
  std::filesystem::path out_dir;  // empty: keep everything in memory
  int parallel_seeds = 2;
  bool write_debug_images = true;

  void check() const {
    if (seeds.empty()) throw ConfigError("experiment: at least one seed required");
    if (resolution < 32) throw ConfigError("experiment: resolution must be >= 32");
    if (frames < 2) throw ConfigError("experiment: frames must be >= 2");
    if (camera_count < 1) throw ConfigError("experiment: need >= 1 camera");
  }
};

struct SeedResult {
  uint64_t seed = 0;
  bool failed = false;
  std::string error;
  std::vector<std::string> joint_types;
  std::vector<double> initial_ae_deg, final_ae_deg;
  std::vector<std::optional<double>> initial_oe_cm, final_oe_cm;
  std::vector<bool> success_pre, success_post;
  std::vector<double> achieved_pre, achieved_post, targets;
  int refine_iterations = 0;
  double runtime_s = 0;  // excluded from the deterministic metrics file
};

struct MetricsReport {
  std::string object_template;
  std::vector<SeedResult> seeds;
  double median_initial_ae_deg = 0;
  double median_final_ae_deg = 0;
  std::optional<double> median_initial_oe_cm, median_final_oe_cm;
  double success_rate_pre = 0;
  double success_rate_post = 0;
  int failed_seeds = 0;
};

/// Per seed: generate -> render -> synthesize annotations -> init joints
/// (records w/o-opt errors) -> simulate with the initial estimate -> refine ->
/// re-plan and simulate with the refined joints -> success bookkeeping.
/// Per-seed failures are recorded in the report, not fatal to the batch.
MetricsReport run_experiment(const ExperimentConfig& cfg);

/// metrics.json (deterministic: no wall-clock fields), metrics.csv, and
/// runtimes.json alongside.
void save_metrics_report(const std::filesystem::path& dir, const MetricsReport& rep);
MetricsReport load_metrics_report(const std::filesystem::path& dir);

/// Recomputes the aggregate block from per-seed rows (round-trip checking).
void compute_aggregates(MetricsReport& rep);

void save_refinement(const std::filesystem::path& json_path,
                     const RefinementResult& res);

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace artic
