// Command line front end: run a sequence or evaluate trajectories.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "stereotrack/bench/config.hpp"
#include "stereotrack/bench/runner.hpp"
#include "stereotrack/bench/trajectory.hpp"
#include "stereotrack/core/error.hpp"

namespace st = stereotrack;

namespace {

bool on_off(const std::string& v) { return v == "on"; }

void print_metric(const char* name, double value) { std::printf("%s %.9g\n", name, value); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stereo visual-inertial tracking frontend"};
  app.require_subcommand(1);

  std::string dataset;
  std::string format = "synthetic";
  std::string camera = "pinhole";
  std::string backend = "seq";
  std::string pose_opt;
  std::string residency;
  std::string mode = "fast";
  std::string config_path;
  std::string out_dir = "out";
  std::string rpe_against;
  unsigned workers = 0;
  double delay = 0.0;
  double speed = 1.0;
  bool virtual_time = false;
  bool dump_matches = false;
  std::size_t max_frames = 0;

  CLI::App* run = app.add_subcommand("run", "Track a sequence and write reports");
  run->add_option("--dataset", dataset, "Dataset directory, or static|line|circle for synthetic");
  run->add_option("--format", format, "Dataset layout")->check(CLI::IsMember({"euroc", "tumvi", "synthetic"}));
  run->add_option("--camera", camera, "Camera model")->check(CLI::IsMember({"pinhole", "fisheye"}));
  run->add_option("--backend", backend, "Execution backend")->check(CLI::IsMember({"seq", "par"}));
  run->add_option("--pose-opt", pose_opt, "Pose optimisation stage")->check(CLI::IsMember({"on", "off"}));
  run->add_option("--residency", residency, "Keep pyramids resident between stages")
      ->check(CLI::IsMember({"on", "off"}));
  run->add_option("--mode", mode, "Frame pacing")->check(CLI::IsMember({"realtime", "fast"}));
  run->add_option("--config", config_path, "YAML configuration");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--workers", workers, "Worker threads for the parallel backend (0 = hardware)");
  run->add_option("--delay", delay, "Injected per-frame delay in seconds");
  run->add_option("--speed", speed, "Playback speed in realtime mode");
  run->add_flag("--virtual-time", virtual_time, "Simulate the realtime clock");
  run->add_flag("--dump-matches", dump_matches, "Write per-frame stereo matches");
  run->add_option("--rpe-against", rpe_against, "Trajectory file to evaluate RPE against");
  run->add_option("--max-frames", max_frames, "Stop after this many frames (0 = all)");

  std::string est_path;
  std::string ref_path;
  std::size_t rpe_delta = 0;
  bool ate_scale = false;
  double tolerance = 0.01;
  CLI::App* eval = app.add_subcommand("evaluate", "Compare an estimate with a reference trajectory");
  eval->add_option("--est", est_path, "Estimated trajectory")->required();
  eval->add_option("--ref", ref_path, "Reference trajectory")->required();
  eval->add_option("--rpe", rpe_delta, "Also report RPE over this many frames");
  eval->add_flag("--ate-scale", ate_scale, "Similarity alignment for ATE");
  eval->add_option("--tolerance", tolerance, "Timestamp association tolerance in seconds");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const st::RunConfig config = config_path.empty() ? st::RunConfig{} : st::load_config(config_path);
      st::RunOptions options;
      options.dataset = dataset;
      options.format = st::parse_dataset_format(format);
      options.fisheye = camera == "fisheye";
      options.backend = st::parse_backend(backend);
      options.workers = workers;
      if (!pose_opt.empty()) {
        options.pose_opt = on_off(pose_opt);
      }
      if (!residency.empty()) {
        options.residency = on_off(residency);
      }
      options.realtime.mode = mode == "realtime" ? st::RunMode::kRealtime : st::RunMode::kFast;
      options.realtime.injected_delay = delay;
      options.realtime.speed = speed;
      options.realtime.virtual_time = virtual_time;
      options.dump_matches = dump_matches;
      options.max_frames = max_frames;
      if (options.format != st::DatasetFormat::kSynthetic && dataset.empty()) {
        throw st::ConfigError("--dataset is required for " + format);
      }
      const st::RunOutput output = st::run_sequence(options, config);
      st::write_run_outputs(out_dir, output);
      std::cout << st::format_summary(output.stats);
      if (output.ate) {
        print_metric("ate", *output.ate);
      }
      if (!rpe_against.empty()) {
        const st::Trajectory other = st::read_trajectory(rpe_against);
        print_metric("rpe_against", st::compute_rpe(output.trajectory, other, 1, config.trajectory_tolerance));
      }
      return 0;
    }
    const st::Trajectory est = st::read_trajectory(est_path);
    const st::Trajectory ref = st::read_trajectory(ref_path);
    const st::AteResult ate = st::compute_ate(est, ref, tolerance, ate_scale);
    print_metric("ate", ate.rmse);
    print_metric("pairs", static_cast<double>(ate.pairs));
    if (ate_scale) {
      print_metric("scale", ate.scale);
    }
    if (rpe_delta > 0) {
      print_metric("rpe", st::compute_rpe(est, ref, rpe_delta, tolerance));
    }
  } catch (const st::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
