#include "stereotrack/bench/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "stereotrack/bench/dataset.hpp"
#include "stereotrack/bench/image_io.hpp"
#include "stereotrack/core/error.hpp"
#include "stereotrack/pipeline/tracker.hpp"

namespace stereotrack {
namespace {

// Frames to track plus the way to feed each one into the tracker.
struct Source {
  std::vector<double> timestamps;
  std::vector<ImuSample> imu;
  std::optional<Trajectory> ground_truth;
  std::function<TrackResult(Tracker&, std::size_t, std::span<const ImuSample>)> track;
};

std::span<const ImuSample> imu_slice(const std::vector<ImuSample>& imu, double t0, double t1) {
  const auto lo = std::lower_bound(imu.begin(), imu.end(), t0,
                                   [](const ImuSample& s, double v) { return s.timestamp < v; });
  const auto hi = std::upper_bound(imu.begin(), imu.end(), t1,
                                   [](double v, const ImuSample& s) { return v < s.timestamp; });
  return lo < hi ? std::span<const ImuSample>(lo, hi) : std::span<const ImuSample>();
}

Source synthetic_source(const RunOptions& options, const RunConfig& config) {
  SyntheticSceneConfig sc = config.synthetic;
  if (!options.dataset.empty()) {
    sc.trajectory = parse_trajectory_kind(options.dataset);
  }
  auto scene = std::make_shared<SyntheticScene>(sc, config.seed);
  Source src;
  src.timestamps = scene->timestamps();
  src.imu = scene->imu();
  src.ground_truth = scene->ground_truth();
  if (config.synthetic_input == SyntheticInput::kFeatures) {
    src.track = [scene](Tracker& t, std::size_t i, std::span<const ImuSample> imu) {
      return t.track_features(scene->features(i).features, imu);
    };
  } else {
    auto left = std::make_shared<GrayImage>();
    auto right = std::make_shared<GrayImage>();
    src.track = [scene, left, right](Tracker& t, std::size_t i, std::span<const ImuSample> imu) {
      scene->render(i, *left, *right);
      return t.track_frame(*left, *right, scene->frame_time(i), imu);
    };
  }
  return src;
}

Source dataset_source(const RunOptions& options, const RunConfig& config) {
  auto seq = std::make_shared<Sequence>(options.format == DatasetFormat::kTumvi
                                            ? load_tumvi(options.dataset, config.stereo_tolerance)
                                            : load_euroc(options.dataset, config.stereo_tolerance));
  Source src;
  src.timestamps.reserve(seq->pairs.size());
  for (const StereoPair& p : seq->pairs) {
    src.timestamps.push_back(p.timestamp);
  }
  src.imu = seq->imu;
  src.ground_truth = seq->ground_truth;
  auto left = std::make_shared<GrayImage>();
  auto right = std::make_shared<GrayImage>();
  src.track = [seq, left, right](Tracker& t, std::size_t i, std::span<const ImuSample> imu) {
    *left = read_image(seq->pairs[i].left_path);
    *right = read_image(seq->pairs[i].right_path);
    return t.track_frame(*left, *right, seq->pairs[i].timestamp, imu);
  };
  return src;
}

}  // namespace

DatasetFormat parse_dataset_format(const std::string& name) {
  if (name == "euroc") {
    return DatasetFormat::kEuroc;
  }
  if (name == "tumvi") {
    return DatasetFormat::kTumvi;
  }
  if (name == "synthetic") {
    return DatasetFormat::kSynthetic;
  }
  throw ConfigError("unknown dataset format '" + name + "'");
}

RunOutput run_sequence(const RunOptions& options, const RunConfig& config) {
  TrackerConfig tcfg = config.tracker;
  if (options.pose_opt) {
    tcfg.pose_opt.enabled = *options.pose_opt;
  }
  if (options.residency) {
    tcfg.tracking.residency = *options.residency;
  }
  if (options.fisheye && options.format == DatasetFormat::kSynthetic) {
    throw ConfigError("the synthetic generator renders a rectified pinhole rig only");
  }
  if (options.format == DatasetFormat::kSynthetic && config.synthetic_input == SyntheticInput::kFeatures && tcfg.tracking.max_keypoints == 0) {
    tcfg.tracking.max_keypoints = static_cast<std::size_t>(config.synthetic.landmark_count);
  }
  Source src = options.format == DatasetFormat::kSynthetic ? synthetic_source(options, config)
                                                           : dataset_source(options, config);
  if (options.max_frames > 0 && src.timestamps.size() > options.max_frames) {
    src.timestamps.resize(options.max_frames);
  }

  Engine engine(options.backend, options.workers);
  Tracker tracker(config.camera(options.fisheye), tcfg, engine);
  RunOutput out;
  out.settings = {
      {"backend", options.backend == Backend::kParallel ? "par" : "seq"},
      {"workers", std::to_string(engine.workers())},
      {"residency", tcfg.tracking.residency ? "1" : "0"},
      {"pose_opt", tcfg.pose_opt.enabled ? "1" : "0"},
      {"initial_refinement", tcfg.initial_refinement.enabled ? "1" : "0"},
      {"rotation_check.prev_frame", "1"},
      {"rotation_check.local_map", tcfg.projection.rotation_check ? "1" : "0"},
      {"mode", options.realtime.mode == RunMode::kRealtime ? "realtime" : "fast"},
      {"injected_delay", std::to_string(options.realtime.injected_delay)},
  };
  std::optional<double> last_time;
  auto process = [&](std::size_t i) {
    const double t = src.timestamps[i];
    const auto imu = last_time ? imu_slice(src.imu, *last_time, t) : std::span<const ImuSample>();
    last_time = t;
    const TrackResult res = src.track(tracker, i, imu);
    if (res.status == TrackStatus::kInitialized || res.status == TrackStatus::kTracking) {
      out.trajectory.push_back(t, res.pose.inverse());
    }
    if (options.dump_matches) {
      FrameMatches fm;
      fm.frame_id = res.report.frame_id;
      if (options.fisheye) {
        for (const FisheyeMatch& m : tracker.fisheye_matches()) {
          StereoMatch s;
          s.left = m.left;
          s.right = m.right;
          s.depth = m.point.z();
          s.distance = m.distance;
          fm.matches.push_back(s);
        }
      } else {
        fm.matches = tracker.stereo_matches();
      }
      out.matches.push_back(std::move(fm));
    }
    return res.report;
  };
  out.summary = run_realtime(src.timestamps, process, options.realtime);
  out.stats = summarize(out.summary.reports);
  out.ground_truth = std::move(src.ground_truth);
  if (out.ground_truth && out.trajectory.size() >= 3) {
    try {
      out.ate = compute_ate(out.trajectory, *out.ground_truth, config.trajectory_tolerance).rmse;
    } catch (const InsufficientOverlapError&) {
      out.ate.reset();
    }
  }
  return out;
}

void write_run_outputs(const std::string& dir, const RunOutput& output) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path root(dir);
  write_trajectory((root / "trajectory.txt").string(), output.trajectory);
  write_timings_csv((root / "timings.csv").string(), output.summary.reports);
  write_frames_csv((root / "frames.csv").string(), output.summary.reports);
  write_summary((root / "summary.txt").string(), output.stats);
  std::ofstream extra((root / "summary.txt").string(), std::ios::app);
  if (output.ate) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "ate %.9g\n", *output.ate);
    extra << buf;
  }
  for (const auto& [key, value] : output.settings) {
    extra << "setting " << key << ' ' << value << '\n';
  }
  if (!output.matches.empty()) {
    write_matches_csv((root / "matches.csv").string(), output.matches);
  }
}

}  // namespace stereotrack
