#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stereotrack/bench/config.hpp"
#include "stereotrack/bench/reports.hpp"
#include "stereotrack/bench/trajectory.hpp"
#include "stereotrack/parallel/engine.hpp"
#include "stereotrack/pipeline/realtime.hpp"

namespace stereotrack {

enum class DatasetFormat { kEuroc, kTumvi, kSynthetic };

DatasetFormat parse_dataset_format(const std::string& name);

struct RunOptions {
  std::string dataset;  // directory, or a trajectory kind for synthetic runs
  DatasetFormat format = DatasetFormat::kSynthetic;
  bool fisheye = false;
  Backend backend = Backend::kSequential;
  unsigned workers = 0;
  std::optional<bool> pose_opt;   // overrides the config when set
  std::optional<bool> residency;  // overrides the config when set
  RealtimeOptions realtime;
  bool dump_matches = false;
  std::size_t max_frames = 0;  // 0 = all
};

struct RunOutput {
  Trajectory trajectory;  // tracked frames, camera to world
  RunSummary summary;
  RunStats stats;
  std::vector<FrameMatches> matches;
  std::optional<Trajectory> ground_truth;
  std::optional<double> ate;
  std::vector<std::pair<std::string, std::string>> settings;  // echoed into summary.txt
};

RunOutput run_sequence(const RunOptions& options, const RunConfig& config);

/// trajectory.txt, timings.csv, frames.csv, summary.txt and, when present,
/// matches.csv. Creates `dir`.
void write_run_outputs(const std::string& dir, const RunOutput& output);

}  // namespace stereotrack
