#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stereotrack/pipeline/report.hpp"
#include "stereotrack/stereo/stereo.hpp"

namespace stereotrack {

struct StageStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
  double share = 0.0;   // mean / mean total
};

struct RunStats {
  std::array<StageStats, kStageCount> stages{};
  std::size_t frames = 0;
  std::size_t processed = 0;
  std::size_t drops = 0;
  double fps = 0.0;  // 1e6 / mean total micros
  double total_cv = 0.0;  // stddev / mean of the total time

  const StageStats& stage(Stage s) const { return stages[static_cast<int>(s)]; }
};

/// Statistics over the processed (non-dropped) reports.
RunStats summarize(std::span<const StageReport> reports);

void write_timings_csv(const std::string& path, std::span<const StageReport> reports);
void write_frames_csv(const std::string& path, std::span<const StageReport> reports);
void write_summary(const std::string& path, const RunStats& stats);
std::string format_summary(const RunStats& stats);

struct FrameMatches {
  std::uint64_t frame_id = 0;
  std::vector<StereoMatch> matches;
};

void write_matches_csv(const std::string& path, std::span<const FrameMatches> frames);

}  // namespace stereotrack
