#include "stereotrack/bench/reports.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stereotrack/core/error.hpp"

namespace stereotrack {
namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw DatasetError("cannot write " + path);
  }
  return out;
}

std::string format_double(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace

RunStats summarize(std::span<const StageReport> reports) {
  RunStats stats;
  stats.frames = reports.size();
  std::array<double, kStageCount> sum{};
  for (const StageReport& r : reports) {
    if (r.dropped) {
      ++stats.drops;
      continue;
    }
    ++stats.processed;
    for (int s = 0; s < kStageCount; ++s) {
      sum[s] += r.micros[s];
    }
  }
  if (stats.processed == 0) {
    return stats;
  }
  const auto n = static_cast<double>(stats.processed);
  std::array<double, kStageCount> sq{};
  for (int s = 0; s < kStageCount; ++s) {
    stats.stages[s].mean = sum[s] / n;
  }
  for (const StageReport& r : reports) {
    if (r.dropped) {
      continue;
    }
    for (int s = 0; s < kStageCount; ++s) {
      const double d = r.micros[s] - stats.stages[s].mean;
      sq[s] += d * d;
    }
  }
  const double total = stats.stages[static_cast<int>(Stage::kTotal)].mean;
  for (int s = 0; s < kStageCount; ++s) {
    stats.stages[s].stddev = std::sqrt(sq[s] / n);
    stats.stages[s].share = total > 0.0 ? stats.stages[s].mean / total : 0.0;
  }
  if (total > 0.0) {
    stats.fps = 1e6 / total;
    stats.total_cv = stats.stages[static_cast<int>(Stage::kTotal)].stddev / total;
  }
  return stats;
}

void write_timings_csv(const std::string& path, std::span<const StageReport> reports) {
  std::ofstream out = open_output(path);
  out << "frame_id,stage,micros,bytes_h2b,bytes_b2h,dropped\n";
  for (const StageReport& r : reports) {
    for (int s = 0; s < kStageCount; ++s) {
      out << r.frame_id << ',' << stage_name(s) << ',' << format_double("%.3f", r.micros[s]) << ','
          << r.bytes[s].host_to_backend << ',' << r.bytes[s].backend_to_host << ',' << (r.dropped ? 1 : 0) << '\n';
    }
  }
}

void write_frames_csv(const std::string& path, std::span<const StageReport> reports) {
  std::ofstream out = open_output(path);
  out << "frame_id,timestamp,status,stereo_matches,associations,inliers,keyframe,dropped\n";
  for (const StageReport& r : reports) {
    out << r.frame_id << ',' << format_double("%.9f", r.timestamp) << ',' << status_name(r.status) << ','
        << r.stereo_matches << ',' << r.associations << ',' << r.inliers << ',' << (r.keyframe ? 1 : 0) << ','
        << (r.dropped ? 1 : 0) << '\n';
  }
}

std::string format_summary(const RunStats& stats) {
  std::ostringstream out;
  out << "frames " << stats.frames << '\n';
  out << "processed " << stats.processed << '\n';
  out << "drops " << stats.drops << '\n';
  out << "fps " << format_double("%.3f", stats.fps) << '\n';
  out << "total_cv " << format_double("%.6f", stats.total_cv) << '\n';
  out << "stage mean_us stddev_us share\n";
  for (int s = 0; s < kStageCount; ++s) {
    const StageStats& st = stats.stages[s];
    out << stage_name(s) << ' ' << format_double("%.3f", st.mean) << ' ' << format_double("%.3f", st.stddev) << ' '
        << format_double("%.4f", st.share) << '\n';
  }
  return out.str();
}

void write_summary(const std::string& path, const RunStats& stats) {
  std::ofstream out = open_output(path);
  out << format_summary(stats);
}

void write_matches_csv(const std::string& path, std::span<const FrameMatches> frames) {
  std::ofstream out = open_output(path);
  out << "frame_id,left_idx,right_idx,disparity,depth,distance\n";
  for (const FrameMatches& f : frames) {
    for (const StereoMatch& m : f.matches) {
      out << f.frame_id << ',' << m.left << ',' << m.right << ',' << format_double("%.9g", m.disparity) << ','
          << format_double("%.9g", m.depth) << ',' << m.distance << '\n';
    }
  }
}

}  // namespace stereotrack
