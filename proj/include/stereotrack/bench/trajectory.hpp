#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "stereotrack/core/pose.hpp"

namespace stereotrack {

/// Timestamped camera-to-world poses with strictly increasing timestamps.
struct Trajectory {
  std::vector<double> timestamps;
  std::vector<Pose> poses;

  std::size_t size() const { return timestamps.size(); }
  bool empty() const { return timestamps.empty(); }
  // Throws Error when the timestamp does not increase.
  void push_back(double timestamp, const Pose& pose);
};

// One line per pose: "timestamp tx ty tz qx qy qz qw".
void write_trajectory(const std::string& path, const Trajectory& traj);
std::string format_trajectory_line(double timestamp, const Pose& pose);
// Blank lines and lines starting with '#' are skipped. Throws ParseError
// naming the line on malformed rows.
Trajectory read_trajectory(const std::string& path);

// Index pairs (estimate, reference) of nearest timestamps within `tolerance`.
std::vector<std::pair<std::size_t, std::size_t>> associate(const Trajectory& estimate, const Trajectory& reference,
                                                            double tolerance);

struct AteResult {
  double rmse = 0.0;
  std::size_t pairs = 0;
  double scale = 1.0;
};

/// Aligns the estimate onto the reference (rigid, or similarity with
/// `with_scale`) and returns the translational RMSE. Throws
/// InsufficientOverlapError below 3 associated pairs.
AteResult compute_ate(const Trajectory& estimate, const Trajectory& reference, double tolerance = 0.01,
                      bool with_scale = false);

/// Translational RMSE of relative motions over `delta` associated steps.
double compute_rpe(const Trajectory& estimate, const Trajectory& reference, std::size_t delta = 1,
                   double tolerance = 0.01);

}  // namespace stereotrack
