#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stereotrack/bench/trajectory.hpp"
#include "stereotrack/pipeline/imu.hpp"

namespace stereotrack {

struct StereoPair {
  std::int64_t timestamp_ns = 0;
  double timestamp = 0.0;  // seconds
  std::string left_path;
  std::string right_path;
};

struct CameraRow {
  std::int64_t timestamp_ns = 0;
  double timestamp = 0.0;
  std::string filename;
};

/// A stereo-inertial sequence in ASL layout.
struct Sequence {
  std::vector<StereoPair> pairs;
  std::vector<ImuSample> imu;
  std::optional<Trajectory> ground_truth;
  std::size_t unmatched_left = 0;
  std::size_t unmatched_right = 0;
};

// Seconds from integer nanoseconds: whole seconds plus the remainder.
double ns_to_seconds(std::int64_t ns);

// "timestamp_ns,filename" rows; header and comment lines skipped.
std::vector<CameraRow> read_camera_csv(const std::string& path);
// "timestamp_ns,wx,wy,wz,ax,ay,az" rows.
std::vector<ImuSample> read_imu_csv(const std::string& path);
// "timestamp_ns,px,py,pz,qw,qx,qy,qz[,...]" rows (ASL ground truth).
Trajectory read_groundtruth_csv(const std::string& path);

// For every left row, the nearest right row within `tolerance_ns`; returns
// right indices (-1 when none).
std::vector<std::int64_t> associate_stereo(const std::vector<CameraRow>& left, const std::vector<CameraRow>& right,
                                           std::int64_t tolerance_ns);

/// EuRoC-style directory: cam0/, cam1/, imu0/ (optionally under mav0/),
/// ground truth from state_groundtruth_estimate0/ when present.
Sequence load_euroc(const std::string& dir, double stereo_tolerance = 0.005);
/// TUM-VI layout: same as EuRoC, ground truth from mocap0/.
Sequence load_tumvi(const std::string& dir, double stereo_tolerance = 0.005);

}  // namespace stereotrack
