#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stereotrack/bench/trajectory.hpp"
#include "stereotrack/core/camera.hpp"
#include "stereotrack/core/features.hpp"
#include "stereotrack/core/image.hpp"
#include "stereotrack/pipeline/imu.hpp"
#include "stereotrack/pipeline/tracker.hpp"

namespace stereotrack {

enum class TrajectoryKind { kStatic, kLine, kCircle };

TrajectoryKind parse_trajectory_kind(const std::string& name);
std::string trajectory_kind_name(TrajectoryKind kind);

PinholeCamera default_synthetic_camera();

struct SyntheticSceneConfig {
  int landmark_count = 2000;
  double extent = 4.0;  // side of the landmark box (m)
  Eigen::Vector3d center{0.0, 0.0, 4.0};
  TrajectoryKind trajectory = TrajectoryKind::kCircle;
  double frame_rate = 20.0;
  int frame_count = 300;
  double radius = 0.5;         // circle
  double angular_rate = 0.5;   // circle, rad/s
  double line_length = 1.0;    // line, total travel along x
  double image_noise = 0.0;    // intensity sigma
  double keypoint_noise = 0.5; // pixel sigma, feature-level mode
  int descriptor_flips = 4;
  double square_size = 0.08;   // rendered landmark side (m)
  int texture_cells = 4;       // per side
  double imu_rate = 200.0;
  double gyro_noise = 0.0;
  double accel_noise = 0.0;
  Eigen::Vector3d gravity{0.0, 9.81, 0.0};
  int levels = 8;
  double scale_factor = 1.2;
  int edge_threshold = 19;
  PinholeCamera camera = default_synthetic_camera();

  void validate() const;
};

struct SyntheticFrame {
  double timestamp = 0.0;
  Pose pose;  // world to camera
  FeatureInput features;
  std::vector<int> left_landmark;  // per left keypoint
  std::vector<int> right_landmark;
};

/// Deterministic scene: landmarks, analytic camera path and IMU stream.
class SyntheticScene {
 public:
  SyntheticScene(const SyntheticSceneConfig& cfg, std::uint64_t seed);

  const SyntheticSceneConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t frame_count() const { return static_cast<std::size_t>(cfg_.frame_count); }

  const std::vector<Eigen::Vector3d>& landmarks() const { return landmarks_; }
  const std::vector<Descriptor>& landmark_descriptors() const { return descriptors_; }

  double frame_time(std::size_t i) const;
  // Camera centre, its first two derivatives, and orientation at time t.
  Eigen::Vector3d position(double t) const;
  Eigen::Vector3d velocity(double t) const;
  Eigen::Vector3d acceleration(double t) const;
  Eigen::Matrix3d world_from_camera_rotation(double t) const;
  Pose pose_at(double t) const;  // world to camera

  Trajectory ground_truth() const;  // camera to world
  std::vector<double> timestamps() const;

  const std::vector<ImuSample>& imu() const { return imu_; }
  // Samples covering [frame i-1, frame i]; empty for frame 0.
  std::span<const ImuSample> imu_between(std::size_t i) const;

  // Keypoints from projected landmarks with pixel noise.
  SyntheticFrame features(std::size_t i) const;
  // Rendered stereo pair of textured squares.
  void render(std::size_t i, GrayImage& left, GrayImage& right) const;

 private:
  void render_view(const Pose& cam_from_world, double u_shift, std::uint64_t noise_seed, GrayImage& out) const;

  SyntheticSceneConfig cfg_;
  std::uint64_t seed_;
  std::vector<Eigen::Vector3d> landmarks_;
  std::vector<double> reference_depth_;
  std::vector<Descriptor> descriptors_;
  std::vector<std::vector<std::uint8_t>> textures_;
  std::vector<ImuSample> imu_;
  std::vector<std::size_t> imu_frame_index_;
};

}  // namespace stereotrack
