#pragma once

#include <optional>
#include <span>

#include <Eigen/Core>

#include "stereotrack/core/pose.hpp"

namespace stereotrack {

struct ImuSample {
  double timestamp = 0.0;                            // seconds
  Eigen::Vector3d gyro = Eigen::Vector3d::Zero();   // rad/s, body frame
  Eigen::Vector3d accel = Eigen::Vector3d::Zero();  // m/s^2 specific force, body frame
};

/// Motion between the first and last sample, expressed in the body frame
/// at the first sample. Gravity is already compensated.
struct ImuDelta {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double dt = 0.0;
};

/// Midpoint integration over consecutive samples. `gravity` is given in the
/// body frame of the first sample. Throws StreamError on non-increasing
/// timestamps.
ImuDelta preintegrate_imu(std::span<const ImuSample> samples, const Eigen::Vector3d& gravity);

/// Kinematic state of the IMU body used for prediction.
struct ImuState {
  Pose world_from_body;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // world frame
};

ImuState propagate_imu(const ImuState& state, const ImuDelta& delta);

/// Predicted world-to-camera pose. With an IMU delta the previous camera pose
/// is carried through the body motion (`cam_from_imu` maps IMU to camera
/// coordinates); without, the previous inter-frame motion is repeated.
Pose predict_pose(const Pose& prev_pose, const Pose& prev_motion, const std::optional<ImuDelta>& imu,
                  const Eigen::Vector3d& world_velocity, const Pose& cam_from_imu = Pose::Identity());

}  // namespace stereotrack
