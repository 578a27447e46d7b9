#include "stereotrack/pipeline/imu.hpp"

#include <string>

#include "stereotrack/core/error.hpp"

namespace stereotrack {

ImuDelta preintegrate_imu(std::span<const ImuSample> samples, const Eigen::Vector3d& gravity) {
  ImuDelta d;
  for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
    const ImuSample& a = samples[k];
    const ImuSample& b = samples[k + 1];
    const double dt = b.timestamp - a.timestamp;
    if (!(dt > 0.0)) {
      throw StreamError("preintegrate_imu: timestamps not strictly increasing at sample " + std::to_string(k + 1));
    }
    const Eigen::Vector3d omega = 0.5 * (a.gyro + b.gyro);
    const Eigen::Matrix3d r_next = d.rotation * so3_exp(omega * dt);
    const Eigen::Vector3d acc = 0.5 * (d.rotation * a.accel + r_next * b.accel) + gravity;
    d.position += d.velocity * dt + 0.5 * acc * dt * dt;
    d.velocity += acc * dt;
    d.rotation = r_next;
    d.dt += dt;
  }
  return d;
}

ImuState propagate_imu(const ImuState& state, const ImuDelta& delta) {
  const Eigen::Matrix3d& r = state.world_from_body.rotation();
  const Eigen::Vector3d& p = state.world_from_body.translation();
  ImuState next;
  next.world_from_body = Pose(orthonormalize(r * delta.rotation), p + state.velocity * delta.dt + r * delta.position);
  next.velocity = state.velocity + r * delta.velocity;
  return next;
}

Pose predict_pose(const Pose& prev_pose, const Pose& prev_motion, const std::optional<ImuDelta>& imu,
                  const Eigen::Vector3d& world_velocity, const Pose& cam_from_imu) {
  if (!imu) {
    return prev_motion * prev_pose;
  }
  ImuState state;
  state.world_from_body = prev_pose.inverse() * cam_from_imu;
  state.velocity = world_velocity;
  const ImuState next = propagate_imu(state, *imu);
  return (next.world_from_body * cam_from_imu.inverse()).inverse();
}

}  // namespace stereotrack
