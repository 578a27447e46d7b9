#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace stereotrack {

using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Rigid-body transform. In the tracker a Pose is world-to-camera (T_cw);
/// trajectories store camera-to-world.
class Pose {
 public:
  Pose() : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}
  Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
      : rotation_(rotation), translation_(translation) {}
  Pose(const Eigen::Quaterniond& q, const Eigen::Vector3d& translation)
      : rotation_(q.normalized().toRotationMatrix()), translation_(translation) {}

  static Pose Identity() { return Pose(); }

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  Eigen::Quaterniond quaternion() const;
  Eigen::Matrix4d matrix() const;

  Pose inverse() const;

  // Optical centre expressed in the source frame, -R^T t.
  Eigen::Vector3d center() const { return -rotation_.transpose() * translation_; }

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return rotation_ * p + translation_; }

  // True when the rotation is orthonormal with det +1 within tol.
  bool is_valid(double tol = 1e-9) const;

  bool operator==(const Pose& other) const {
    return rotation_ == other.rotation_ && translation_ == other.translation_;
  }

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

/// Transform applying b first, then a. The product rotation is projected
/// back onto SO(3) when its orthonormality drift exceeds 1e-9.
Pose se3_compose(const Pose& a, const Pose& b);

inline Pose operator*(const Pose& a, const Pose& b) { return se3_compose(a, b); }

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

// Rodrigues exponential and its inverse.
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& omega);
Eigen::Vector3d so3_log(const Eigen::Matrix3d& rotation);

// Twist ordered (omega, v). Maps to the pose (so3_exp(omega), v); used as a
// small left-multiplied update, so the V(omega) coupling is not needed.
Pose se3_exp(const Vector6d& twist);

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& rotation);

}  // namespace stereotrack
