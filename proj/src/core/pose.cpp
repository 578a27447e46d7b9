#include "stereotrack/core/pose.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace stereotrack {

Eigen::Quaterniond Pose::quaternion() const {
  Eigen::Quaterniond q(rotation_);
  q.normalize();
  return q;
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Pose Pose::inverse() const {
  const Eigen::Matrix3d rt = rotation_.transpose();
  return Pose(rt, -rt * translation_);
}

bool Pose::is_valid(double tol) const {
  const Eigen::Matrix3d gram = rotation_.transpose() * rotation_;
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) {
    return false;
  }
  return std::abs(rotation_.determinant() - 1.0) <= tol && translation_.allFinite();
}

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& rotation) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Eigen::Matrix3d u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return r;
}

Pose se3_compose(const Pose& a, const Pose& b) {
  Eigen::Matrix3d r = a.rotation() * b.rotation();
  const Eigen::Vector3d t = a.rotation() * b.translation() + a.translation();
  const Eigen::Matrix3d drift = r.transpose() * r - Eigen::Matrix3d::Identity();
  if (drift.cwiseAbs().maxCoeff() > 1e-9) {
    r = orthonormalize(r);
  }
  return Pose(r, t);
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& omega) {
  const double theta = omega.norm();
  const Eigen::Matrix3d k = skew(omega);
  if (theta < 1e-8) {
    return Eigen::Matrix3d::Identity() + k + 0.5 * k * k;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Eigen::Matrix3d::Identity() + a * k + b * k * k;
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& rotation) {
  const Eigen::AngleAxisd aa(rotation);
  return aa.angle() * aa.axis();
}

Pose se3_exp(const Vector6d& twist) {
  return Pose(so3_exp(twist.head<3>()), twist.tail<3>());
}

}  // namespace stereotrack
