#pragma once

#include <array>
#include <optional>
#include <variant>

#include <Eigen/Core>

#include "stereotrack/core/pose.hpp"

namespace stereotrack {

/// Rectified pinhole stereo camera. Epipolar lines are image rows.
struct PinholeCamera {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double baseline_times_fx = 0.0;
  int width = 0;
  int height = 0;

  double baseline() const { return baseline_times_fx / fx; }

  // Throws ConfigError when an intrinsic is out of range.
  void validate() const;
};

/// Kannala-Brandt fisheye camera. right_from_left maps left-camera
/// coordinates into this camera's coordinates (identity for the left camera).
struct FisheyeCamera {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  std::array<double, 4> k{0.0, 0.0, 0.0, 0.0};
  int width = 0;
  int height = 0;
  Pose right_from_left;

  double distort(double theta) const;
  double distort_derivative(double theta) const;
  void validate() const;
};

std::optional<Eigen::Vector2d> project_pinhole(const PinholeCamera& cam, const Eigen::Vector3d& p_cam);
std::optional<Eigen::Vector2d> project_fisheye(const FisheyeCamera& cam, const Eigen::Vector3d& p_cam);

// Projection without visibility checks.
Eigen::Vector2d project_fisheye_unchecked(const FisheyeCamera& cam, const Eigen::Vector3d& p_cam);

// Unit bearing vector through a fisheye pixel.
Eigen::Vector3d unproject_fisheye(const FisheyeCamera& cam, const Eigen::Vector2d& pixel);

/// Depth in metres for a rectified disparity. Throws InvalidDisparityError
/// for disparity <= 0.
double stereo_depth_from_disparity(const PinholeCamera& cam, double disparity);

/// A left camera of either model, plus the right camera of a fisheye rig.
class Camera {
 public:
  Camera() = default;
  explicit Camera(const PinholeCamera& pinhole) : model_(pinhole) {}
  Camera(const FisheyeCamera& left, const FisheyeCamera& right) : model_(left), fisheye_right_(right) {}

  bool is_fisheye() const { return std::holds_alternative<FisheyeCamera>(model_); }
  const PinholeCamera& pinhole() const { return std::get<PinholeCamera>(model_); }
  const FisheyeCamera& fisheye() const { return std::get<FisheyeCamera>(model_); }
  const FisheyeCamera& fisheye_right() const { return fisheye_right_; }

  int width() const;
  int height() const;
  double fx() const;

  std::optional<Eigen::Vector2d> project(const Eigen::Vector3d& p_cam) const;
  Eigen::Vector2d project_unchecked(const Eigen::Vector3d& p_cam) const;

  // d(pixel)/d(p_cam).
  Eigen::Matrix<double, 2, 3> projection_jacobian(const Eigen::Vector3d& p_cam) const;

  // Point at depth z along the ray through (u, v).
  Eigen::Vector3d backproject(double u, double v, double z) const;

  // Right-camera pose relative to the left camera (left-to-right transform).
  Pose right_from_left() const;

 private:
  std::variant<PinholeCamera, FisheyeCamera> model_;
  FisheyeCamera fisheye_right_;
};

}  // namespace stereotrack
