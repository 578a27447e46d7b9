#include "stereotrack/core/camera.hpp"

#include <algorithm>
#include <cmath>

#include "stereotrack/core/error.hpp"

namespace stereotrack {
namespace {

bool inside(double u, double v, int width, int height) {
  return u >= 0.0 && v >= 0.0 && u < static_cast<double>(width) && v < static_cast<double>(height);
}

}  // namespace

void PinholeCamera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !(baseline_times_fx > 0.0)) {
    throw ConfigError("pinhole camera: fx, fy and baseline_times_fx must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw ConfigError("pinhole camera: image size must be positive");
  }
  if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height) {
    throw ConfigError("pinhole camera: principal point outside the image");
  }
}

double FisheyeCamera::distort(double theta) const {
  const double t2 = theta * theta;
  return theta * (1.0 + t2 * (k[0] + t2 * (k[1] + t2 * (k[2] + t2 * k[3]))));
}

double FisheyeCamera::distort_derivative(double theta) const {
  const double t2 = theta * theta;
  return 1.0 + t2 * (3.0 * k[0] + t2 * (5.0 * k[1] + t2 * (7.0 * k[2] + t2 * 9.0 * k[3])));
}

void FisheyeCamera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || width <= 0 || height <= 0) {
    throw ConfigError("fisheye camera: focal lengths and image size must be positive");
  }
  if (!right_from_left.is_valid(1e-6)) {
    throw ConfigError("fisheye camera: extrinsic rotation is not orthonormal");
  }
}

std::optional<Eigen::Vector2d> project_pinhole(const PinholeCamera& cam, const Eigen::Vector3d& p) {
  if (p.z() <= 1e-6) {
    return std::nullopt;
  }
  const double inv_z = 1.0 / p.z();
  const double u = cam.fx * p.x() * inv_z + cam.cx;
  const double v = cam.fy * p.y() * inv_z + cam.cy;
  if (!inside(u, v, cam.width, cam.height)) {
    return std::nullopt;
  }
  return Eigen::Vector2d(u, v);
}

Eigen::Vector2d project_fisheye_unchecked(const FisheyeCamera& cam, const Eigen::Vector3d& p) {
  const double r = std::hypot(p.x(), p.y());
  if (r < 1e-15) {
    return Eigen::Vector2d(cam.cx, cam.cy);
  }
  const double theta = std::atan2(r, p.z());
  const double d = cam.distort(theta);
  return Eigen::Vector2d(cam.fx * d * p.x() / r + cam.cx, cam.fy * d * p.y() / r + cam.cy);
}

std::optional<Eigen::Vector2d> project_fisheye(const FisheyeCamera& cam, const Eigen::Vector3d& p) {
  if (p.norm() < 1e-12) {
    return std::nullopt;
  }
  const Eigen::Vector2d uv = project_fisheye_unchecked(cam, p);
  if (!inside(uv.x(), uv.y(), cam.width, cam.height)) {
    return std::nullopt;
  }
  return uv;
}

Eigen::Vector3d unproject_fisheye(const FisheyeCamera& cam, const Eigen::Vector2d& pixel) {
  const double mx = (pixel.x() - cam.cx) / cam.fx;
  const double my = (pixel.y() - cam.cy) / cam.fy;
  const double rd = std::hypot(mx, my);
  if (rd < 1e-15) {
    return Eigen::Vector3d::UnitZ();
  }
  // Newton on d(theta) = rd.
  double theta = rd;
  for (int i = 0; i < 20; ++i) {
    const double f = cam.distort(theta) - rd;
    const double df = cam.distort_derivative(theta);
    const double step = f / df;
    theta -= step;
    if (std::abs(step) < 1e-14) {
      break;
    }
  }
  const double s = std::sin(theta);
  return Eigen::Vector3d(s * mx / rd, s * my / rd, std::cos(theta));
}

double stereo_depth_from_disparity(const PinholeCamera& cam, double disparity) {
  if (!(disparity > 0.0)) {
    throw InvalidDisparityError("disparity must be positive, got " + std::to_string(disparity));
  }
  return cam.baseline_times_fx / disparity;
}

int Camera::width() const {
  return is_fisheye() ? fisheye().width : pinhole().width;
}

int Camera::height() const {
  return is_fisheye() ? fisheye().height : pinhole().height;
}

double Camera::fx() const {
  return is_fisheye() ? fisheye().fx : pinhole().fx;
}

std::optional<Eigen::Vector2d> Camera::project(const Eigen::Vector3d& p) const {
  return is_fisheye() ? project_fisheye(fisheye(), p) : project_pinhole(pinhole(), p);
}

Eigen::Vector2d Camera::project_unchecked(const Eigen::Vector3d& p) const {
  if (is_fisheye()) {
    return project_fisheye_unchecked(fisheye(), p);
  }
  const PinholeCamera& c = pinhole();
  return Eigen::Vector2d(c.fx * p.x() / p.z() + c.cx, c.fy * p.y() / p.z() + c.cy);
}

Eigen::Matrix<double, 2, 3> Camera::projection_jacobian(const Eigen::Vector3d& p) const {
  Eigen::Matrix<double, 2, 3> j;
  if (!is_fisheye()) {
    const PinholeCamera& c = pinhole();
    const double inv_z = 1.0 / p.z();
    const double inv_z2 = inv_z * inv_z;
    j << c.fx * inv_z, 0.0, -c.fx * p.x() * inv_z2,
         0.0, c.fy * inv_z, -c.fy * p.y() * inv_z2;
    return j;
  }
  const FisheyeCamera& c = fisheye();
  const double x = p.x();
  const double y = p.y();
  const double z = p.z();
  const double r2 = x * x + y * y;
  const double r = std::sqrt(r2);
  if (r < 1e-9 * std::max(1.0, std::abs(z))) {
    // d(theta) ~ theta ~ r / z near the axis: pinhole limit.
    const double inv_z = 1.0 / z;
    j << c.fx * inv_z, 0.0, -c.fx * x * inv_z * inv_z,
         0.0, c.fy * inv_z, -c.fy * y * inv_z * inv_z;
    return j;
  }
  const double rho2 = r2 + z * z;
  const double theta = std::atan2(r, z);
  const double d = c.distort(theta);
  const double dd = c.distort_derivative(theta);
  const Eigen::Vector3d dtheta(z * x / (r * rho2), z * y / (r * rho2), -r / rho2);
  const double r3 = r2 * r;
  // Derivatives of x/r and y/r.
  const Eigen::Vector3d dxr(y * y / r3, -x * y / r3, 0.0);
  const Eigen::Vector3d dyr(-x * y / r3, x * x / r3, 0.0);
  j.row(0) = c.fx * (dd * (x / r) * dtheta + d * dxr).transpose();
  j.row(1) = c.fy * (dd * (y / r) * dtheta + d * dyr).transpose();
  return j;
}

Eigen::Vector3d Camera::backproject(double u, double v, double z) const {
  if (!is_fisheye()) {
    const PinholeCamera& c = pinhole();
    return Eigen::Vector3d((u - c.cx) * z / c.fx, (v - c.cy) * z / c.fy, z);
  }
  const Eigen::Vector3d ray = unproject_fisheye(fisheye(), Eigen::Vector2d(u, v));
  return ray * (z / ray.z());
}

Pose Camera::right_from_left() const {
  if (is_fisheye()) {
    return fisheye_right_.right_from_left;
  }
  return Pose(Eigen::Matrix3d::Identity(), Eigen::Vector3d(-pinhole().baseline(), 0.0, 0.0));
}

}  // namespace stereotrack
