#include "stereotrack/bench/trajectory.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stereotrack/core/error.hpp"

namespace stereotrack {

void Trajectory::push_back(double timestamp, const Pose& pose) {
  if (!timestamps.empty() && !(timestamp > timestamps.back())) {
    throw Error("trajectory timestamps must increase strictly");
  }
  timestamps.push_back(timestamp);
  poses.push_back(pose);
}

std::string format_trajectory_line(double timestamp, const Pose& pose) {
  const Eigen::Quaterniond q = pose.quaternion();
  const Eigen::Vector3d& t = pose.translation();
  char buf[256];
  // Adding +0.0 folds negative zero.
  std::snprintf(buf, sizeof(buf), "%.9f %.9g %.9g %.9g %.9g %.9g %.9g %.9g", timestamp, t.x() + 0.0, t.y() + 0.0,
                t.z() + 0.0, q.x() + 0.0, q.y() + 0.0, q.z() + 0.0, q.w() + 0.0);
  return buf;
}

void write_trajectory(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write trajectory: " + path);
  }
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out << format_trajectory_line(traj.timestamps[i], traj.poses[i]) << '\n';
  }
}

Trajectory read_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DatasetError("cannot open trajectory: " + path);
  }
  Trajectory traj;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') {
      continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double v[8];
    for (double& x : v) {
      if (!(ss >> x)) {
        throw ParseError(path, lineno, "expected 8 numbers");
      }
    }
    std::string extra;
    if (ss >> extra) {
      throw ParseError(path, lineno, "trailing fields");
    }
    const Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (!(q.norm() > 1e-9) || !std::isfinite(q.norm())) {
      throw ParseError(path, lineno, "invalid quaternion");
    }
    if (!traj.empty() && !(v[0] > traj.timestamps.back())) {
      throw ParseError(path, lineno, "timestamps must increase");
    }
    traj.push_back(v[0], Pose(q, Eigen::Vector3d(v[1], v[2], v[3])));
  }
  return traj;
}

std::vector<std::pair<std::size_t, std::size_t>> associate(const Trajectory& estimate, const Trajectory& reference,
                                                            double tolerance) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  const auto& ref = reference.timestamps;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double t = estimate.timestamps[i];
    const auto hi = static_cast<std::size_t>(std::lower_bound(ref.begin(), ref.end(), t) - ref.begin());
    std::size_t best = ref.size();
    double best_gap = tolerance;
    // Lower index first so that equal gaps keep it.
    for (std::size_t cand : {hi - 1, hi}) {
      if (cand >= ref.size()) {
        continue;
      }
      const double gap = std::abs(ref[cand] - t);
      if (gap <= best_gap && (best == ref.size() || gap < best_gap)) {
        best_gap = gap;
        best = cand;
      }
    }
    if (best < ref.size()) {
      pairs.emplace_back(i, best);
    }
  }
  return pairs;
}

AteResult compute_ate(const Trajectory& estimate, const Trajectory& reference, double tolerance, bool with_scale) {
  const auto pairs = associate(estimate, reference, tolerance);
  if (pairs.size() < 3) {
    throw InsufficientOverlapError("compute_ate: fewer than 3 associated poses");
  }
  Eigen::Matrix3Xd src(3, pairs.size());
  Eigen::Matrix3Xd dst(3, pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    src.col(static_cast<Eigen::Index>(k)) = estimate.poses[pairs[k].first].translation();
    dst.col(static_cast<Eigen::Index>(k)) = reference.poses[pairs[k].second].translation();
  }
  const Eigen::Matrix4d t = Eigen::umeyama(src, dst, with_scale);
  const Eigen::Matrix3d sr = t.topLeftCorner<3, 3>();
  const Eigen::Vector3d tr = t.topRightCorner<3, 1>();
  double sum = 0.0;
  for (Eigen::Index k = 0; k < src.cols(); ++k) {
    sum += (sr * src.col(k) + tr - dst.col(k)).squaredNorm();
  }
  AteResult r;
  r.pairs = pairs.size();
  r.rmse = std::sqrt(sum / static_cast<double>(pairs.size()));
  r.scale = with_scale ? std::cbrt(sr.determinant()) : 1.0;
  return r;
}

double compute_rpe(const Trajectory& estimate, const Trajectory& reference, std::size_t delta, double tolerance) {
  const auto pairs = associate(estimate, reference, tolerance);
  if (pairs.size() < 3) {
    throw InsufficientOverlapError("compute_rpe: fewer than 3 associated poses");
  }
  if (delta == 0 || delta >= pairs.size()) {
    throw InsufficientOverlapError("compute_rpe: delta exceeds the associated span");
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i + delta < pairs.size(); ++i) {
    const Pose& p0 = estimate.poses[pairs[i].first];
    const Pose& p1 = estimate.poses[pairs[i + delta].first];
    const Pose& q0 = reference.poses[pairs[i].second];
    const Pose& q1 = reference.poses[pairs[i + delta].second];
    const Pose rel_est = p0.inverse() * p1;
    const Pose rel_ref = q0.inverse() * q1;
    const Pose err = rel_ref.inverse() * rel_est;
    sum += err.translation().squaredNorm();
    ++n;
  }
  return std::sqrt(sum / static_cast<double>(n));
}

}  // namespace stereotrack
