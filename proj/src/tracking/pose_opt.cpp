#include "stereotrack/tracking/pose_opt.hpp"

#include <Eigen/Dense>

#include "stereotrack/core/error.hpp"

namespace stereotrack {
namespace {

constexpr int kMinObservations = 6;
constexpr int kMaxHalvings = 12;
// Robust cost charged for an observation that falls behind the camera.
constexpr double kBehindPenaltyPixels = 1e3;

double huber(double chi2, double delta) {
  if (chi2 <= delta * delta) {
    return chi2;
  }
  return 2.0 * delta * std::sqrt(chi2) - delta * delta;
}

double chi2_of(const Camera& cam, const Pose& pose, const PoseObservation& o, const ScaleLevels& scales,
               bool& behind) {
  const Eigen::Vector3d pc = pose * o.world;
  behind = !(pc.z() > 1e-6);
  if (behind) {
    return 0.0;
  }
  const Eigen::Vector2d e = o.pixel - cam.project_unchecked(pc);
  return e.squaredNorm() * scales.inv_sigma2[o.octave];
}

std::size_t active_count(std::span<const std::uint8_t> outlier) {
  std::size_t n = 0;
  for (std::uint8_t f : outlier) {
    n += f == 0 ? 1 : 0;
  }
  return n;
}

}  // namespace

void PoseOptConfig::validate() const {
  if (max_iterations < 1) {
    throw ConfigError("pose_opt: max_iterations must be at least 1");
  }
  if (!(huber_delta > 0.0)) {
    throw ConfigError("pose_opt: huber_delta must be positive");
  }
  if (!(tolerance > 0.0) || !(chi2_threshold > 0.0) || outlier_rounds < 1) {
    throw ConfigError("pose_opt: tolerance, chi2_threshold and outlier_rounds must be positive");
  }
}

std::size_t PoseOptResult::inliers() const { return active_count(outlier); }

Eigen::Matrix<double, 2, 6> reprojection_jacobian(const Camera& cam, const Pose& pose, const Eigen::Vector3d& world) {
  const Eigen::Vector3d pc = pose * world;
  Eigen::Matrix<double, 3, 6> dp;
  dp.leftCols<3>() = -skew(pc);
  dp.rightCols<3>() = Eigen::Matrix3d::Identity();
  return cam.projection_jacobian(pc) * dp;
}

double robust_cost(const Camera& cam, const Pose& pose, std::span<const PoseObservation> obs,
                   std::span<const std::uint8_t> outlier, const ScaleLevels& scales, const PoseOptConfig& cfg) {
  double cost = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (!outlier.empty() && outlier[i] != 0) {
      continue;
    }
    bool behind = false;
    const double chi2 = chi2_of(cam, pose, obs[i], scales, behind);
    cost += behind ? huber(kBehindPenaltyPixels * kBehindPenaltyPixels, cfg.huber_delta) : huber(chi2, cfg.huber_delta);
  }
  return cost;
}

PoseOptResult optimize_pose(const Camera& cam, const Pose& initial, std::span<const PoseObservation> obs,
                            const ScaleLevels& scales, const PoseOptConfig& cfg) {
  PoseOptResult result;
  result.pose = initial;
  result.outlier.assign(obs.size(), 0);
  if (!cfg.enabled) {
    result.status = PoseOptStatus::kDisabled;
    return result;
  }
  if (obs.size() < static_cast<std::size_t>(kMinObservations)) {
    result.status = PoseOptStatus::kSkipped;
    return result;
  }
  Pose pose = initial;
  double cost = robust_cost(cam, pose, obs, result.outlier, scales, cfg);
  result.initial_cost = cost;
  result.cost_history.push_back(cost);
  const double delta = cfg.huber_delta;

  for (int round = 0; round < cfg.outlier_rounds; ++round) {
    if (active_count(result.outlier) < static_cast<std::size_t>(kMinObservations)) {
      break;
    }
    for (int it = 0; it < cfg.max_iterations; ++it) {
      Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
      Vector6d g = Vector6d::Zero();
      for (std::size_t i = 0; i < obs.size(); ++i) {
        if (result.outlier[i] != 0) {
          continue;
        }
        const Eigen::Vector3d pc = pose * obs[i].world;
        if (!(pc.z() > 1e-6)) {
          continue;
        }
        const Eigen::Vector2d r = obs[i].pixel - cam.project_unchecked(pc);
        const double info = scales.inv_sigma2[obs[i].octave];
        const double chi2 = r.squaredNorm() * info;
        const double w = chi2 <= delta * delta ? 1.0 : delta / std::sqrt(chi2);
        const Eigen::Matrix<double, 2, 6> j = -reprojection_jacobian(cam, pose, obs[i].world);
        h.noalias() += (w * info) * j.transpose() * j;
        g.noalias() += (w * info) * j.transpose() * r;
      }
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(h);
      const double max_ev = eig.eigenvalues().maxCoeff();
      const double min_ev = eig.eigenvalues().minCoeff();
      if (!std::isfinite(max_ev) || !(max_ev > 0.0) || min_ev <= 1e-12 * max_ev) {
        if (round == 0 && it == 0) {
          result.pose = initial;
          result.status = PoseOptStatus::kDegenerate;
          result.outlier.assign(obs.size(), 0);
          return result;
        }
        break;
      }
      const Vector6d dx = -h.ldlt().solve(g);
      double step = 1.0;
      bool accepted = false;
      Pose candidate;
      double candidate_cost = cost;
      for (int k = 0; k < kMaxHalvings; ++k) {
        candidate = se3_exp(step * dx) * pose;
        candidate_cost = robust_cost(cam, candidate, obs, result.outlier, scales, cfg);
        if (candidate_cost <= cost) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        break;
      }
      pose = candidate;
      cost = candidate_cost;
      result.cost_history.push_back(cost);
      ++result.iterations;
      if ((step * dx).norm() < cfg.tolerance) {
        break;
      }
    }
    // Outliers stay outliers, so the robust cost never increases.
    bool changed = false;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      if (result.outlier[i] != 0) {
        continue;
      }
      bool behind = false;
      const double chi2 = chi2_of(cam, pose, obs[i], scales, behind);
      if (behind || chi2 > cfg.chi2_threshold) {
        result.outlier[i] = 1;
        changed = true;
      }
    }
    if (!changed) {
      break;
    }
    cost = robust_cost(cam, pose, obs, result.outlier, scales, cfg);
    result.cost_history.push_back(cost);
  }
  result.pose = pose;
  result.final_cost = cost;
  result.status = PoseOptStatus::kOptimized;
  return result;
}

void collect_observations(const Frame& frame, const Map& map, std::vector<PoseObservation>& obs,
                          std::vector<std::uint32_t>& keypoints) {
  obs.clear();
  keypoints.clear();
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (!frame.map_points[i]) {
      continue;
    }
    const MapPoint* p = map.point(*frame.map_points[i]);
    if (p == nullptr) {
      continue;
    }
    const KeyPoint& kp = frame.keypoints_left[i];
    obs.push_back(PoseObservation{p->position, Eigen::Vector2d(kp.u, kp.v), kp.octave});
    keypoints.push_back(static_cast<std::uint32_t>(i));
  }
}

PoseOptResult optimize_frame_pose(Frame& frame, const Map& map, const Camera& cam, const ScaleLevels& scales,
                                  const PoseOptConfig& cfg) {
  std::vector<PoseObservation> obs;
  std::vector<std::uint32_t> keypoints;
  collect_observations(frame, map, obs, keypoints);
  PoseOptResult result = optimize_pose(cam, frame.pose, obs, scales, cfg);
  if (result.status == PoseOptStatus::kOptimized) {
    frame.pose = result.pose;
    for (std::size_t k = 0; k < keypoints.size(); ++k) {
      if (result.outlier[k] != 0) {
        frame.map_points[keypoints[k]].reset();
      }
    }
  }
  return result;
}

}  // namespace stereotrack
