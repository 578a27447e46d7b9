#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "stereotrack/core/camera.hpp"
#include "stereotrack/core/frame.hpp"
#include "stereotrack/core/map.hpp"
#include "stereotrack/core/pose.hpp"
#include "stereotrack/core/scale.hpp"

namespace stereotrack {

struct PoseOptConfig {
  bool enabled = false;
  int max_iterations = 20;
  double huber_delta = std::sqrt(5.991);  // pixels
  double tolerance = 1e-6;                // update norm
  double chi2_threshold = 5.991;
  int outlier_rounds = 2;

  void validate() const;
};

/// One 3D-2D association.
struct PoseObservation {
  Eigen::Vector3d world;
  Eigen::Vector2d pixel;
  int octave = 0;
};

enum class PoseOptStatus { kOptimized, kDisabled, kSkipped, kDegenerate };

struct PoseOptResult {
  Pose pose;
  PoseOptStatus status = PoseOptStatus::kSkipped;
  std::vector<std::uint8_t> outlier;  // per observation
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::vector<double> cost_history;  // robust cost after each accepted step
  std::size_t inliers() const;
};

// d(pixel)/d(xi) for the left-multiplied twist xi = (omega, v), evaluated
// at xi = 0: projection of exp(xi) * pose * world.
Eigen::Matrix<double, 2, 6> reprojection_jacobian(const Camera& cam, const Pose& pose, const Eigen::Vector3d& world);

// Sum of Huber-robustified, octave-weighted squared reprojection errors.
double robust_cost(const Camera& cam, const Pose& pose, std::span<const PoseObservation> obs,
                   std::span<const std::uint8_t> outlier, const ScaleLevels& scales, const PoseOptConfig& cfg);

PoseOptResult optimize_pose(const Camera& cam, const Pose& initial, std::span<const PoseObservation> obs,
                            const ScaleLevels& scales, const PoseOptConfig& cfg);

// Gathers the frame's associations from the map (slot order).
void collect_observations(const Frame& frame, const Map& map, std::vector<PoseObservation>& obs,
                          std::vector<std::uint32_t>& keypoints);

// Optimizes frame.pose in place from its associations; outlier slots are
// cleared. Returns the result for inspection.
PoseOptResult optimize_frame_pose(Frame& frame, const Map& map, const Camera& cam, const ScaleLevels& scales,
                                  const PoseOptConfig& cfg);

}  // namespace stereotrack
