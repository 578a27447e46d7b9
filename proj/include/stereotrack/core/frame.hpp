#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "stereotrack/core/camera.hpp"
#include "stereotrack/core/features.hpp"
#include "stereotrack/core/map_point.hpp"
#include "stereotrack/core/pose.hpp"

namespace stereotrack {

/// Fixed-cell spatial index over a keypoint list. Each keypoint index lands
/// in exactly one cell.
class FeatureGrid {
 public:
  void build(const std::vector<KeyPoint>& keypoints, int width, int height, int cell_size);

  // Indices of keypoints within `radius` (square window, like the cell
  // lookup) of (u, v) whose octave lies in [min_octave, max_octave].
  // Output is sorted ascending.
  void query(const std::vector<KeyPoint>& keypoints, double u, double v, double radius, int min_octave,
             int max_octave, std::vector<std::uint32_t>& out) const;

  int cols() const { return cols_; }
  int rows() const { return rows_; }
  int cell_size() const { return cell_size_; }
  const std::vector<std::uint32_t>& cell(int col, int row) const { return cells_[row * cols_ + col]; }
  std::size_t byte_size() const;

 private:
  int cols_ = 0;
  int rows_ = 0;
  int cell_size_ = 48;
  std::vector<std::vector<std::uint32_t>> cells_;
};

inline constexpr float kNoDepth = -1.0F;

/// Everything the tracker knows about one stereo image pair.
struct Frame {
  std::uint64_t id = 0;
  double timestamp = 0.0;

  std::vector<KeyPoint> keypoints_left;
  std::vector<KeyPoint> keypoints_right;
  std::vector<Descriptor> descriptors_left;
  std::vector<Descriptor> descriptors_right;

  std::vector<float> depth;    // per left keypoint, kNoDepth when unmatched
  std::vector<float> right_u;  // matched right coordinate (pinhole), -1 otherwise
  std::vector<std::optional<MapPointId>> map_points;  // per left keypoint slot

  Pose pose;  // world to camera
  FeatureGrid grid;

  std::size_t size() const { return keypoints_left.size(); }
  bool has_depth(std::size_t i) const { return depth[i] > 0.0F; }
  std::size_t associated_count() const;

  // Resets per-keypoint arrays to match keypoints_left and builds the grid.
  void finalize_features(int width, int height, int cell_size);

  // World position of keypoint i at its stereo depth.
  Eigen::Vector3d unproject_world(std::size_t i, const Camera& cam) const;
};

struct KeyFrame {
  KeyFrameId id = 0;
  Frame frame;

  const std::vector<std::optional<MapPointId>>& map_points() const { return frame.map_points; }
};

}  // namespace stereotrack
