#include "stereotrack/core/frame.hpp"

#include <algorithm>
#include <cmath>

namespace stereotrack {

void FeatureGrid::build(const std::vector<KeyPoint>& keypoints, int width, int height, int cell_size) {
  cell_size_ = cell_size;
  cols_ = std::max(1, (width + cell_size - 1) / cell_size);
  rows_ = std::max(1, (height + cell_size - 1) / cell_size);
  cells_.resize(static_cast<std::size_t>(cols_) * rows_);
  for (auto& c : cells_) {
    c.clear();
  }
  for (std::size_t i = 0; i < keypoints.size(); ++i) {
    const int cx = std::clamp(static_cast<int>(std::floor(keypoints[i].u / cell_size)), 0, cols_ - 1);
    const int cy = std::clamp(static_cast<int>(std::floor(keypoints[i].v / cell_size)), 0, rows_ - 1);
    cells_[cy * cols_ + cx].push_back(static_cast<std::uint32_t>(i));
  }
}

void FeatureGrid::query(const std::vector<KeyPoint>& keypoints, double u, double v, double radius,
                        int min_octave, int max_octave, std::vector<std::uint32_t>& out) const {
  out.clear();
  if (cells_.empty()) {
    return;
  }
  const int x0 = std::max(0, static_cast<int>(std::floor((u - radius) / cell_size_)));
  const int x1 = std::min(cols_ - 1, static_cast<int>(std::floor((u + radius) / cell_size_)));
  const int y0 = std::max(0, static_cast<int>(std::floor((v - radius) / cell_size_)));
  const int y1 = std::min(rows_ - 1, static_cast<int>(std::floor((v + radius) / cell_size_)));
  if (x0 > x1 || y0 > y1) {
    return;
  }
  for (int cy = y0; cy <= y1; ++cy) {
    for (int cx = x0; cx <= x1; ++cx) {
      for (std::uint32_t idx : cells_[cy * cols_ + cx]) {
        const KeyPoint& kp = keypoints[idx];
        if (kp.octave < min_octave || kp.octave > max_octave) {
          continue;
        }
        if (std::abs(kp.u - u) <= radius && std::abs(kp.v - v) <= radius) {
          out.push_back(idx);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
}

std::size_t FeatureGrid::byte_size() const {
  std::size_t n = 0;
  for (const auto& c : cells_) {
    n += c.size() * sizeof(std::uint32_t);
  }
  return n + cells_.size() * sizeof(std::uint32_t);
}

std::size_t Frame::associated_count() const {
  return static_cast<std::size_t>(
      std::count_if(map_points.begin(), map_points.end(), [](const auto& s) { return s.has_value(); }));
}

void Frame::finalize_features(int width, int height, int cell_size) {
  const std::size_t n = keypoints_left.size();
  depth.assign(n, kNoDepth);
  right_u.assign(n, -1.0F);
  map_points.assign(n, std::nullopt);
  grid.build(keypoints_left, width, height, cell_size);
}

Eigen::Vector3d Frame::unproject_world(std::size_t i, const Camera& cam) const {
  const KeyPoint& kp = keypoints_left[i];
  const Eigen::Vector3d p_cam = cam.backproject(kp.u, kp.v, depth[i]);
  return pose.inverse() * p_cam;
}

}  // namespace stereotrack
