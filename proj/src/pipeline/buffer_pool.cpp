#include "stereotrack/pipeline/buffer_pool.hpp"

#include <algorithm>

namespace stereotrack {
namespace {

void reserve_frame(Frame& f, std::size_t n) {
  f.keypoints_left.reserve(n);
  f.keypoints_right.reserve(n);
  f.descriptors_left.reserve(n);
  f.descriptors_right.reserve(n);
  f.depth.reserve(n);
  f.right_u.reserve(n);
  f.map_points.reserve(n);
}

void frame_capacities(const Frame& f, std::vector<std::size_t>& out) {
  out.push_back(f.keypoints_left.capacity());
  out.push_back(f.keypoints_right.capacity());
  out.push_back(f.descriptors_left.capacity());
  out.push_back(f.descriptors_right.capacity());
  out.push_back(f.depth.capacity());
  out.push_back(f.right_u.capacity());
  out.push_back(f.map_points.capacity());
}

void soa_capacities(const MapPointSoA& s, std::vector<std::size_t>& out) {
  out.push_back(s.positions.capacity());
  out.push_back(s.descriptors.capacity());
  out.push_back(s.normals.capacity());
  out.push_back(s.min_distances.capacity());
  out.push_back(s.max_distances.capacity());
  out.push_back(s.reference_angles.capacity());
  out.push_back(s.ids.capacity());
}

}  // namespace

void BufferPool::preallocate(const PoolSizing& sizing) {
  const auto sizes = pyramid_level_sizes(sizing.width, sizing.height, sizing.extraction);
  for (ImagePyramid* pyr : {&left_pyramid, &right_pyramid}) {
    pyr->scale_factor = sizing.extraction.scale_factor;
    pyr->levels.resize(sizes.size());
    for (std::size_t l = 0; l < sizes.size(); ++l) {
      pyr->levels[l].reshape(sizes[l].first, sizes[l].second);
    }
  }
  const std::size_t n =
      sizing.max_keypoints > 0 ? sizing.max_keypoints : static_cast<std::size_t>(sizing.extraction.n_features) + 256;
  reserve_frame(current, n);
  reserve_frame(previous, n);
  candidates.reserve(n);
  stereo_slots.reserve(n);
  stereo_refined.reserve(n);
  stereo_matches.reserve(n);
  fisheye_matches.reserve(n);
  prev_search.points.reserve(n);
  prev_search.source_keypoints.reserve(n);
  prev_search.matches.reserve(n);
  prev_search.claims.reserve(n);
  const std::size_t m = sizing.max_local_points;
  local.keyframes.reserve(1024);
  local.points.reserve(m);
  local.soa.reserve(m);
  local_scratch.skip_points.reserve(m);
  local_scratch.filled_slots.reserve(n);
  local_scratch.frame_ids.reserve(n);
  local_scratch.matches.reserve(n);
  local_scratch.claims.reserve(m);
  observations.reserve(n);
  observation_keypoints.reserve(n);
  capacities(last_);
}

void BufferPool::capacities(std::vector<std::size_t>& out) const {
  out.clear();
  for (const ImagePyramid* pyr : {&left_pyramid, &right_pyramid}) {
    out.push_back(pyr->levels.capacity());
    for (const GrayImage& level : pyr->levels) {
      out.push_back(level.pixels.capacity());
    }
  }
  frame_capacities(current, out);
  frame_capacities(previous, out);
  out.push_back(candidates.capacity());
  out.push_back(stereo_slots.capacity());
  out.push_back(stereo_refined.capacity());
  out.push_back(stereo_matches.capacity());
  out.push_back(fisheye_matches.capacity());
  soa_capacities(prev_search.points, out);
  out.push_back(prev_search.source_keypoints.capacity());
  out.push_back(prev_search.matches.capacity());
  out.push_back(prev_search.claims.capacity());
  out.push_back(local.keyframes.capacity());
  out.push_back(local.points.capacity());
  soa_capacities(local.soa, out);
  out.push_back(local_scratch.skip_points.capacity());
  out.push_back(local_scratch.filled_slots.capacity());
  out.push_back(local_scratch.frame_ids.capacity());
  out.push_back(local_scratch.matches.capacity());
  out.push_back(local_scratch.claims.capacity());
  out.push_back(observations.capacity());
  out.push_back(observation_keypoints.capacity());
}

std::size_t BufferPool::audit() {
  capacities(scratch_);
  std::size_t grown = 0;
  if (scratch_.size() != last_.size()) {
    grown = scratch_.size() > last_.size() ? scratch_.size() - last_.size() : 0;
  }
  for (std::size_t i = 0; i < std::min(scratch_.size(), last_.size()); ++i) {
    grown += scratch_[i] > last_[i] ? 1 : 0;
  }
  // Swapped frame buffers trade capacities; only track the high-water mark.
  for (std::size_t i = 0; i < std::min(scratch_.size(), last_.size()); ++i) {
    scratch_[i] = std::max(scratch_[i], last_[i]);
  }
  last_.swap(scratch_);
  total_ += grown;
  return grown;
}

}  // namespace stereotrack
