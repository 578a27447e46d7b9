#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "stereotrack/core/frame.hpp"
#include "stereotrack/core/image.hpp"
#include "stereotrack/features/extraction.hpp"
#include "stereotrack/projection/search.hpp"
#include "stereotrack/stereo/stereo.hpp"
#include "stereotrack/tracking/local_map.hpp"
#include "stereotrack/tracking/pose_opt.hpp"

namespace stereotrack {

struct PoolSizing {
  int width = 0;
  int height = 0;
  ExtractionConfig extraction;
  std::size_t max_keypoints = 0;  // 0: n_features plus quadtree slack
  std::size_t max_local_points = 8192;
};

/// Buffers reused from frame to frame. `audit` reports how many of them had
/// to grow since the previous audit.
class BufferPool {
 public:
  void preallocate(const PoolSizing& sizing);

  // Number of tracked buffers whose capacity grew since the last audit.
  std::size_t audit();
  std::size_t total_acquisitions() const { return total_; }
  std::size_t tracked_buffers() const { return last_.size(); }

  ImagePyramid left_pyramid;
  ImagePyramid right_pyramid;
  Frame current;
  Frame previous;
  std::vector<StereoCandidate> candidates;
  std::vector<std::optional<StereoMatch>> stereo_slots;
  std::vector<StereoMatch> stereo_refined;
  std::vector<StereoMatch> stereo_matches;
  std::vector<FisheyeMatch> fisheye_matches;
  RowBuckets buckets;
  PrevFrameSearch prev_search;
  LocalMap local;
  LocalSearchScratch local_scratch;
  std::vector<PoseObservation> observations;
  std::vector<std::uint32_t> observation_keypoints;

 private:
  void capacities(std::vector<std::size_t>& out) const;

  std::vector<std::size_t> last_;
  std::vector<std::size_t> scratch_;
  std::size_t total_ = 0;
};

}  // namespace stereotrack
