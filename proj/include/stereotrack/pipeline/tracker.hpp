#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "stereotrack/core/camera.hpp"
#include "stereotrack/core/frame.hpp"
#include "stereotrack/core/image.hpp"
#include "stereotrack/core/map.hpp"
#include "stereotrack/core/scale.hpp"
#include "stereotrack/features/extraction.hpp"
#include "stereotrack/parallel/staging.hpp"
#include "stereotrack/pipeline/buffer_pool.hpp"
#include "stereotrack/pipeline/imu.hpp"
#include "stereotrack/pipeline/report.hpp"
#include "stereotrack/projection/search.hpp"
#include "stereotrack/stereo/stereo.hpp"
#include "stereotrack/tracking/pose_opt.hpp"

namespace stereotrack {

class Engine;

struct TrackingConfig {
  int init_min_matches = 50;
  int min_associations = 15;
  double keyframe_ratio = 0.9;
  int max_keyframe_interval = 20;
  double depth_ceiling_baselines = 35.0;
  int grid_cell = 48;
  // Below this many prev-frame matches the search is repeated with a
  // doubled window.
  int prev_search_retry = 20;
  bool residency = true;
  bool use_imu = true;
  Eigen::Vector3d gravity{0.0, 9.81, 0.0};  // world frame
  Pose cam_from_imu;
  std::size_t max_local_points = 8192;
  std::size_t max_keypoints = 0;  // per image; 0: n_features plus quadtree slack

  void validate() const;
};

struct TrackerConfig {
  ExtractionConfig extraction;
  StereoMatchConfig stereo;
  ProjectionSearchConfig projection;
  PoseOptConfig pose_opt;
  PoseOptConfig initial_refinement{true};
  TrackingConfig tracking;

  void validate() const;
};

/// Keypoints and descriptors supplied directly, bypassing extraction.
struct FeatureInput {
  double timestamp = 0.0;
  std::vector<KeyPoint> left;
  std::vector<KeyPoint> right;
  std::vector<Descriptor> left_desc;
  std::vector<Descriptor> right_desc;
};

struct TrackResult {
  TrackStatus status = TrackStatus::kTracking;
  Pose pose;  // world to camera
  std::size_t associations = 0;
  bool keyframe = false;
  StageReport report;
};

/// Keyframe rule: too few tracked points relative to the reference keyframe,
/// or the interval limit reached.
bool decide_keyframe(std::size_t tracked, std::size_t reference_tracked, int frames_since_keyframe,
                     const TrackingConfig& cfg);

/// Single-writer tracking frontend. Stages run in order; data-parallel
/// stages go through the engine and join before the next stage.
class Tracker {
 public:
  Tracker(const Camera& cam, const TrackerConfig& cfg, Engine& engine);

  TrackResult track_frame(const GrayImage& left, const GrayImage& right, double timestamp,
                          std::span<const ImuSample> imu = {});
  TrackResult track_features(const FeatureInput& input, std::span<const ImuSample> imu = {});

  bool initialized() const { return initialized_; }
  bool lost() const { return lost_; }
  const Map& map() const { return map_; }
  const Frame& last_frame() const { return pool_.previous; }
  const Camera& camera() const { return cam_; }
  const TrackerConfig& config() const { return cfg_; }
  const StagingLedger& ledger() const { return ledger_; }
  const BufferPool& pool() const { return pool_; }
  std::size_t last_acquisitions() const { return last_acquisitions_; }
  // Stereo matches of the most recent frame (pinhole path).
  const std::vector<StereoMatch>& stereo_matches() const { return pool_.stereo_matches; }
  const std::vector<FisheyeMatch>& fisheye_matches() const { return pool_.fisheye_matches; }
  const std::vector<StereoCandidate>& stereo_candidates() const { return pool_.candidates; }

 private:
  void begin_frame(double timestamp, StageReport& report);
  void stereo_from_images(StageReport& report);
  void stereo_from_features();
  TrackResult finish_frame(StageReport& report, std::span<const ImuSample> imu, double frame_start_us);
  void initial_pose(std::span<const ImuSample> imu);
  std::size_t create_keyframe(Frame& frame);
  void stage_frame_buffers(std::string_view stage);
  void end_stage();

  Camera cam_;
  TrackerConfig cfg_;
  Engine& engine_;
  ScaleLevels scales_;
  OrbExtractor extractor_;
  Map map_;
  StagingLedger ledger_;
  BufferPool pool_;

  bool initialized_ = false;
  bool lost_ = false;
  std::uint64_t next_frame_id_ = 0;
  std::size_t reference_tracked_ = 0;
  int frames_since_keyframe_ = 0;
  Pose motion_;  // T_cur_prev of the last tracked interval
  Eigen::Vector3d velocity_ = Eigen::Vector3d::Zero();  // IMU body, world frame
  std::optional<ImuDelta> last_imu_;
  std::size_t last_acquisitions_ = 0;
};

}  // namespace stereotrack
