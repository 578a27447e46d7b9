#include "stereotrack/pipeline/tracker.hpp"

#include <chrono>
#include <cmath>

#include "stereotrack/core/error.hpp"
#include "stereotrack/parallel/engine.hpp"
#include "stereotrack/tracking/local_map.hpp"

namespace stereotrack {
namespace {

using Clock = std::chrono::steady_clock;

double micros_since(Clock::time_point start) {
  return std::chrono::duration<double, std::micro>(Clock::now() - start).count();
}

constexpr std::string_view kExtraction = "orb_extraction";
constexpr std::string_view kStereo = "stereo_match";
constexpr std::string_view kInitial = "initial_pose";
constexpr std::string_view kLocal = "search_local_points";

double rig_baseline(const Camera& cam) {
  return cam.is_fisheye() ? cam.right_from_left().translation().norm() : cam.pinhole().baseline();
}

}  // namespace

void TrackingConfig::validate() const {
  if (init_min_matches < 1 || min_associations < 1) {
    throw ConfigError("tracking: match floors must be positive");
  }
  if (!(keyframe_ratio > 0.0 && keyframe_ratio <= 1.0) || max_keyframe_interval < 1) {
    throw ConfigError("tracking: keyframe_ratio must lie in (0, 1] and max_keyframe_interval be positive");
  }
  if (!(depth_ceiling_baselines > 0.0) || grid_cell < 1) {
    throw ConfigError("tracking: depth ceiling and grid cell must be positive");
  }
}

void TrackerConfig::validate() const {
  extraction.validate();
  stereo.validate();
  projection.validate();
  pose_opt.validate();
  initial_refinement.validate();
  tracking.validate();
}

bool decide_keyframe(std::size_t tracked, std::size_t reference_tracked, int frames_since_keyframe,
                     const TrackingConfig& cfg) {
  if (frames_since_keyframe >= cfg.max_keyframe_interval) {
    return true;
  }
  return static_cast<double>(tracked) < cfg.keyframe_ratio * static_cast<double>(reference_tracked);
}

Tracker::Tracker(const Camera& cam, const TrackerConfig& cfg, Engine& engine)
    : cam_(cam),
      cfg_(cfg),
      engine_(engine),
      scales_(cfg.extraction.scale_factor, cfg.extraction.levels),
      extractor_(cfg.extraction) {
  cfg_.validate();
  PoolSizing sizing;
  sizing.width = cam.width();
  sizing.height = cam.height();
  sizing.extraction = cfg.extraction;
  sizing.max_local_points = cfg.tracking.max_local_points;
  sizing.max_keypoints = cfg.tracking.max_keypoints;
  pool_.preallocate(sizing);
}

void Tracker::begin_frame(double timestamp, StageReport& report) {
  Frame& cur = pool_.current;
  cur.id = next_frame_id_++;
  cur.timestamp = timestamp;
  ledger_.reset_counters();
  report.frame_id = cur.id;
  report.timestamp = timestamp;
}

void Tracker::end_stage() {
  if (!cfg_.tracking.residency) {
    ledger_.release_backend();
  }
}

void Tracker::stage_frame_buffers(std::string_view stage) {
  const Frame& cur = pool_.current;
  ledger_.stage_buffer(stage, "keypoints.left", cur.keypoints_left.size() * sizeof(KeyPoint),
                       Direction::kHostToBackend);
  ledger_.stage_buffer(stage, "descriptors.left", cur.descriptors_left.size() * sizeof(Descriptor),
                       Direction::kHostToBackend);
  ledger_.stage_buffer(stage, "grid", cur.grid.byte_size(), Direction::kHostToBackend);
}

TrackResult Tracker::track_frame(const GrayImage& left, const GrayImage& right, double timestamp,
                                 std::span<const ImuSample> imu) {
  const auto start = Clock::now();
  StageReport report;
  begin_frame(timestamp, report);
  Frame& cur = pool_.current;
  if (lost_) {
    return finish_frame(report, imu, 0.0);
  }

  auto t = Clock::now();
  ledger_.produce_on_host("image.left");
  ledger_.produce_on_host("image.right");
  ledger_.stage_buffer(kExtraction, "image.left", left.byte_size(), Direction::kHostToBackend);
  ledger_.stage_buffer(kExtraction, "image.right", right.byte_size(), Direction::kHostToBackend);
  ExtractionStats stats_left;
  ExtractionStats stats_right;
  extractor_.extract(engine_, left, pool_.left_pyramid, cur.keypoints_left, cur.descriptors_left, &stats_left);
  extractor_.extract(engine_, right, pool_.right_pyramid, cur.keypoints_right, cur.descriptors_right, &stats_right);
  ledger_.produce_on_backend("pyramid.left");
  ledger_.produce_on_backend("pyramid.right");
  ledger_.produce_on_backend("candidates.left");
  ledger_.produce_on_backend("candidates.right");
  ledger_.stage_buffer(kExtraction, "candidates.left", stats_left.candidates * sizeof(KeyPoint),
                       Direction::kBackendToHost);
  ledger_.stage_buffer(kExtraction, "candidates.right", stats_right.candidates * sizeof(KeyPoint),
                       Direction::kBackendToHost);
  for (std::string_view name : {"keypoints.left", "keypoints.right", "descriptors.left", "descriptors.right"}) {
    ledger_.produce_on_host(name);
  }
  cur.finalize_features(cam_.width(), cam_.height(), cfg_.tracking.grid_cell);
  ledger_.produce_on_host("grid");
  if (!cfg_.tracking.residency) {
    ledger_.stage_buffer(kExtraction, "pyramid.left", pool_.left_pyramid.byte_size(), Direction::kBackendToHost);
    ledger_.stage_buffer(kExtraction, "pyramid.right", pool_.right_pyramid.byte_size(), Direction::kBackendToHost);
  }
  end_stage();
  report.time(Stage::kOrbExtraction) = micros_since(t);

  t = Clock::now();
  stereo_from_images(report);
  end_stage();
  report.time(Stage::kStereoMatch) = micros_since(t);

  return finish_frame(report, imu, std::chrono::duration<double, std::micro>(start.time_since_epoch()).count());
}

TrackResult Tracker::track_features(const FeatureInput& input, std::span<const ImuSample> imu) {
  const auto start = Clock::now();
  StageReport report;
  begin_frame(input.timestamp, report);
  Frame& cur = pool_.current;
  if (lost_) {
    return finish_frame(report, imu, 0.0);
  }
  if (input.left.size() != input.left_desc.size() || input.right.size() != input.right_desc.size()) {
    throw Error("track_features: keypoint and descriptor counts differ");
  }
  cur.keypoints_left.assign(input.left.begin(), input.left.end());
  cur.keypoints_right.assign(input.right.begin(), input.right.end());
  cur.descriptors_left.assign(input.left_desc.begin(), input.left_desc.end());
  cur.descriptors_right.assign(input.right_desc.begin(), input.right_desc.end());
  for (std::string_view name : {"keypoints.left", "keypoints.right", "descriptors.left", "descriptors.right"}) {
    ledger_.produce_on_host(name);
  }
  cur.finalize_features(cam_.width(), cam_.height(), cfg_.tracking.grid_cell);
  ledger_.produce_on_host("grid");

  const auto t = Clock::now();
  stereo_from_features();
  end_stage();
  report.time(Stage::kStereoMatch) = micros_since(t);

  return finish_frame(report, imu, std::chrono::duration<double, std::micro>(start.time_since_epoch()).count());
}

void Tracker::stereo_from_images(StageReport& report) {
  (void)report;
  Frame& cur = pool_.current;
  pool_.stereo_matches.clear();
  pool_.fisheye_matches.clear();
  ledger_.stage_buffer(kStereo, "keypoints.left", cur.keypoints_left.size() * sizeof(KeyPoint),
                       Direction::kHostToBackend);
  ledger_.stage_buffer(kStereo, "keypoints.right", cur.keypoints_right.size() * sizeof(KeyPoint),
                       Direction::kHostToBackend);
  ledger_.stage_buffer(kStereo, "descriptors.left", cur.descriptors_left.size() * sizeof(Descriptor),
                       Direction::kHostToBackend);
  ledger_.stage_buffer(kStereo, "descriptors.right", cur.descriptors_right.size() * sizeof(Descriptor),
                       Direction::kHostToBackend);
  if (cam_.is_fisheye()) {
    pool_.fisheye_matches = match_fisheye(engine_, cur.keypoints_left, cur.descriptors_left, cur.keypoints_right,
                                          cur.descriptors_right, cam_, cfg_.stereo);
    ledger_.produce_on_backend("stereo.matches");
    ledger_.stage_buffer(kStereo, "stereo.matches", cur.size() * sizeof(FisheyeMatch), Direction::kBackendToHost);
    for (const FisheyeMatch& m : pool_.fisheye_matches) {
      cur.depth[m.left] = static_cast<float>(m.point.z());
    }
    return;
  }
  pool_.buckets.build(cur.keypoints_right, cam_.height());
  ledger_.produce_on_host("row_buckets");
  ledger_.stage_buffer(kStereo, "row_buckets", pool_.buckets.byte_size(), Direction::kHostToBackend);
  ledger_.stage_buffer(kStereo, "pyramid.left", pool_.left_pyramid.byte_size(), Direction::kHostToBackend);
  ledger_.stage_buffer(kStereo, "pyramid.right", pool_.right_pyramid.byte_size(), Direction::kHostToBackend);

  match_pinhole_phase1(engine_, cur.keypoints_left, cur.descriptors_left, cur.keypoints_right,
                       cur.descriptors_right, pool_.buckets, scales_, cfg_.stereo, cam_.width(), pool_.candidates);
  ledger_.produce_on_backend("stereo.candidates");
  refine_matches(engine_, pool_.left_pyramid, pool_.right_pyramid, cur.keypoints_left, cur.keypoints_right,
                 pool_.candidates, cam_.pinhole(), cfg_.stereo, pool_.stereo_slots, pool_.stereo_refined);
  ledger_.produce_on_backend("stereo.matches");
  ledger_.stage_buffer(kStereo, "stereo.matches", cur.size() * sizeof(StereoMatch), Direction::kBackendToHost);
  const std::vector<StereoMatch> kept = reject_outliers(pool_.stereo_refined, cfg_.stereo);
  pool_.stereo_matches.assign(kept.begin(), kept.end());
  for (const StereoMatch& m : pool_.stereo_matches) {
    cur.depth[m.left] = static_cast<float>(m.depth);
    cur.right_u[m.left] = static_cast<float>(m.right_u);
  }
}

void Tracker::stereo_from_features() {
  Frame& cur = pool_.current;
  pool_.stereo_matches.clear();
  pool_.fisheye_matches.clear();
  ledger_.stage_buffer(kStereo, "keypoints.left", cur.keypoints_left.size() * sizeof(KeyPoint),
                       Direction::kHostToBackend);
  ledger_.stage_buffer(kStereo, "keypoints.right", cur.keypoints_right.size() * sizeof(KeyPoint),
                       Direction::kHostToBackend);
  ledger_.stage_buffer(kStereo, "descriptors.left", cur.descriptors_left.size() * sizeof(Descriptor),
                       Direction::kHostToBackend);
  ledger_.stage_buffer(kStereo, "descriptors.right", cur.descriptors_right.size() * sizeof(Descriptor),
                       Direction::kHostToBackend);
  if (cam_.is_fisheye()) {
    pool_.fisheye_matches = match_fisheye(engine_, cur.keypoints_left, cur.descriptors_left, cur.keypoints_right,
                                          cur.descriptors_right, cam_, cfg_.stereo);
    for (const FisheyeMatch& m : pool_.fisheye_matches) {
      cur.depth[m.left] = static_cast<float>(m.point.z());
    }
    return;
  }
  pool_.buckets.build(cur.keypoints_right, cam_.height());
  ledger_.produce_on_host("row_buckets");
  ledger_.stage_buffer(kStereo, "row_buckets", pool_.buckets.byte_size(), Direction::kHostToBackend);
  match_pinhole_phase1(engine_, cur.keypoints_left, cur.descriptors_left, cur.keypoints_right,
                       cur.descriptors_right, pool_.buckets, scales_, cfg_.stereo, cam_.width(), pool_.candidates);
  ledger_.produce_on_backend("stereo.matches");
  ledger_.stage_buffer(kStereo, "stereo.matches", cur.size() * sizeof(StereoCandidate), Direction::kBackendToHost);
  const PinholeCamera& pin = cam_.pinhole();
  for (std::size_t i = 0; i < pool_.candidates.size(); ++i) {
    const StereoCandidate& c = pool_.candidates[i];
    if (!c.valid()) {
      continue;
    }
    StereoMatch m;
    m.left = static_cast<std::uint32_t>(i);
    m.right = static_cast<std::uint32_t>(c.right);
    m.right_u = cur.keypoints_right[c.right].u;
    m.disparity = static_cast<double>(cur.keypoints_left[i].u) - m.right_u;
    m.depth = pin.baseline_times_fx / m.disparity;
    m.distance = c.distance;
    pool_.stereo_matches.push_back(m);
    cur.depth[i] = static_cast<float>(m.depth);
    cur.right_u[i] = static_cast<float>(m.right_u);
  }
}

void Tracker::initial_pose(std::span<const ImuSample> imu) {
  Frame& cur = pool_.current;
  const Frame& prev = pool_.previous;
  last_imu_.reset();
  if (cfg_.tracking.use_imu && imu.size() >= 2) {
    const Pose world_from_body = prev.pose.inverse() * cfg_.tracking.cam_from_imu;
    const Eigen::Vector3d gravity_body = world_from_body.rotation().transpose() * cfg_.tracking.gravity;
    last_imu_ = preintegrate_imu(imu, gravity_body);
  }
  cur.pose = predict_pose(prev.pose, motion_, last_imu_, velocity_, cfg_.tracking.cam_from_imu);

  PrevFrameSearch& search = pool_.prev_search;
  search_prev_frame(engine_, prev, cur, cur.pose, map_, cam_, scales_, cfg_.projection, search);
  if (search.matches.size() < static_cast<std::size_t>(cfg_.tracking.prev_search_retry) && !search.points.empty()) {
    ProjectionSearchConfig wide = cfg_.projection;
    wide.window *= 2.0;
    search_prev_frame(engine_, prev, cur, cur.pose, map_, cam_, scales_, wide, search);
  }
  ledger_.produce_on_host("prev.soa");
  ledger_.stage_buffer(kInitial, "prev.soa", search.points.byte_size(), Direction::kHostToBackend);
  stage_frame_buffers(kInitial);
  ledger_.produce_on_backend("prev.correspondences");
  ledger_.stage_buffer(kInitial, "prev.correspondences", search.points.size() * sizeof(Correspondence),
                       Direction::kBackendToHost);
  for (const Correspondence& c : search.matches) {
    cur.map_points[c.keypoint] = search.points.ids[c.point];
  }
  optimize_frame_pose(cur, map_, cam_, scales_, cfg_.initial_refinement);
}

std::size_t Tracker::create_keyframe(Frame& frame) {
  const KeyFrameId kid = map_.add_keyframe(frame);
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (frame.map_points[i] && map_.point(*frame.map_points[i]) != nullptr) {
      map_.link(kid, static_cast<std::uint32_t>(i), *frame.map_points[i]);
    }
  }
  const double ceiling = cfg_.tracking.depth_ceiling_baselines * rig_baseline(cam_);
  const Eigen::Vector3d center = frame.pose.center();
  const double top_scale = scales_.scale[scales_.levels - 1];
  std::size_t created = 0;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (frame.map_points[i] || !frame.has_depth(i) || !(frame.depth[i] < ceiling)) {
      continue;
    }
    MapPoint p;
    p.position = frame.unproject_world(i, cam_);
    p.descriptor = frame.descriptors_left[i];
    const Eigen::Vector3d ray = p.position - center;
    const double dist = ray.norm();
    p.normal = ray / dist;
    const double reference = dist * scales_.scale[frame.keypoints_left[i].octave];
    p.max_distance = reference * kDistanceMargin;
    p.min_distance = reference / top_scale / kDistanceMargin;
    p.reference_angle = frame.keypoints_left[i].angle;
    p.last_seen_frame = static_cast<std::int64_t>(frame.id);
    const MapPointId id = map_.add_point(std::move(p));
    map_.link(kid, static_cast<std::uint32_t>(i), id);
    frame.map_points[i] = id;
    ++created;
  }
  reference_tracked_ = frame.associated_count();
  frames_since_keyframe_ = 0;
  return created;
}

TrackResult Tracker::finish_frame(StageReport& report, std::span<const ImuSample> imu, double frame_start_us) {
  Frame& cur = pool_.current;
  Frame& prev = pool_.previous;
  TrackResult result;
  auto finalize = [&](TrackStatus status) {
    report.status = status;
    report.associations = cur.associated_count();
    report.inliers = report.associations;
    for (int s = 0; s < kStageCount - 1; ++s) {
      report.bytes[s] = ledger_.stage_bytes(stage_name(s));
    }
    report.bytes[static_cast<int>(Stage::kTotal)] = ledger_.total();
    last_acquisitions_ = pool_.audit();
    if (frame_start_us > 0.0) {
      const double now = std::chrono::duration<double, std::micro>(Clock::now().time_since_epoch()).count();
      report.time(Stage::kTotal) = now - frame_start_us;
    }
    result.status = status;
    result.pose = cur.pose;
    result.associations = report.associations;
    result.keyframe = report.keyframe;
    result.report = report;
    return result;
  };

  if (lost_) {
    return finalize(TrackStatus::kLost);
  }
  for (const float d : cur.depth) {
    report.stereo_matches += d > 0.0F ? 1 : 0;
  }

  if (!initialized_) {
    if (report.stereo_matches < static_cast<std::size_t>(cfg_.tracking.init_min_matches)) {
      return finalize(TrackStatus::kInitFailed);
    }
    cur.pose = Pose::Identity();
    create_keyframe(cur);
    report.keyframe = true;
    initialized_ = true;
    motion_ = Pose::Identity();
    velocity_.setZero();
    finalize(TrackStatus::kInitialized);
    std::swap(pool_.current, pool_.previous);
    return result;
  }

  auto t = Clock::now();
  initial_pose(imu);
  end_stage();
  report.time(Stage::kInitialPose) = micros_since(t);

  t = Clock::now();
  update_local_map(cur, map_, pool_.local);
  report.time(Stage::kUpdateLocalMap) = micros_since(t);

  t = Clock::now();
  if (!pool_.local.empty()) {
    ledger_.produce_on_host("local.soa");
    ledger_.stage_buffer(kLocal, "local.soa", pool_.local.soa.byte_size(), Direction::kHostToBackend);
    stage_frame_buffers(kLocal);
    ledger_.produce_on_host("frame.slot_mask");
    ledger_.stage_buffer(kLocal, "frame.slot_mask", cur.size(), Direction::kHostToBackend);
    ledger_.produce_on_host("local.skip_mask");
    ledger_.stage_buffer(kLocal, "local.skip_mask", pool_.local.soa.size(), Direction::kHostToBackend);
    search_local_points(engine_, pool_.local, cur, cam_, scales_, cfg_.projection, pool_.local_scratch);
    ledger_.produce_on_backend("local.correspondences");
    ledger_.stage_buffer(kLocal, "local.correspondences", pool_.local.soa.size() * sizeof(Correspondence),
                         Direction::kBackendToHost);
  }
  end_stage();
  report.time(Stage::kSearchLocalPoints) = micros_since(t);

  if (cfg_.pose_opt.enabled) {
    t = Clock::now();
    optimize_frame_pose(cur, map_, cam_, scales_, cfg_.pose_opt);
    report.time(Stage::kPoseOpt) = micros_since(t);
  }

  const std::size_t tracked = cur.associated_count();
  if (tracked < static_cast<std::size_t>(cfg_.tracking.min_associations)) {
    lost_ = true;
    return finalize(TrackStatus::kLost);
  }
  for (const auto& slot : cur.map_points) {
    if (slot) {
      map_.point(*slot)->last_seen_frame = static_cast<std::int64_t>(cur.id);
    }
  }
  ++frames_since_keyframe_;
  if (decide_keyframe(tracked, reference_tracked_, frames_since_keyframe_, cfg_.tracking)) {
    create_keyframe(cur);
    report.keyframe = true;
  }

  // Motion model for the next prediction.
  const double dt = cur.timestamp - prev.timestamp;
  motion_ = cur.pose * prev.pose.inverse();
  const Pose body_prev = prev.pose.inverse() * cfg_.tracking.cam_from_imu;
  const Pose body_cur = cur.pose.inverse() * cfg_.tracking.cam_from_imu;
  if (dt > 0.0) {
    const Eigen::Vector3d moved = body_cur.translation() - body_prev.translation();
    if (last_imu_ && last_imu_->dt > 0.0) {
      const Eigen::Vector3d v_prev = (moved - body_prev.rotation() * last_imu_->position) / last_imu_->dt;
      velocity_ = v_prev + body_prev.rotation() * last_imu_->velocity;
    } else {
      velocity_ = moved / dt;
    }
  }

  finalize(TrackStatus::kTracking);
  std::swap(pool_.current, pool_.previous);
  return result;
}

}  // namespace stereotrack
