#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "stereotrack/core/camera.hpp"
#include "stereotrack/core/frame.hpp"
#include "stereotrack/core/map.hpp"
#include "stereotrack/core/map_point.hpp"
#include "stereotrack/core/pose.hpp"
#include "stereotrack/core/scale.hpp"

namespace stereotrack {

class Engine;

// Map points store a scale-validity range widened by this factor on both
// ends; octave prediction uses the unwidened far limit.
inline constexpr double kDistanceMargin = 1.2;

struct ProjectionSearchConfig {
  double window = 5.7;  // radius at octave 0, pixels
  int max_distance = 100;
  double ratio = 0.9;
  double min_view_cos = 0.5;
  int histogram_bins = 30;
  int keep_bins = 3;
  bool rotation_check = false;

  void validate() const;
};

struct Correspondence {
  std::uint32_t point = 0;     // index into the MapPointSoA
  std::uint32_t keypoint = 0;  // index into the frame's left keypoints
  std::int32_t distance = 0;
  std::int32_t octave = 0;  // predicted

  bool operator==(const Correspondence&) const = default;
};

/// clamp(ceil(log(max_distance / d) / log(s)), 0, levels - 1).
int predict_scale(double distance, double max_distance, double scale_factor, int levels);

struct Visibility {
  Eigen::Vector2d uv;
  int octave = 0;
  double view_cos = 0.0;
  double distance = 0.0;
};

/// Projection, depth, distance-range and viewing-cone test for entry i.
std::optional<Visibility> frustum_and_cone_check(const MapPointSoA& points, std::size_t i, const Pose& pose,
                                                 const Camera& cam, const ScaleLevels& scales,
                                                 const ProjectionSearchConfig& cfg);

enum class OctaveBand {
  kAround,    // predicted +- 1
  kUpward,    // [predicted - 1, levels - 1], camera moved forward
  kDownward,  // [0, predicted + 1], camera moved backward
};

struct SearchOptions {
  // Non-zero entries mark frame keypoints that are already associated.
  std::span<const std::uint8_t> filled_slots;
  // Non-zero entries mark points to leave out.
  std::span<const std::uint8_t> skip_points;
  OctaveBand band = OctaveBand::kAround;
};

// Phase A for one point: the descriptor-best admissible keypoint.
std::optional<Correspondence> search_point(const MapPointSoA& points, std::size_t i, const Frame& frame,
                                           const Pose& pose, const Camera& cam, const ScaleLevels& scales,
                                           const ProjectionSearchConfig& cfg, const SearchOptions& options,
                                           std::vector<std::uint32_t>& scratch);

// Phase B: one correspondence per keypoint, lowest distance then lowest
// point index. Input and output sorted by point index.
std::vector<Correspondence> resolve_conflicts(std::span<const std::optional<Correspondence>> claims,
                                              std::size_t keypoint_count);

// Phase C: keeps correspondences whose rotation difference falls in one of
// the keep_bins most populated histogram bins (ties: lower bin).
std::vector<Correspondence> rotation_filter(std::span<const Correspondence> matches, const MapPointSoA& points,
                                            const Frame& frame, const ProjectionSearchConfig& cfg);

std::vector<Correspondence> search_by_projection(Engine& engine, const MapPointSoA& points, const Frame& frame,
                                                 const Pose& pose, const Camera& cam, const ScaleLevels& scales,
                                                 const ProjectionSearchConfig& cfg,
                                                 const SearchOptions& options = {});
void search_by_projection(Engine& engine, const MapPointSoA& points, const Frame& frame, const Pose& pose,
                          const Camera& cam, const ScaleLevels& scales, const ProjectionSearchConfig& cfg,
                          const SearchOptions& options, std::vector<std::optional<Correspondence>>& claims,
                          std::vector<Correspondence>& out);

struct PrevFrameSearch {
  MapPointSoA points;  // previous frame's associated points, slot order
  std::vector<std::uint32_t> source_keypoints;  // previous frame keypoint per entry
  std::vector<Correspondence> matches;
  std::vector<std::optional<Correspondence>> claims;
};

// Forward/backward/none from the motion between two world-to-camera poses.
OctaveBand motion_band(const Pose& prev_pose, const Pose& cur_pose, double baseline);

/// Projects the previous frame's map points into `cur` at `cur_pose` with
/// the rotation check on. Reference angles are the previous keypoints'.
void search_prev_frame(Engine& engine, const Frame& prev, const Frame& cur, const Pose& cur_pose, const Map& map,
                       const Camera& cam, const ScaleLevels& scales, const ProjectionSearchConfig& cfg,
                       PrevFrameSearch& out);

}  // namespace stereotrack
