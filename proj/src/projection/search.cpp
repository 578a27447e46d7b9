#include "stereotrack/projection/search.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "stereotrack/core/error.hpp"
#include "stereotrack/parallel/engine.hpp"

namespace stereotrack {

void ProjectionSearchConfig::validate() const {
  if (!(window > 0.0)) {
    throw ConfigError("projection: window must be positive");
  }
  if (max_distance <= 0 || max_distance > 256) {
    throw ConfigError("projection: max_distance must lie in (0, 256]");
  }
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw ConfigError("projection: ratio must lie in (0, 1]");
  }
  if (min_view_cos < -1.0 || min_view_cos > 1.0) {
    throw ConfigError("projection: min_view_cos must lie in [-1, 1]");
  }
  if (histogram_bins < 1 || keep_bins < 1 || keep_bins > histogram_bins) {
    throw ConfigError("projection: need 1 <= keep_bins <= histogram_bins");
  }
}

int predict_scale(double distance, double max_distance, double scale_factor, int levels) {
  const double ratio = max_distance / distance;
  // The slack keeps exact scale multiples on their own octave.
  const int octave = static_cast<int>(std::ceil(std::log(ratio) / std::log(scale_factor) - 1e-9));
  return std::clamp(octave, 0, levels - 1);
}

std::optional<Visibility> frustum_and_cone_check(const MapPointSoA& points, std::size_t i, const Pose& pose,
                                                 const Camera& cam, const ScaleLevels& scales,
                                                 const ProjectionSearchConfig& cfg) {
  const Eigen::Vector3d& pw = points.positions[i];
  const Eigen::Vector3d pc = pose * pw;
  if (!(pc.z() > 0.0)) {
    return std::nullopt;
  }
  const auto uv = cam.project(pc);
  if (!uv) {
    return std::nullopt;
  }
  const Eigen::Vector3d ray = pw - pose.center();
  const double dist = ray.norm();
  if (dist < points.min_distances[i] || dist > points.max_distances[i]) {
    return std::nullopt;
  }
  const double view_cos = ray.dot(points.normals[i]) / dist;
  if (view_cos < cfg.min_view_cos) {
    return std::nullopt;
  }
  Visibility v;
  v.uv = *uv;
  v.distance = dist;
  v.view_cos = view_cos;
  v.octave = predict_scale(dist, points.max_distances[i] / kDistanceMargin, scales.scale_factor, scales.levels);
  return v;
}

std::optional<Correspondence> search_point(const MapPointSoA& points, std::size_t i, const Frame& frame,
                                           const Pose& pose, const Camera& cam, const ScaleLevels& scales,
                                           const ProjectionSearchConfig& cfg, const SearchOptions& options,
                                           std::vector<std::uint32_t>& scratch) {
  if (!options.skip_points.empty() && options.skip_points[i] != 0) {
    return std::nullopt;
  }
  const auto vis = frustum_and_cone_check(points, i, pose, cam, scales, cfg);
  if (!vis) {
    return std::nullopt;
  }
  int min_oct = vis->octave - 1;
  int max_oct = vis->octave + 1;
  if (options.band == OctaveBand::kUpward) {
    max_oct = scales.levels - 1;
  } else if (options.band == OctaveBand::kDownward) {
    min_oct = 0;
  }
  const double radius = cfg.window * scales.scale[vis->octave];
  frame.grid.query(frame.keypoints_left, vis->uv.x(), vis->uv.y(), radius, min_oct, max_oct, scratch);

  const Descriptor& d = points.descriptors[i];
  int best = 257;
  int second = 257;
  std::int32_t best_idx = -1;
  for (std::uint32_t idx : scratch) {
    if (!options.filled_slots.empty() && options.filled_slots[idx] != 0) {
      continue;
    }
    const int dist = descriptor_distance(d, frame.descriptors_left[idx]);
    if (dist < best) {
      second = best;
      best = dist;
      best_idx = static_cast<std::int32_t>(idx);
    } else if (dist < second) {
      second = dist;
    }
  }
  if (best_idx < 0 || best > cfg.max_distance) {
    return std::nullopt;
  }
  if (second <= 256 && !(best < second && best <= cfg.ratio * second)) {
    return std::nullopt;
  }
  return Correspondence{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(best_idx), best, vis->octave};
}

std::vector<Correspondence> resolve_conflicts(std::span<const std::optional<Correspondence>> claims,
                                              std::size_t keypoint_count) {
  constexpr std::uint32_t kNone = 0xffffffffU;
  std::vector<std::uint32_t> owner(keypoint_count, kNone);
  for (std::size_t i = 0; i < claims.size(); ++i) {
    if (!claims[i]) {
      continue;
    }
    std::uint32_t& o = owner[claims[i]->keypoint];
    if (o == kNone || claims[i]->distance < claims[o]->distance) {
      o = static_cast<std::uint32_t>(i);
    }
  }
  std::vector<Correspondence> out;
  for (std::size_t i = 0; i < claims.size(); ++i) {
    if (claims[i] && owner[claims[i]->keypoint] == i) {
      out.push_back(*claims[i]);
    }
  }
  return out;
}

std::vector<Correspondence> rotation_filter(std::span<const Correspondence> matches, const MapPointSoA& points,
                                            const Frame& frame, const ProjectionSearchConfig& cfg) {
  const int bins = cfg.histogram_bins;
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<int> bin_of(matches.size());
  std::vector<int> counts(bins, 0);
  for (std::size_t k = 0; k < matches.size(); ++k) {
    double rot = static_cast<double>(points.reference_angles[matches[k].point]) -
                 frame.keypoints_left[matches[k].keypoint].angle;
    rot = std::fmod(rot, two_pi);
    if (rot < 0.0) {
      rot += two_pi;
    }
    const int b = std::min(bins - 1, static_cast<int>(rot * bins / two_pi));
    bin_of[k] = b;
    ++counts[b];
  }
  std::vector<int> order(bins);
  for (int b = 0; b < bins; ++b) {
    order[b] = b;
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return counts[a] > counts[b]; });
  std::vector<bool> keep(bins, false);
  for (int k = 0; k < cfg.keep_bins; ++k) {
    keep[order[k]] = counts[order[k]] > 0;
  }
  std::vector<Correspondence> out;
  for (std::size_t k = 0; k < matches.size(); ++k) {
    if (keep[bin_of[k]]) {
      out.push_back(matches[k]);
    }
  }
  return out;
}

std::vector<Correspondence> search_by_projection(Engine& engine, const MapPointSoA& points, const Frame& frame,
                                                 const Pose& pose, const Camera& cam, const ScaleLevels& scales,
                                                 const ProjectionSearchConfig& cfg, const SearchOptions& options) {
  std::vector<std::optional<Correspondence>> claims;
  std::vector<Correspondence> out;
  search_by_projection(engine, points, frame, pose, cam, scales, cfg, options, claims, out);
  return out;
}

void search_by_projection(Engine& engine, const MapPointSoA& points, const Frame& frame, const Pose& pose,
                          const Camera& cam, const ScaleLevels& scales, const ProjectionSearchConfig& cfg,
                          const SearchOptions& options, std::vector<std::optional<Correspondence>>& claims,
                          std::vector<Correspondence>& out) {
  claims.assign(points.size(), std::nullopt);
  engine.parallel_for(points.size(), [&](std::size_t i) {
    thread_local std::vector<std::uint32_t> scratch;
    claims[i] = search_point(points, i, frame, pose, cam, scales, cfg, options, scratch);
  });
  const std::vector<Correspondence> resolved = resolve_conflicts(claims, frame.size());
  if (cfg.rotation_check) {
    const std::vector<Correspondence> kept = rotation_filter(resolved, points, frame, cfg);
    out.assign(kept.begin(), kept.end());
  } else {
    out.assign(resolved.begin(), resolved.end());
  }
}

OctaveBand motion_band(const Pose& prev_pose, const Pose& cur_pose, double baseline) {
  // Current camera centre expressed in the previous camera frame.
  const Eigen::Vector3d t = prev_pose * cur_pose.center();
  if (t.z() > baseline) {
    return OctaveBand::kUpward;
  }
  if (-t.z() > baseline) {
    return OctaveBand::kDownward;
  }
  return OctaveBand::kAround;
}

void search_prev_frame(Engine& engine, const Frame& prev, const Frame& cur, const Pose& cur_pose, const Map& map,
                       const Camera& cam, const ScaleLevels& scales, const ProjectionSearchConfig& cfg,
                       PrevFrameSearch& out) {
  out.points.clear();
  out.source_keypoints.clear();
  out.matches.clear();
  for (std::size_t i = 0; i < prev.map_points.size(); ++i) {
    if (!prev.map_points[i]) {
      continue;
    }
    const MapPoint* p = map.point(*prev.map_points[i]);
    if (p == nullptr) {
      continue;
    }
    out.points.push_back(*p);
    out.points.reference_angles.back() = prev.keypoints_left[i].angle;
    out.source_keypoints.push_back(static_cast<std::uint32_t>(i));
  }
  if (out.points.empty()) {
    return;
  }
  const double baseline = cam.is_fisheye() ? cam.right_from_left().translation().norm() : cam.pinhole().baseline();
  ProjectionSearchConfig prev_cfg = cfg;
  prev_cfg.rotation_check = true;
  SearchOptions options;
  options.band = motion_band(prev.pose, cur_pose, baseline);
  search_by_projection(engine, out.points, cur, cur_pose, cam, scales, prev_cfg, options, out.claims, out.matches);
}

}  // namespace stereotrack
