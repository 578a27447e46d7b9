#include "stereotrack/core/map_point.hpp"

#include <algorithm>

namespace stereotrack {

void MapPoint::add_observation(KeyFrameId kf, std::uint32_t keypoint) {
  const Observation obs{kf, keypoint};
  auto it = std::lower_bound(observations.begin(), observations.end(), obs);
  if (it == observations.end() || *it != obs) {
    observations.insert(it, obs);
  }
}

bool MapPoint::observed_by(KeyFrameId kf) const {
  auto it = std::lower_bound(observations.begin(), observations.end(), Observation{kf, 0});
  return it != observations.end() && it->keyframe == kf;
}

void MapPointSoA::clear() {
  positions.clear();
  descriptors.clear();
  normals.clear();
  min_distances.clear();
  max_distances.clear();
  reference_angles.clear();
  ids.clear();
}

void MapPointSoA::reserve(std::size_t n) {
  positions.reserve(n);
  descriptors.reserve(n);
  normals.reserve(n);
  min_distances.reserve(n);
  max_distances.reserve(n);
  reference_angles.reserve(n);
  ids.reserve(n);
}

void MapPointSoA::push_back(const MapPoint& p) {
  positions.push_back(p.position);
  descriptors.push_back(p.descriptor);
  normals.push_back(p.normal);
  min_distances.push_back(p.min_distance);
  max_distances.push_back(p.max_distance);
  reference_angles.push_back(p.reference_angle);
  ids.push_back(p.id);
}

std::size_t MapPointSoA::geometry_bytes() const {
  return size() * (2 * sizeof(Eigen::Vector3d) + 2 * sizeof(double));
}

std::size_t MapPointSoA::descriptor_bytes() const { return size() * sizeof(Descriptor); }

std::size_t MapPointSoA::bookkeeping_bytes() const { return size() * (sizeof(MapPointId) + sizeof(float)); }

MapPoint MapPointSoA::point(std::size_t i) const {
  MapPoint p;
  p.id = ids[i];
  p.position = positions[i];
  p.descriptor = descriptors[i];
  p.normal = normals[i];
  p.min_distance = min_distances[i];
  p.max_distance = max_distances[i];
  p.reference_angle = reference_angles[i];
  return p;
}

void decompose_map_points(std::span<const MapPoint> points, MapPointSoA& out) {
  out.clear();
  out.reserve(points.size());
  for (const MapPoint& p : points) {
    out.push_back(p);
  }
}

MapPointSoA decompose_map_points(std::span<const MapPoint> points) {
  MapPointSoA out;
  decompose_map_points(points, out);
  return out;
}

}  // namespace stereotrack
