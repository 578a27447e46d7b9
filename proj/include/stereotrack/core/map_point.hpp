#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "stereotrack/core/features.hpp"

namespace stereotrack {

using MapPointId = std::uint64_t;
using KeyFrameId = std::uint64_t;

struct Observation {
  KeyFrameId keyframe = 0;
  std::uint32_t keypoint = 0;

  auto operator<=>(const Observation&) const = default;
};

/// 3D landmark with its representative appearance and observation links.
struct MapPoint {
  MapPointId id = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Descriptor descriptor;
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();  // mean viewing direction, camera -> point
  double min_distance = 0.0;
  double max_distance = 0.0;
  float reference_angle = 0.0F;
  std::vector<Observation> observations;  // sorted, unique
  bool tracked_in_view = false;
  std::int64_t last_seen_frame = -1;

  void add_observation(KeyFrameId kf, std::uint32_t keypoint);
  bool observed_by(KeyFrameId kf) const;
};

/// Decomposed snapshot of a set of map points: one flat array per field,
/// entry i of every array describes the same point.
struct MapPointSoA {
  std::vector<Eigen::Vector3d> positions;
  std::vector<Descriptor> descriptors;
  std::vector<Eigen::Vector3d> normals;
  std::vector<double> min_distances;
  std::vector<double> max_distances;
  std::vector<float> reference_angles;
  std::vector<MapPointId> ids;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
  void clear();
  void reserve(std::size_t n);
  std::size_t capacity() const { return ids.capacity(); }
  void push_back(const MapPoint& p);

  // Logical bytes of each field array, for staging accounting.
  std::size_t geometry_bytes() const;    // positions, normals, distances
  std::size_t descriptor_bytes() const;
  std::size_t bookkeeping_bytes() const;  // ids, reference angles
  std::size_t byte_size() const { return geometry_bytes() + descriptor_bytes() + bookkeeping_bytes(); }

  // Reassembles entry i (observations are not part of the snapshot).
  MapPoint point(std::size_t i) const;
};

MapPointSoA decompose_map_points(std::span<const MapPoint> points);
void decompose_map_points(std::span<const MapPoint> points, MapPointSoA& out);

}  // namespace stereotrack
