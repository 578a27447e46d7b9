#pragma once

#include <cstddef>
#include <map>
#include <optional>

#include "stereotrack/core/frame.hpp"
#include "stereotrack/core/map_point.hpp"

namespace stereotrack {

/// Global map: keyframes and map points keyed by id. Iteration is in id
/// order. Only the tracking thread mutates it.
class Map {
 public:
  // Assigns and returns a fresh id.
  MapPointId add_point(MapPoint point);
  KeyFrameId add_keyframe(const Frame& frame);

  // Records that keyframe `kf` observes `point` at keypoint `keypoint`, on
  // both sides of the link.
  void link(KeyFrameId kf, std::uint32_t keypoint, MapPointId point);

  MapPoint* point(MapPointId id);
  const MapPoint* point(MapPointId id) const;
  KeyFrame* keyframe(KeyFrameId id);
  const KeyFrame* keyframe(KeyFrameId id) const;

  const std::map<MapPointId, MapPoint>& points() const { return points_; }
  const std::map<KeyFrameId, KeyFrame>& keyframes() const { return keyframes_; }
  std::size_t point_count() const { return points_.size(); }
  std::size_t keyframe_count() const { return keyframes_.size(); }
  void clear();

  // True when every keyframe slot and every observation agree.
  bool consistent() const;

 private:
  std::map<MapPointId, MapPoint> points_;
  std::map<KeyFrameId, KeyFrame> keyframes_;
  MapPointId next_point_ = 1;
  KeyFrameId next_keyframe_ = 1;
};

}  // namespace stereotrack
