#include "stereotrack/core/map.hpp"

#include <algorithm>

#include "stereotrack/core/error.hpp"

namespace stereotrack {

MapPointId Map::add_point(MapPoint point) {
  point.id = next_point_++;
  const MapPointId id = point.id;
  points_.emplace(id, std::move(point));
  return id;
}

KeyFrameId Map::add_keyframe(const Frame& frame) {
  const KeyFrameId id = next_keyframe_++;
  KeyFrame kf;
  kf.id = id;
  kf.frame = frame;
  kf.frame.map_points.assign(frame.size(), std::nullopt);
  keyframes_.emplace(id, std::move(kf));
  return id;
}

void Map::link(KeyFrameId kf, std::uint32_t keypoint, MapPointId point) {
  KeyFrame* k = keyframe(kf);
  MapPoint* p = this->point(point);
  if (k == nullptr || p == nullptr || keypoint >= k->frame.size()) {
    throw Error("Map::link: unknown keyframe, point or keypoint");
  }
  k->frame.map_points[keypoint] = point;
  p->add_observation(kf, keypoint);
}

MapPoint* Map::point(MapPointId id) {
  auto it = points_.find(id);
  return it == points_.end() ? nullptr : &it->second;
}

const MapPoint* Map::point(MapPointId id) const {
  auto it = points_.find(id);
  return it == points_.end() ? nullptr : &it->second;
}

KeyFrame* Map::keyframe(KeyFrameId id) {
  auto it = keyframes_.find(id);
  return it == keyframes_.end() ? nullptr : &it->second;
}

const KeyFrame* Map::keyframe(KeyFrameId id) const {
  auto it = keyframes_.find(id);
  return it == keyframes_.end() ? nullptr : &it->second;
}

void Map::clear() {
  points_.clear();
  keyframes_.clear();
  next_point_ = 1;
  next_keyframe_ = 1;
}

bool Map::consistent() const {
  for (const auto& [kid, kf] : keyframes_) {
    for (std::size_t i = 0; i < kf.frame.map_points.size(); ++i) {
      const auto& slot = kf.frame.map_points[i];
      if (!slot) {
        continue;
      }
      const MapPoint* p = point(*slot);
      if (p == nullptr) {
        return false;
      }
      const Observation obs{kid, static_cast<std::uint32_t>(i)};
      if (!std::binary_search(p->observations.begin(), p->observations.end(), obs)) {
        return false;
      }
    }
  }
  for (const auto& [pid, p] : points_) {
    for (const Observation& obs : p.observations) {
      const KeyFrame* kf = keyframe(obs.keyframe);
      if (kf == nullptr || obs.keypoint >= kf->frame.map_points.size() ||
          kf->frame.map_points[obs.keypoint] != pid) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace stereotrack
