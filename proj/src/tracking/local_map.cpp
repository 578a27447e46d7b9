#include "stereotrack/tracking/local_map.hpp"

#include <algorithm>

#include "stereotrack/parallel/engine.hpp"

namespace stereotrack {
namespace {

template <typename T>
void compact(std::vector<T>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

// Compacts before a push would reallocate.
template <typename T>
void push_compacting(std::vector<T>& v, T value) {
  if (v.size() == v.capacity() && !v.empty()) {
    compact(v);
  }
  v.push_back(value);
}

}  // namespace

void LocalMap::clear() {
  keyframes.clear();
  points.clear();
  soa.clear();
}

void update_local_map(const Frame& frame, const Map& map, LocalMap& out) {
  out.clear();
  for (const auto& slot : frame.map_points) {
    if (!slot) {
      continue;
    }
    const MapPoint* p = map.point(*slot);
    if (p == nullptr) {
      continue;
    }
    for (const Observation& obs : p->observations) {
      push_compacting(out.keyframes, obs.keyframe);
    }
  }
  compact(out.keyframes);
  for (KeyFrameId kid : out.keyframes) {
    const KeyFrame* kf = map.keyframe(kid);
    if (kf == nullptr) {
      continue;
    }
    for (const auto& slot : kf->map_points()) {
      if (slot && map.point(*slot) != nullptr) {
        push_compacting(out.points, *slot);
      }
    }
  }
  compact(out.points);
  out.soa.reserve(out.points.size());
  for (MapPointId id : out.points) {
    out.soa.push_back(*map.point(id));
  }
}

LocalMap update_local_map(const Frame& frame, const Map& map) {
  LocalMap local;
  update_local_map(frame, map, local);
  return local;
}

std::size_t search_local_points(Engine& engine, const LocalMap& local, Frame& frame, const Camera& cam,
                                const ScaleLevels& scales, const ProjectionSearchConfig& cfg,
                                LocalSearchScratch& scratch) {
  scratch.matches.clear();
  if (local.empty()) {
    return frame.associated_count();
  }
  scratch.frame_ids.clear();
  scratch.filled_slots.assign(frame.size(), 0);
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (frame.map_points[i]) {
      scratch.frame_ids.push_back(*frame.map_points[i]);
      scratch.filled_slots[i] = 1;
    }
  }
  std::sort(scratch.frame_ids.begin(), scratch.frame_ids.end());
  scratch.skip_points.assign(local.soa.size(), 0);
  for (std::size_t i = 0; i < local.soa.size(); ++i) {
    if (std::binary_search(scratch.frame_ids.begin(), scratch.frame_ids.end(), local.soa.ids[i])) {
      scratch.skip_points[i] = 1;
    }
  }
  SearchOptions options;
  options.filled_slots = scratch.filled_slots;
  options.skip_points = scratch.skip_points;
  search_by_projection(engine, local.soa, frame, frame.pose, cam, scales, cfg, options, scratch.claims,
                       scratch.matches);
  for (const Correspondence& c : scratch.matches) {
    frame.map_points[c.keypoint] = local.soa.ids[c.point];
  }
  return frame.associated_count();
}

}  // namespace stereotrack
