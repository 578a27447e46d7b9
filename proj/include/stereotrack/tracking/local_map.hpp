#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "stereotrack/core/camera.hpp"
#include "stereotrack/core/frame.hpp"
#include "stereotrack/core/map.hpp"
#include "stereotrack/core/map_point.hpp"
#include "stereotrack/core/scale.hpp"
#include "stereotrack/projection/search.hpp"

namespace stereotrack {

class Engine;

/// Keyframes observing the frame's points, the points those keyframes
/// observe, and a decomposed snapshot of the points (same order as `points`).
struct LocalMap {
  std::vector<KeyFrameId> keyframes;  // ascending
  std::vector<MapPointId> points;     // ascending
  MapPointSoA soa;

  bool empty() const { return points.empty(); }
  void clear();
};

void update_local_map(const Frame& frame, const Map& map, LocalMap& out);
LocalMap update_local_map(const Frame& frame, const Map& map);

struct LocalSearchScratch {
  std::vector<std::uint8_t> skip_points;
  std::vector<std::uint8_t> filled_slots;
  std::vector<MapPointId> frame_ids;
  std::vector<Correspondence> matches;
  std::vector<std::optional<Correspondence>> claims;
};

/// Searches the local points not yet associated with the frame and writes
/// the winners into the frame's slots. Returns the frame's associated count.
std::size_t search_local_points(Engine& engine, const LocalMap& local, Frame& frame, const Camera& cam,
                                const ScaleLevels& scales, const ProjectionSearchConfig& cfg,
                                LocalSearchScratch& scratch);

}  // namespace stereotrack
