#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "stereotrack/parallel/staging.hpp"

namespace stereotrack {

enum class Stage : int {
  kOrbExtraction = 0,
  kStereoMatch,
  kInitialPose,
  kUpdateLocalMap,
  kSearchLocalPoints,
  kPoseOpt,
  kTotal,
};

inline constexpr int kStageCount = 7;

std::string_view stage_name(Stage stage);
inline std::string_view stage_name(int stage) { return stage_name(static_cast<Stage>(stage)); }

enum class TrackStatus { kInitialized, kTracking, kInitFailed, kLost, kDropped };

std::string_view status_name(TrackStatus status);

/// Per-frame timing and staging record.
struct StageReport {
  std::uint64_t frame_id = 0;
  double timestamp = 0.0;
  std::array<double, kStageCount> micros{};
  std::array<StageBytes, kStageCount> bytes{};
  bool dropped = false;
  TrackStatus status = TrackStatus::kTracking;
  std::size_t stereo_matches = 0;
  std::size_t associations = 0;
  std::size_t inliers = 0;
  bool keyframe = false;

  double& time(Stage s) { return micros[static_cast<int>(s)]; }
  double time(Stage s) const { return micros[static_cast<int>(s)]; }
  StageBytes& staged(Stage s) { return bytes[static_cast<int>(s)]; }
  const StageBytes& staged(Stage s) const { return bytes[static_cast<int>(s)]; }
};

}  // namespace stereotrack
