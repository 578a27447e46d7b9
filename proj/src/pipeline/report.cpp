#include "stereotrack/pipeline/report.hpp"

namespace stereotrack {

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::kOrbExtraction:
      return "orb_extraction";
    case Stage::kStereoMatch:
      return "stereo_match";
    case Stage::kInitialPose:
      return "initial_pose";
    case Stage::kUpdateLocalMap:
      return "update_local_map";
    case Stage::kSearchLocalPoints:
      return "search_local_points";
    case Stage::kPoseOpt:
      return "pose_opt";
    case Stage::kTotal:
      return "total";
  }
  return "unknown";
}

std::string_view status_name(TrackStatus status) {
  switch (status) {
    case TrackStatus::kInitialized:
      return "initialized";
    case TrackStatus::kTracking:
      return "tracking";
    case TrackStatus::kInitFailed:
      return "init_failed";
    case TrackStatus::kLost:
      return "lost";
    case TrackStatus::kDropped:
      return "dropped";
  }
  return "unknown";
}

}  // namespace stereotrack
