#pragma once

#include <cstdint>
#include <string>

#include "stereotrack/bench/synthetic.hpp"
#include "stereotrack/core/camera.hpp"
#include "stereotrack/pipeline/tracker.hpp"

namespace stereotrack {

enum class SyntheticInput { kImages, kFeatures };

/// Everything a run needs besides the command line switches.
struct RunConfig {
  PinholeCamera pinhole = default_synthetic_camera();
  FisheyeCamera fisheye_left;
  FisheyeCamera fisheye_right;
  bool has_fisheye = false;
  TrackerConfig tracker;
  SyntheticSceneConfig synthetic;
  SyntheticInput synthetic_input = SyntheticInput::kImages;
  std::uint64_t seed = 1;
  double stereo_tolerance = 0.005;      // s
  double trajectory_tolerance = 0.01;   // s

  // Throws ConfigError when the fisheye section is missing.
  Camera camera(bool fisheye) const;
};

/// Parses YAML text. Missing keys keep their defaults; unknown keys are
/// errors. Throws ConfigError.
RunConfig parse_config(const std::string& yaml_text);
RunConfig load_config(const std::string& path);

}  // namespace stereotrack
