#include <algorithm>
#include <cmath>

#include "stereotrack/features/extraction.hpp"
#include "stereotrack/parallel/engine.hpp"

namespace stereotrack {

OrbExtractor::OrbExtractor(const ExtractionConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  per_level_.resize(cfg_.levels);
  blurred_.resize(cfg_.levels);
}

std::vector<int> OrbExtractor::level_budgets() const {
  const double inv = 1.0 / cfg_.scale_factor;
  std::vector<int> budgets(cfg_.levels);
  double desired = cfg_.n_features * (1.0 - inv) / (1.0 - std::pow(inv, cfg_.levels));
  int sum = 0;
  for (int l = 0; l + 1 < cfg_.levels; ++l) {
    budgets[l] = static_cast<int>(std::lround(desired));
    sum += budgets[l];
    desired *= inv;
  }
  budgets[cfg_.levels - 1] = std::max(cfg_.n_features - sum, 0);
  return budgets;
}

void OrbExtractor::extract(Engine& engine, const GrayImage& image, ImagePyramid& pyr,
                           std::vector<KeyPoint>& keypoints, std::vector<Descriptor>& descriptors,
                           ExtractionStats* stats) {
  build_pyramid(image, cfg_, pyr);
  const auto levels = static_cast<std::size_t>(cfg_.levels);
  engine.parallel_for(levels, [&](std::size_t l) {
    per_level_[l] = detect_level(pyr.levels[l], static_cast<int>(l), cfg_);
    blur_for_descriptor(pyr.levels[l], blurred_[l]);
  });

  const std::vector<int> budgets = level_budgets();
  keypoints.clear();
  std::size_t candidates = 0;
  double s = 1.0;
  for (std::size_t l = 0; l < levels; ++l) {
    std::vector<KeyPoint>& level = per_level_[l];
    candidates += level.size();
    for (KeyPoint& kp : level) {
      kp.u = static_cast<float>(kp.u * s);
      kp.v = static_cast<float>(kp.v * s);
    }
    const std::vector<KeyPoint> kept = filter_keypoints(level, budgets[l], image.width, image.height);
    keypoints.insert(keypoints.end(), kept.begin(), kept.end());
    s *= cfg_.scale_factor;
  }
  if (stats != nullptr) {
    stats->candidates = candidates;
  }

  std::vector<double> scales(levels);
  scales[0] = 1.0;
  for (std::size_t l = 1; l < levels; ++l) {
    scales[l] = scales[l - 1] * cfg_.scale_factor;
  }
  descriptors.resize(keypoints.size());
  engine.parallel_for(keypoints.size(), [&](std::size_t i) {
    KeyPoint& kp = keypoints[i];
    const double sc = scales[kp.octave];
    const int x = static_cast<int>(std::lround(kp.u / sc));
    const int y = static_cast<int>(std::lround(kp.v / sc));
    kp.angle = intensity_centroid_angle(pyr.levels[kp.octave], x, y, cfg_.orientation_radius);
    descriptors[i] = compute_descriptor(blurred_[kp.octave], x, y, kp.angle);
  });
}

}  // namespace stereotrack
