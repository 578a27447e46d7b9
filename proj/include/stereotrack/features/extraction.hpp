#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "stereotrack/core/features.hpp"
#include "stereotrack/core/image.hpp"

namespace stereotrack {

class Engine;

struct ExtractionConfig {
  int n_features = 1200;
  int levels = 8;
  double scale_factor = 1.2;
  int fast_threshold = 20;
  int min_fast_threshold = 7;
  int patch_size = 31;
  int orientation_radius = 15;
  // Keypoints are kept at least this far from every level border so the
  // rotated descriptor pattern never leaves the image.
  int edge_threshold = 19;
  int detection_cell = 30;

  void validate() const;
};

// ---------------------------------------------------------------- pyramid

// floor(size / s^l) for every level.
std::vector<std::pair<int, int>> pyramid_level_sizes(int width, int height, const ExtractionConfig& cfg);

// Throws ConfigError when the image is empty or the coarsest level is
// smaller than the descriptor patch.
ImagePyramid build_pyramid(const GrayImage& image, const ExtractionConfig& cfg);
void build_pyramid(const GrayImage& image, const ExtractionConfig& cfg, ImagePyramid& out);

// ---------------------------------------------------------------- detection

// Offsets of the 16-pixel Bresenham circle of radius 3, clockwise from the top.
inline constexpr std::array<std::array<int, 2>, 16> kFastCircle{{{0, -3}, {1, -3}, {2, -2}, {3, -1},
                                                                 {3, 0}, {3, 1}, {2, 2}, {1, 3},
                                                                 {0, 3}, {-1, 3}, {-2, 2}, {-3, 1},
                                                                 {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}}};

// Largest threshold t for which (x, y) passes the 9-of-16 segment test
// (all arc pixels brighter than c + t or all darker than c - t). Negative
// when no arc is strictly brighter or darker at all.
int fast_score(const GrayImage& image, int x, int y);

// Keypoints of one level in level pixel coordinates (u = x, v = y) with
// octave = level, before spatial filtering. Sorted in raster order.
std::vector<KeyPoint> detect_level(const GrayImage& image, int level, const ExtractionConfig& cfg);

// All levels, coordinates mapped to level 0 (multiplied by s^octave).
std::vector<KeyPoint> detect_keypoints(Engine& engine, const ImagePyramid& pyr, const ExtractionConfig& cfg);

// ---------------------------------------------------------------- filtering

struct QuadtreeLeaf {
  float x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  std::vector<std::uint32_t> members;  // indices into the input, ascending
  std::uint32_t survivor = 0;
};

struct QuadtreeResult {
  std::vector<QuadtreeLeaf> leaves;
  std::vector<std::uint32_t> kept;  // survivor indices, ascending
};

// Quadtree subdivision of [0,width)x[0,height) until about `target` leaves
// exist; each leaf keeps its highest-response keypoint (ties: lower index).
QuadtreeResult distribute_quadtree(std::span<const KeyPoint> kps, int target, int width, int height);

// Returns the survivors in input order; the input unchanged when it already
// fits the budget.
std::vector<KeyPoint> filter_keypoints(std::span<const KeyPoint> kps, int target, int width, int height);

// ---------------------------------------------------------------- description

// Intensity-centroid angle in [0, 2*pi) at level pixel (x, y). Throws
// BorderError when the circular patch leaves the image.
float intensity_centroid_angle(const GrayImage& image, int x, int y, int radius);

float compute_orientation(const ImagePyramid& pyr, const KeyPoint& kp, const ExtractionConfig& cfg);

// Level image convolved with a 7x7 binomial kernel, kept at full precision
// (sums scaled by 4096).
struct BlurredImage {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> sums;

  std::int32_t at(int x, int y) const { return sums[static_cast<std::size_t>(y) * width + x]; }
};

void blur_for_descriptor(const GrayImage& image, BlurredImage& out);

inline constexpr int kOrientationBins = 30;

/// Fixed 256-pair sampling pattern and its 30 rotated copies.
class DescriptorPattern {
 public:
  struct Pair {
    std::int8_t x1, y1, x2, y2;
  };

  static const DescriptorPattern& instance();

  const std::array<Pair, 256>& rotated(int bin) const { return rotated_[bin]; }
  const std::array<Pair, 256>& base() const { return rotated_[0]; }

  static int angle_bin(float angle);

 private:
  DescriptorPattern();
  std::array<std::array<Pair, 256>, kOrientationBins> rotated_;
};

Descriptor compute_descriptor(const BlurredImage& blurred, int x, int y, float angle);

std::vector<Descriptor> compute_descriptors(const ImagePyramid& pyr, std::span<const KeyPoint> kps,
                                            const ExtractionConfig& cfg);

// ---------------------------------------------------------------- pipeline

struct ExtractionStats {
  std::size_t candidates = 0;  // detected before filtering
};

/// Full ORB-style extraction with reusable internal buffers. Detection runs
/// data-parallel over levels, orientation and description over keypoints,
/// the quadtree filter sequentially.
class OrbExtractor {
 public:
  explicit OrbExtractor(const ExtractionConfig& cfg);

  const ExtractionConfig& config() const { return cfg_; }

  void extract(Engine& engine, const GrayImage& image, ImagePyramid& pyr, std::vector<KeyPoint>& keypoints,
               std::vector<Descriptor>& descriptors, ExtractionStats* stats = nullptr);

  // Per-level keypoint budgets summing to n_features.
  std::vector<int> level_budgets() const;

 private:
  ExtractionConfig cfg_;
  std::vector<std::vector<KeyPoint>> per_level_;
  std::vector<BlurredImage> blurred_;
};

}  // namespace stereotrack
