#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "stereotrack/core/camera.hpp"
#include "stereotrack/core/features.hpp"
#include "stereotrack/core/image.hpp"
#include "stereotrack/core/scale.hpp"

namespace stereotrack {

class Engine;

struct StereoMatchConfig {
  int max_distance = 100;      // T_match, bits
  double row_band = 2.0;       // pixels per octave scale
  double min_disparity = 0.1;  // pixels
  double max_disparity = -1.0;  // pixels; <= 0 means width / 2
  int window = 5;              // refinement half-size w
  int slide = 5;               // refinement half-range
  double outlier_factor = 2.0;  // m_out
  double ratio = 0.8;          // fisheye ratio test
  double max_ray_gap = 0.05;   // metres, fisheye triangulation

  void validate() const;
  double max_disparity_for(int width) const { return max_disparity > 0.0 ? max_disparity : width / 2.0; }
};

struct StereoCandidate {
  std::int32_t right = -1;
  std::int32_t distance = 0;

  bool valid() const { return right >= 0; }
  bool operator==(const StereoCandidate&) const = default;
};

struct StereoMatch {
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  double disparity = 0.0;
  double depth = 0.0;
  double right_u = 0.0;
  std::int32_t distance = 0;
  std::int32_t score = 0;  // refinement SAD at the chosen offset

  bool operator==(const StereoMatch&) const = default;
};

/// Right keypoint indices bucketed by integer row (floor of v), ascending.
class RowBuckets {
 public:
  void build(std::span<const KeyPoint> right, int height);
  const std::vector<std::uint32_t>& row(int r) const { return rows_[r]; }
  int rows() const { return static_cast<int>(rows_.size()); }
  std::size_t byte_size() const;

 private:
  std::vector<std::vector<std::uint32_t>> rows_;
};

// Whether right keypoint `r` satisfies the phase-1 geometric constraints for
// left keypoint `l`.
bool stereo_admissible(const KeyPoint& l, const KeyPoint& r, const ScaleLevels& scales, const StereoMatchConfig& cfg,
                       double max_disparity);

/// One candidate per left keypoint: the admissible right keypoint of minimal
/// descriptor distance (ties: lower right index), or none above T_match.
std::vector<StereoCandidate> match_pinhole_phase1(Engine& engine, std::span<const KeyPoint> left,
                                                  std::span<const Descriptor> left_desc,
                                                  std::span<const KeyPoint> right,
                                                  std::span<const Descriptor> right_desc, const RowBuckets& buckets,
                                                  const ScaleLevels& scales, const StereoMatchConfig& cfg,
                                                  int width);
void match_pinhole_phase1(Engine& engine, std::span<const KeyPoint> left, std::span<const Descriptor> left_desc,
                          std::span<const KeyPoint> right, std::span<const Descriptor> right_desc,
                          const RowBuckets& buckets, const ScaleLevels& scales, const StereoMatchConfig& cfg,
                          int width, std::vector<StereoCandidate>& out);

// Centre-normalised SAD between the (2w+1)^2 patch at (xl, yl) in `left` and
// patches at (xr + k, yl) in `right` for k in [-slide, slide]. False when a
// patch leaves an image. `costs` receives all 2*slide+1 values.
bool sad_slide(const GrayImage& left, const GrayImage& right, int xl, int yl, int xr, int window, int slide,
               std::vector<std::int32_t>& costs);

// Parabola vertex offset through (-1, d_minus), (0, d_zero), (1, d_plus).
double subpixel_offset(double d_minus, double d_zero, double d_plus);

/// Photometric refinement of one candidate; nullopt when rejected.
std::optional<StereoMatch> refine_match_phase2(const ImagePyramid& left_pyr, const ImagePyramid& right_pyr,
                                               const KeyPoint& left, const KeyPoint& right, std::uint32_t left_index,
                                               const StereoCandidate& candidate, const PinholeCamera& cam,
                                               const StereoMatchConfig& cfg);

// Refines every valid candidate; result in ascending left index.
std::vector<StereoMatch> refine_matches(Engine& engine, const ImagePyramid& left_pyr, const ImagePyramid& right_pyr,
                                        std::span<const KeyPoint> left, std::span<const KeyPoint> right,
                                        std::span<const StereoCandidate> candidates, const PinholeCamera& cam,
                                        const StereoMatchConfig& cfg);
void refine_matches(Engine& engine, const ImagePyramid& left_pyr, const ImagePyramid& right_pyr,
                    std::span<const KeyPoint> left, std::span<const KeyPoint> right,
                    std::span<const StereoCandidate> candidates, const PinholeCamera& cam,
                    const StereoMatchConfig& cfg, std::vector<std::optional<StereoMatch>>& slots,
                    std::vector<StereoMatch>& out);

// Drops matches whose score exceeds outlier_factor times the median score
// (median = sorted[n / 2]). Order preserved.
std::vector<StereoMatch> reject_outliers(std::span<const StereoMatch> matches, const StereoMatchConfig& cfg);

struct RayTriangulation {
  Eigen::Vector3d point;
  double gap = 0.0;  // length of the shortest segment between the rays
  double t_a = 0.0;  // ray parameters of the segment end points
  double t_b = 0.0;
};

/// Midpoint of the shortest segment between two rays; nullopt when the
/// normalised directions are parallel (cross-product norm < 1e-9).
std::optional<RayTriangulation> triangulate_rays(const Eigen::Vector3d& origin_a, const Eigen::Vector3d& dir_a,
                                                 const Eigen::Vector3d& origin_b, const Eigen::Vector3d& dir_b);

struct FisheyeMatch {
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  Eigen::Vector3d point;  // left camera coordinates
  std::int32_t distance = 0;

  bool operator==(const FisheyeMatch&) const = default;
};

/// Brute-force matching with ratio test and midpoint triangulation. `cam`
/// must be a fisheye rig.
std::vector<FisheyeMatch> match_fisheye(Engine& engine, std::span<const KeyPoint> left,
                                        std::span<const Descriptor> left_desc, std::span<const KeyPoint> right,
                                        std::span<const Descriptor> right_desc, const Camera& cam,
                                        const StereoMatchConfig& cfg);

}  // namespace stereotrack
