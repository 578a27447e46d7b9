#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "stereotrack/core/error.hpp"
#include "stereotrack/parallel/engine.hpp"
#include "stereotrack/stereo/stereo.hpp"

namespace stereotrack {

void StereoMatchConfig::validate() const {
  if (max_distance <= 0 || max_distance > 256) {
    throw ConfigError("stereo: max_distance must lie in (0, 256]");
  }
  if (!(row_band > 0.0)) {
    throw ConfigError("stereo: row_band must be positive");
  }
  if (min_disparity < 0.0 || (max_disparity > 0.0 && max_disparity <= min_disparity)) {
    throw ConfigError("stereo: need 0 <= min_disparity < max_disparity");
  }
  if (window < 1 || slide < 1) {
    throw ConfigError("stereo: window and slide must be at least 1");
  }
  if (!(outlier_factor > 0.0)) {
    throw ConfigError("stereo: outlier_factor must be positive");
  }
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw ConfigError("stereo: ratio must lie in (0, 1]");
  }
  if (!(max_ray_gap > 0.0)) {
    throw ConfigError("stereo: max_ray_gap must be positive");
  }
}

void RowBuckets::build(std::span<const KeyPoint> right, int height) {
  rows_.resize(std::max(height, 0));
  for (auto& r : rows_) {
    r.clear();
  }
  for (std::uint32_t i = 0; i < right.size(); ++i) {
    const int r = static_cast<int>(std::floor(right[i].v));
    if (r >= 0 && r < height) {
      rows_[r].push_back(i);
    }
  }
}

std::size_t RowBuckets::byte_size() const {
  std::size_t n = 0;
  for (const auto& r : rows_) {
    n += r.size();
  }
  return n * sizeof(std::uint32_t) + rows_.size() * sizeof(std::uint32_t);
}

bool stereo_admissible(const KeyPoint& l, const KeyPoint& r, const ScaleLevels& scales, const StereoMatchConfig& cfg,
                       double max_disparity) {
  if (std::abs(r.octave - l.octave) > 1) {
    return false;
  }
  const double band = cfg.row_band * scales.scale[l.octave];
  if (std::abs(static_cast<double>(r.v) - l.v) > band) {
    return false;
  }
  const double disparity = static_cast<double>(l.u) - r.u;
  return disparity >= cfg.min_disparity && disparity <= max_disparity;
}

std::vector<StereoCandidate> match_pinhole_phase1(Engine& engine, std::span<const KeyPoint> left,
                                                  std::span<const Descriptor> left_desc,
                                                  std::span<const KeyPoint> right,
                                                  std::span<const Descriptor> right_desc, const RowBuckets& buckets,
                                                  const ScaleLevels& scales, const StereoMatchConfig& cfg,
                                                  int width) {
  std::vector<StereoCandidate> out;
  match_pinhole_phase1(engine, left, left_desc, right, right_desc, buckets, scales, cfg, width, out);
  return out;
}

void match_pinhole_phase1(Engine& engine, std::span<const KeyPoint> left, std::span<const Descriptor> left_desc,
                          std::span<const KeyPoint> right, std::span<const Descriptor> right_desc,
                          const RowBuckets& buckets, const ScaleLevels& scales, const StereoMatchConfig& cfg,
                          int width, std::vector<StereoCandidate>& out) {
  const double max_disp = cfg.max_disparity_for(width);
  out.assign(left.size(), StereoCandidate{});
  engine.parallel_for(left.size(), [&](std::size_t i) {
    const KeyPoint& kl = left[i];
    const double band = cfg.row_band * scales.scale[kl.octave];
    const int r0 = std::max(0, static_cast<int>(std::floor(kl.v - band)));
    const int r1 = std::min(buckets.rows() - 1, static_cast<int>(std::floor(kl.v + band)));
    int best = cfg.max_distance + 1;
    std::int32_t best_idx = -1;
    for (int r = r0; r <= r1; ++r) {
      for (std::uint32_t j : buckets.row(r)) {
        if (!stereo_admissible(kl, right[j], scales, cfg, max_disp)) {
          continue;
        }
        const int d = descriptor_distance(left_desc[i], right_desc[j]);
        if (d < best || (d == best && static_cast<std::int32_t>(j) < best_idx)) {
          best = d;
          best_idx = static_cast<std::int32_t>(j);
        }
      }
    }
    if (best_idx >= 0 && best <= cfg.max_distance) {
      out[i] = StereoCandidate{best_idx, best};
    }
  });
}

bool sad_slide(const GrayImage& left, const GrayImage& right, int xl, int yl, int xr, int window, int slide,
               std::vector<std::int32_t>& costs) {
  if (xl - window < 0 || xl + window >= left.width || yl - window < 0 || yl + window >= left.height ||
      yl + window >= right.height || xr - slide - window < 0 || xr + slide + window >= right.width) {
    return false;
  }
  costs.assign(2 * slide + 1, 0);
  const int cl = left.at(xl, yl);
  for (int k = -slide; k <= slide; ++k) {
    const int cr = right.at(xr + k, yl);
    std::int32_t sad = 0;
    for (int dy = -window; dy <= window; ++dy) {
      const std::uint8_t* lrow = left.row(yl + dy);
      const std::uint8_t* rrow = right.row(yl + dy);
      for (int dx = -window; dx <= window; ++dx) {
        sad += std::abs((lrow[xl + dx] - cl) - (rrow[xr + k + dx] - cr));
      }
    }
    costs[k + slide] = sad;
  }
  return true;
}

double subpixel_offset(double d_minus, double d_zero, double d_plus) {
  return (d_minus - d_plus) / (2.0 * (d_minus + d_plus - 2.0 * d_zero));
}

std::optional<StereoMatch> refine_match_phase2(const ImagePyramid& left_pyr, const ImagePyramid& right_pyr,
                                               const KeyPoint& left, const KeyPoint& right, std::uint32_t left_index,
                                               const StereoCandidate& candidate, const PinholeCamera& cam,
                                               const StereoMatchConfig& cfg) {
  if (!candidate.valid()) {
    return std::nullopt;
  }
  const int octave = left.octave;
  const double scale = std::pow(left_pyr.scale_factor, octave);
  const int xl = static_cast<int>(std::lround(left.u / scale));
  const int yl = static_cast<int>(std::lround(left.v / scale));
  const int xr = static_cast<int>(std::lround(right.u / scale));
  std::vector<std::int32_t> costs;
  if (!sad_slide(left_pyr.levels[octave], right_pyr.levels[octave], xl, yl, xr, cfg.window, cfg.slide, costs)) {
    return std::nullopt;
  }
  int best = 0;
  for (int k = 1; k < static_cast<int>(costs.size()); ++k) {
    if (costs[k] < costs[best]) {
      best = k;
    }
  }
  if (best == 0 || best == static_cast<int>(costs.size()) - 1) {
    return std::nullopt;
  }
  const double d_minus = costs[best - 1];
  const double d_zero = costs[best];
  const double d_plus = costs[best + 1];
  const double denom = 2.0 * (d_minus + d_plus - 2.0 * d_zero);
  if (!(denom > 0.0)) {
    return std::nullopt;
  }
  const double delta = subpixel_offset(d_minus, d_zero, d_plus);
  if (delta < -1.0 || delta > 1.0) {
    return std::nullopt;
  }
  const double right_u = scale * (xr + (best - cfg.slide) + delta);
  const double disparity = static_cast<double>(left.u) - right_u;
  if (disparity < cfg.min_disparity || disparity > cfg.max_disparity_for(cam.width) || !(disparity > 0.0)) {
    return std::nullopt;
  }
  StereoMatch m;
  m.left = left_index;
  m.right = static_cast<std::uint32_t>(candidate.right);
  m.disparity = disparity;
  m.depth = cam.baseline_times_fx / disparity;
  m.right_u = right_u;
  m.distance = candidate.distance;
  m.score = costs[best];
  return m;
}

std::vector<StereoMatch> refine_matches(Engine& engine, const ImagePyramid& left_pyr, const ImagePyramid& right_pyr,
                                        std::span<const KeyPoint> left, std::span<const KeyPoint> right,
                                        std::span<const StereoCandidate> candidates, const PinholeCamera& cam,
                                        const StereoMatchConfig& cfg) {
  std::vector<std::optional<StereoMatch>> slots;
  std::vector<StereoMatch> out;
  refine_matches(engine, left_pyr, right_pyr, left, right, candidates, cam, cfg, slots, out);
  return out;
}

void refine_matches(Engine& engine, const ImagePyramid& left_pyr, const ImagePyramid& right_pyr,
                    std::span<const KeyPoint> left, std::span<const KeyPoint> right,
                    std::span<const StereoCandidate> candidates, const PinholeCamera& cam,
                    const StereoMatchConfig& cfg, std::vector<std::optional<StereoMatch>>& slots,
                    std::vector<StereoMatch>& out) {
  slots.assign(left.size(), std::nullopt);
  engine.parallel_for(left.size(), [&](std::size_t i) {
    const StereoCandidate& c = candidates[i];
    if (c.valid()) {
      slots[i] = refine_match_phase2(left_pyr, right_pyr, left[i], right[c.right], static_cast<std::uint32_t>(i), c,
                                     cam, cfg);
    }
  });
  out.clear();
  for (const auto& s : slots) {
    if (s) {
      out.push_back(*s);
    }
  }
}

std::vector<StereoMatch> reject_outliers(std::span<const StereoMatch> matches, const StereoMatchConfig& cfg) {
  if (matches.empty()) {
    return {};
  }
  std::vector<std::int32_t> scores;
  scores.reserve(matches.size());
  for (const StereoMatch& m : matches) {
    scores.push_back(m.score);
  }
  std::nth_element(scores.begin(), scores.begin() + scores.size() / 2, scores.end());
  const double threshold = cfg.outlier_factor * scores[scores.size() / 2];
  std::vector<StereoMatch> out;
  for (const StereoMatch& m : matches) {
    if (m.score <= threshold) {
      out.push_back(m);
    }
  }
  return out;
}

}  // namespace stereotrack
