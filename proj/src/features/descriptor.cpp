#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "stereotrack/core/error.hpp"
#include "stereotrack/features/extraction.hpp"

namespace stereotrack {
namespace {

constexpr std::array<int, 7> kBinomial{1, 6, 15, 20, 15, 6, 1};
constexpr int kPatternSeed = 0x5eed;
constexpr double kPatternSigma = 6.2;
constexpr int kPatternClip = 13;

double level_scale(const ImagePyramid& pyr, int octave) {
  double s = 1.0;
  for (int i = 0; i < octave; ++i) {
    s *= pyr.scale_factor;
  }
  return s;
}

std::pair<int, int> level_pixel(const ImagePyramid& pyr, const KeyPoint& kp) {
  const double s = level_scale(pyr, kp.octave);
  return {static_cast<int>(std::lround(kp.u / s)), static_cast<int>(std::lround(kp.v / s))};
}

}  // namespace

float intensity_centroid_angle(const GrayImage& image, int x, int y, int radius) {
  if (x - radius < 0 || y - radius < 0 || x + radius >= image.width || y + radius >= image.height) {
    throw BorderError("orientation patch leaves the image");
  }
  std::int64_t m10 = 0;
  std::int64_t m01 = 0;
  const int r2 = radius * radius;
  for (int dy = -radius; dy <= radius; ++dy) {
    const std::uint8_t* row = image.row(y + dy);
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy > r2) {
        continue;
      }
      const int v = row[x + dx];
      m10 += static_cast<std::int64_t>(dx) * v;
      m01 += static_cast<std::int64_t>(dy) * v;
    }
  }
  double a = std::atan2(static_cast<double>(m01), static_cast<double>(m10));
  if (a < 0.0) {
    a += 2.0 * std::numbers::pi;
  }
  auto angle = static_cast<float>(a);
  if (angle >= static_cast<float>(2.0 * std::numbers::pi)) {
    angle = 0.0F;
  }
  return angle;
}

float compute_orientation(const ImagePyramid& pyr, const KeyPoint& kp, const ExtractionConfig& cfg) {
  const auto [x, y] = level_pixel(pyr, kp);
  return intensity_centroid_angle(pyr.levels.at(kp.octave), x, y, cfg.orientation_radius);
}

void blur_for_descriptor(const GrayImage& image, BlurredImage& out) {
  const int w = image.width;
  const int h = image.height;
  std::vector<std::int32_t> tmp(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* r = image.row(y);
    std::int32_t* t = tmp.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      std::int32_t acc = 0;
      for (int k = 0; k < 7; ++k) {
        acc += kBinomial[k] * r[std::clamp(x + k - 3, 0, w - 1)];
      }
      t[x] = acc;
    }
  }
  out.width = w;
  out.height = h;
  out.sums.resize(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    std::int32_t* o = out.sums.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      std::int32_t acc = 0;
      for (int k = 0; k < 7; ++k) {
        acc += kBinomial[k] * tmp[static_cast<std::size_t>(std::clamp(y + k - 3, 0, h - 1)) * w + x];
      }
      o[x] = acc;
    }
  }
}

DescriptorPattern::DescriptorPattern() {
  std::mt19937 rng(kPatternSeed);
  auto uniform = [&rng]() { return (static_cast<double>(rng()) + 0.5) / 4294967296.0; };
  auto gaussian = [&]() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  };
  auto coord = [&]() {
    const long c = std::lround(gaussian() * kPatternSigma);
    return static_cast<int>(std::clamp<long>(c, -kPatternClip, kPatternClip));
  };
  std::array<Pair, 256> base{};
  for (Pair& p : base) {
    do {
      p.x1 = static_cast<std::int8_t>(coord());
      p.y1 = static_cast<std::int8_t>(coord());
      p.x2 = static_cast<std::int8_t>(coord());
      p.y2 = static_cast<std::int8_t>(coord());
    } while (p.x1 == p.x2 && p.y1 == p.y2);
  }
  for (int b = 0; b < kOrientationBins; ++b) {
    const double a = 2.0 * std::numbers::pi * b / kOrientationBins;
    const double c = std::cos(a);
    const double s = std::sin(a);
    auto rot = [&](int x, int y, std::int8_t& ox, std::int8_t& oy) {
      ox = static_cast<std::int8_t>(std::lround(c * x - s * y));
      oy = static_cast<std::int8_t>(std::lround(s * x + c * y));
    };
    for (int i = 0; i < 256; ++i) {
      Pair& p = rotated_[b][i];
      rot(base[i].x1, base[i].y1, p.x1, p.y1);
      rot(base[i].x2, base[i].y2, p.x2, p.y2);
    }
  }
}

const DescriptorPattern& DescriptorPattern::instance() {
  static const DescriptorPattern pattern;
  return pattern;
}

int DescriptorPattern::angle_bin(float angle) {
  const double step = 2.0 * std::numbers::pi / kOrientationBins;
  const long b = std::lround(static_cast<double>(angle) / step);
  return static_cast<int>(((b % kOrientationBins) + kOrientationBins) % kOrientationBins);
}

Descriptor compute_descriptor(const BlurredImage& blurred, int x, int y, float angle) {
  const auto& pattern = DescriptorPattern::instance().rotated(DescriptorPattern::angle_bin(angle));
  constexpr std::int32_t kMid = 255 * 4096;
  Descriptor d;
  for (int i = 0; i < 256; ++i) {
    const auto& p = pattern[i];
    const std::int32_t a = blurred.at(x + p.x1, y + p.y1);
    const std::int32_t b = blurred.at(x + p.x2, y + p.y2);
    d.set_bit(i, a != b ? a < b : 2 * a < kMid);
  }
  return d;
}

std::vector<Descriptor> compute_descriptors(const ImagePyramid& pyr, std::span<const KeyPoint> kps,
                                            const ExtractionConfig& cfg) {
  (void)cfg;
  std::vector<BlurredImage> blurred(pyr.levels.size());
  std::vector<bool> ready(pyr.levels.size(), false);
  std::vector<Descriptor> out;
  out.reserve(kps.size());
  for (const KeyPoint& kp : kps) {
    if (!ready.at(kp.octave)) {
      blur_for_descriptor(pyr.levels[kp.octave], blurred[kp.octave]);
      ready[kp.octave] = true;
    }
    const auto [x, y] = level_pixel(pyr, kp);
    out.push_back(compute_descriptor(blurred[kp.octave], x, y, kp.angle));
  }
  return out;
}

}  // namespace stereotrack
