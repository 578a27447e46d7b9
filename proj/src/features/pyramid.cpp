#include <algorithm>
#include <cmath>

#include "stereotrack/core/error.hpp"
#include "stereotrack/features/extraction.hpp"

namespace stereotrack {
namespace {

constexpr int kWeightBits = 11;
constexpr int kWeightOne = 1 << kWeightBits;

// [1 2 1] x [1 2 1] / 16 with clamped borders.
void smooth3(const GrayImage& src, std::vector<std::uint16_t>& tmp, GrayImage& dst) {
  const int w = src.width;
  const int h = src.height;
  tmp.resize(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* r = src.row(y);
    std::uint16_t* t = tmp.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      const int xl = std::max(0, x - 1);
      const int xr = std::min(w - 1, x + 1);
      t[x] = static_cast<std::uint16_t>(r[xl] + 2 * r[x] + r[xr]);
    }
  }
  dst.reshape(w, h);
  for (int y = 0; y < h; ++y) {
    const std::uint16_t* a = tmp.data() + static_cast<std::size_t>(std::max(0, y - 1)) * w;
    const std::uint16_t* b = tmp.data() + static_cast<std::size_t>(y) * w;
    const std::uint16_t* c = tmp.data() + static_cast<std::size_t>(std::min(h - 1, y + 1)) * w;
    std::uint8_t* out = dst.row(y);
    for (int x = 0; x < w; ++x) {
      out[x] = static_cast<std::uint8_t>((a[x] + 2 * b[x] + c[x] + 8) >> 4);
    }
  }
}

struct Tap {
  int i0;
  int i1;
  int w1;  // weight of i1 in 1/2048
};

std::vector<Tap> make_taps(int src_size, int dst_size) {
  std::vector<Tap> taps(dst_size);
  const double ratio = static_cast<double>(src_size) / dst_size;
  for (int i = 0; i < dst_size; ++i) {
    double f = (i + 0.5) * ratio - 0.5;
    f = std::clamp(f, 0.0, static_cast<double>(src_size - 1));
    const int i0 = static_cast<int>(std::floor(f));
    const int i1 = std::min(i0 + 1, src_size - 1);
    const int w1 = static_cast<int>(std::lround((f - i0) * kWeightOne));
    taps[i] = Tap{i0, i1, w1};
  }
  return taps;
}

// Bilinear resampling in fixed point; weights of every output pixel sum to
// exactly one, so constant images stay constant.
void resample(const GrayImage& src, int w, int h, GrayImage& dst) {
  const std::vector<Tap> tx = make_taps(src.width, w);
  const std::vector<Tap> ty = make_taps(src.height, h);
  dst.reshape(w, h);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* r0 = src.row(ty[y].i0);
    const std::uint8_t* r1 = src.row(ty[y].i1);
    const std::int64_t wy1 = ty[y].w1;
    const std::int64_t wy0 = kWeightOne - wy1;
    std::uint8_t* out = dst.row(y);
    for (int x = 0; x < w; ++x) {
      const Tap& t = tx[x];
      const std::int64_t wx1 = t.w1;
      const std::int64_t wx0 = kWeightOne - wx1;
      const std::int64_t top = r0[t.i0] * wx0 + r0[t.i1] * wx1;
      const std::int64_t bottom = r1[t.i0] * wx0 + r1[t.i1] * wx1;
      const std::int64_t v = (top * wy0 + bottom * wy1 + (std::int64_t{1} << (2 * kWeightBits - 1))) >>
                             (2 * kWeightBits);
      out[x] = static_cast<std::uint8_t>(v);
    }
  }
}

}  // namespace

void ExtractionConfig::validate() const {
  if (n_features <= 0) {
    throw ConfigError("extraction: n_features must be positive");
  }
  if (levels < 1) {
    throw ConfigError("extraction: levels must be at least 1");
  }
  if (!(scale_factor > 1.0)) {
    throw ConfigError("extraction: scale_factor must exceed 1");
  }
  if (min_fast_threshold > fast_threshold || min_fast_threshold < 1) {
    throw ConfigError("extraction: need 1 <= min_fast_threshold <= fast_threshold");
  }
  if (patch_size < 3 || orientation_radius < 1 || edge_threshold < 4 || detection_cell < 4) {
    throw ConfigError("extraction: patch geometry out of range");
  }
  if (orientation_radius >= edge_threshold) {
    throw ConfigError("extraction: orientation_radius must be below edge_threshold");
  }
}

std::vector<std::pair<int, int>> pyramid_level_sizes(int width, int height, const ExtractionConfig& cfg) {
  std::vector<std::pair<int, int>> sizes(cfg.levels);
  double s = 1.0;
  for (int l = 0; l < cfg.levels; ++l) {
    sizes[l] = {static_cast<int>(std::floor(width / s)), static_cast<int>(std::floor(height / s))};
    s *= cfg.scale_factor;
  }
  return sizes;
}

void build_pyramid(const GrayImage& image, const ExtractionConfig& cfg, ImagePyramid& out) {
  cfg.validate();
  if (image.empty()) {
    throw ConfigError("build_pyramid: empty image");
  }
  const auto sizes = pyramid_level_sizes(image.width, image.height, cfg);
  const auto [wl, hl] = sizes.back();
  if (wl < cfg.patch_size || hl < cfg.patch_size) {
    throw ConfigError("build_pyramid: image too small for " + std::to_string(cfg.levels) + " levels");
  }
  out.scale_factor = cfg.scale_factor;
  out.levels.resize(cfg.levels);
  out.levels[0].reshape(image.width, image.height);
  std::copy(image.pixels.begin(), image.pixels.end(), out.levels[0].pixels.begin());
  std::vector<std::uint16_t> tmp;
  GrayImage smoothed;
  for (int l = 1; l < cfg.levels; ++l) {
    smooth3(out.levels[l - 1], tmp, smoothed);
    resample(smoothed, sizes[l].first, sizes[l].second, out.levels[l]);
  }
}

ImagePyramid build_pyramid(const GrayImage& image, const ExtractionConfig& cfg) {
  ImagePyramid pyr;
  build_pyramid(image, cfg, pyr);
  return pyr;
}

}  // namespace stereotrack
