#include <algorithm>
#include <cmath>

#include "stereotrack/core/error.hpp"
#include "stereotrack/features/extraction.hpp"
#include "stereotrack/parallel/engine.hpp"

namespace stereotrack {
namespace {

constexpr int kArc = 9;

// max over the 16 arcs of length 9 of the minimum of d along the arc.
int max_arc_min(const int* d) {
  int best = -1000;
  for (int start = 0; start < 16; ++start) {
    int m = d[start];
    for (int j = 1; j < kArc && m > best; ++j) {
      m = std::min(m, d[(start + j) & 15]);
    }
    best = std::max(best, m);
  }
  return best;
}

int score_at(const std::uint8_t* p, const int* offsets) {
  const int c = *p;
  int bright[16];
  int dark[16];
  for (int k = 0; k < 16; ++k) {
    const int diff = p[offsets[k]] - c;
    bright[k] = diff;
    dark[k] = -diff;
  }
  return std::max(max_arc_min(bright), max_arc_min(dark)) - 1;
}

// Score of a pixel already known to be a corner at threshold `floor`:
// the same arc max-min as score_at, pruned by the running best.
int corner_score(const std::uint8_t* p, const int* offsets, int floor) {
  const int c = *p;
  int d[25];
  for (int k = 0; k < 25; ++k) {
    d[k] = c - p[offsets[k & 15]];
  }
  int a0 = floor;
  for (int k = 0; k < 16; k += 2) {
    int a = std::min(std::min(d[k + 1], d[k + 2]), d[k + 3]);
    if (a <= a0) {
      continue;
    }
    for (int j = 4; j <= 8; ++j) {
      a = std::min(a, d[k + j]);
    }
    a0 = std::max(a0, std::min(a, d[k]));
    a0 = std::max(a0, std::min(a, d[k + 9]));
  }
  int b0 = -a0;
  for (int k = 0; k < 16; k += 2) {
    int b = std::max(std::max(d[k + 1], d[k + 2]), std::max(d[k + 3], std::max(d[k + 4], d[k + 5])));
    if (b >= b0) {
      continue;
    }
    for (int j = 6; j <= 8; ++j) {
      b = std::max(b, d[k + j]);
    }
    b0 = std::min(b0, std::max(b, d[k]));
    b0 = std::min(b0, std::max(b, d[k + 9]));
  }
  return -b0 - 1;
}

// Necessary condition for a corner at threshold t: every 9-arc covers at
// least two of the four compass pixels.
bool passes_compass(const std::uint8_t* p, const int* offsets, int t) {
  const int c = *p;
  int bright = 0;
  int dark = 0;
  for (int k = 0; k < 16; k += 4) {
    const int v = p[offsets[k]];
    bright += v > c + t;
    dark += v < c - t;
  }
  return bright >= 2 || dark >= 2;
}

bool has_arc(std::uint32_t mask) {
  std::uint32_t run = mask | (mask << 16);
  for (int i = 1; i < kArc; ++i) {
    run &= (mask | (mask << 16)) >> i;
  }
  return run != 0;
}

// Exact segment test at threshold t.
bool is_corner(const std::uint8_t* p, const int* offsets, int t) {
  const int c = *p;
  std::uint32_t bright = 0;
  std::uint32_t dark = 0;
  for (int k = 0; k < 16; ++k) {
    const int v = p[offsets[k]];
    bright |= static_cast<std::uint32_t>(v > c + t) << k;
    dark |= static_cast<std::uint32_t>(v < c - t) << k;
  }
  return has_arc(bright) || has_arc(dark);
}

}  // namespace

int fast_score(const GrayImage& image, int x, int y) {
  if (x < 3 || y < 3 || x >= image.width - 3 || y >= image.height - 3) {
    throw BorderError("fast_score: circle leaves the image");
  }
  int offsets[16];
  for (int k = 0; k < 16; ++k) {
    offsets[k] = kFastCircle[k][1] * image.width + kFastCircle[k][0];
  }
  return score_at(image.row(y) + x, offsets);
}

std::vector<KeyPoint> detect_level(const GrayImage& image, int level, const ExtractionConfig& cfg) {
  std::vector<KeyPoint> out;
  const int edge = cfg.edge_threshold;
  const int x0 = edge;
  const int y0 = edge;
  const int x1 = image.width - edge;
  const int y1 = image.height - edge;
  if (x1 <= x0 || y1 <= y0) {
    return out;
  }
  int offsets[16];
  for (int k = 0; k < 16; ++k) {
    offsets[k] = kFastCircle[k][1] * image.width + kFastCircle[k][0];
  }
  // Score map over the detection region plus a one pixel ring for
  // non-maximum suppression. Pixels failing the segment test at the lowest
  // threshold score below it and are stored as zero.
  const int mw = (x1 - x0) + 2;
  const int mh = (y1 - y0) + 2;
  std::vector<std::int16_t> scores(static_cast<std::size_t>(mw) * mh, 0);
  const int t_min = cfg.min_fast_threshold;
  for (int my = 0; my < mh; ++my) {
    const int y = y0 - 1 + my;
    const std::uint8_t* row = image.row(y);
    std::int16_t* srow = scores.data() + static_cast<std::size_t>(my) * mw;
    for (int mx = 0; mx < mw; ++mx) {
      const int x = x0 - 1 + mx;
      const std::uint8_t* p = row + x;
      if (!passes_compass(p, offsets, t_min) || !is_corner(p, offsets, t_min)) {
        continue;
      }
      srow[mx] = static_cast<std::int16_t>(corner_score(p, offsets, t_min));
    }
  }

  // Plateaus keep their first pixel in raster order.
  auto is_local_max = [&](int mx, int my) {
    const std::int16_t s = scores[static_cast<std::size_t>(my) * mw + mx];
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) {
          continue;
        }
        const std::int16_t n = scores[static_cast<std::size_t>(my + dy) * mw + mx + dx];
        if (n > s || (n == s && (dy < 0 || (dy == 0 && dx < 0)))) {
          return false;
        }
      }
    }
    return true;
  };

  const int region_w = x1 - x0;
  const int region_h = y1 - y0;
  const int cols = std::max(1, static_cast<int>(std::lround(static_cast<double>(region_w) / cfg.detection_cell)));
  const int rows = std::max(1, static_cast<int>(std::lround(static_cast<double>(region_h) / cfg.detection_cell)));
  const int cell_w = (region_w + cols - 1) / cols;
  const int cell_h = (region_h + rows - 1) / rows;

  std::vector<KeyPoint> cell_fast;
  std::vector<KeyPoint> cell_min;
  for (int cr = 0; cr < rows; ++cr) {
    for (int cc = 0; cc < cols; ++cc) {
      cell_fast.clear();
      cell_min.clear();
      const int cy0 = y0 + cr * cell_h;
      const int cy1 = std::min(y1, cy0 + cell_h);
      const int cx0 = x0 + cc * cell_w;
      const int cx1 = std::min(x1, cx0 + cell_w);
      for (int y = cy0; y < cy1; ++y) {
        const int my = y - y0 + 1;
        for (int x = cx0; x < cx1; ++x) {
          const int mx = x - x0 + 1;
          const int s = scores[static_cast<std::size_t>(my) * mw + mx];
          if (s < t_min || !is_local_max(mx, my)) {
            continue;
          }
          KeyPoint kp;
          kp.u = static_cast<float>(x);
          kp.v = static_cast<float>(y);
          kp.octave = level;
          kp.response = static_cast<float>(s);
          cell_min.push_back(kp);
          if (s >= cfg.fast_threshold) {
            cell_fast.push_back(kp);
          }
        }
      }
      const auto& chosen = cell_fast.empty() ? cell_min : cell_fast;
      out.insert(out.end(), chosen.begin(), chosen.end());
    }
  }
  std::sort(out.begin(), out.end(), [](const KeyPoint& a, const KeyPoint& b) {
    return a.v != b.v ? a.v < b.v : a.u < b.u;
  });
  return out;
}

std::vector<KeyPoint> detect_keypoints(Engine& engine, const ImagePyramid& pyr, const ExtractionConfig& cfg) {
  const int levels = pyr.level_count();
  std::vector<std::vector<KeyPoint>> per_level(levels);
  engine.parallel_for(static_cast<std::size_t>(levels),
                      [&](std::size_t l) { per_level[l] = detect_level(pyr.levels[l], static_cast<int>(l), cfg); });
  std::vector<KeyPoint> out;
  double s = 1.0;
  for (int l = 0; l < levels; ++l) {
    for (KeyPoint kp : per_level[l]) {
      kp.u = static_cast<float>(kp.u * s);
      kp.v = static_cast<float>(kp.v * s);
      out.push_back(kp);
    }
    s *= pyr.scale_factor;
  }
  return out;
}

}  // namespace stereotrack
