#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "stereotrack/core/camera.hpp"
#include "stereotrack/core/features.hpp"
#include "stereotrack/core/image.hpp"
#include "stereotrack/core/pose.hpp"

namespace stereotrack::testing {

inline Descriptor random_descriptor(std::mt19937_64& rng) {
  Descriptor d;
  for (auto& w : d.words) {
    w = rng();
  }
  return d;
}

inline Descriptor flip_bits(Descriptor d, int count, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> bit(0, Descriptor::kBits - 1);
  for (int k = 0; k < count; ++k) {
    const int b = bit(rng);
    d.set_bit(b, !d.bit(b));
  }
  return d;
}

inline Pose random_pose(std::mt19937_64& rng, double angle = 3.0, double trans = 2.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Vector3d axis(g(rng), g(rng), g(rng));
  axis.normalize();
  std::uniform_real_distribution<double> a(-angle, angle);
  std::uniform_real_distribution<double> t(-trans, trans);
  return Pose(so3_exp(axis * a(rng)), Eigen::Vector3d(t(rng), t(rng), t(rng)));
}

inline GrayImage random_image(int w, int h, std::mt19937_64& rng) {
  GrayImage img(w, h);
  std::uniform_int_distribution<int> v(0, 255);
  for (auto& p : img.pixels) {
    p = static_cast<std::uint8_t>(v(rng));
  }
  return img;
}

// Smooth random texture: bilinear upsampling of a coarse random grid.
inline GrayImage smooth_texture(int w, int h, int cell, std::mt19937_64& rng) {
  const int gw = w / cell + 2;
  const int gh = h / cell + 2;
  std::vector<double> grid(static_cast<std::size_t>(gw) * gh);
  std::uniform_real_distribution<double> v(20.0, 235.0);
  for (auto& g : grid) {
    g = v(rng);
  }
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double fx = static_cast<double>(x) / cell;
      const double fy = static_cast<double>(y) / cell;
      const int ix = static_cast<int>(fx);
      const int iy = static_cast<int>(fy);
      const double ax = fx - ix;
      const double ay = fy - iy;
      auto at = [&](int gx, int gy) { return grid[static_cast<std::size_t>(gy) * gw + gx]; };
      const double val = (1 - ay) * ((1 - ax) * at(ix, iy) + ax * at(ix + 1, iy)) +
                         ay * ((1 - ax) * at(ix, iy + 1) + ax * at(ix + 1, iy + 1));
      img.at(x, y) = static_cast<std::uint8_t>(std::lround(val));
    }
  }
  return img;
}

// Band-limited texture: a few random plane waves, no gradient kinks.
inline GrayImage wave_texture(int w, int h, std::mt19937_64& rng, int waves = 6, double max_freq = 0.4) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::array<double, 4>> comp(waves);
  for (auto& c : comp) {
    const double f = max_freq * (0.3 + 0.7 * u(rng));
    const double a = 2.0 * 3.14159265358979 * u(rng);
    c = {f * std::cos(a), f * std::sin(a), 2.0 * 3.14159265358979 * u(rng), 0.5 + u(rng)};
  }
  double norm = 0.0;
  for (const auto& c : comp) {
    norm += c[3];
  }
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = 0.0;
      for (const auto& c : comp) {
        v += c[3] * std::sin(c[0] * x + c[1] * y + c[2]);
      }
      img.at(x, y) = static_cast<std::uint8_t>(std::lround(128.0 + 100.0 * v / norm));
    }
  }
  return img;
}

inline PinholeCamera test_pinhole() {
  PinholeCamera cam;
  cam.fx = 435.0;
  cam.fy = 435.0;
  cam.cx = 376.0;
  cam.cy = 240.0;
  cam.baseline_times_fx = 435.0 * 0.11;
  cam.width = 752;
  cam.height = 480;
  return cam;
}

inline double rotation_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  return so3_log(a.transpose() * b).norm() * 180.0 / M_PI;
}

inline FisheyeCamera test_fisheye() {
  FisheyeCamera c;
  c.fx = 190.98;
  c.fy = 190.97;
  c.cx = 254.93;
  c.cy = 256.90;
  c.k = {0.0034823894, 0.0007150348, -0.0020532361, 0.0002029658};
  c.width = 512;
  c.height = 512;
  return c;
}

}  // namespace stereotrack::testing
