#pragma once

#include <cmath>
#include <vector>

namespace stereotrack {

/// Per-octave scale factors s^l and squared-sigma weights.
struct ScaleLevels {
  double scale_factor = 1.2;
  int levels = 8;
  std::vector<double> scale;
  std::vector<double> inv_scale;
  std::vector<double> inv_sigma2;

  ScaleLevels() : ScaleLevels(1.2, 8) {}
  ScaleLevels(double s, int l) : scale_factor(s), levels(l) {
    scale.resize(l);
    inv_scale.resize(l);
    inv_sigma2.resize(l);
    double f = 1.0;
    for (int i = 0; i < l; ++i) {
      scale[i] = f;
      inv_scale[i] = 1.0 / f;
      inv_sigma2[i] = 1.0 / (f * f);
      f *= s;
    }
  }
};

}  // namespace stereotrack
