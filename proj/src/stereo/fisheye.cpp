#include <cmath>

#include "stereotrack/core/error.hpp"
#include "stereotrack/parallel/engine.hpp"
#include "stereotrack/stereo/stereo.hpp"

namespace stereotrack {

std::optional<RayTriangulation> triangulate_rays(const Eigen::Vector3d& origin_a, const Eigen::Vector3d& dir_a,
                                                 const Eigen::Vector3d& origin_b, const Eigen::Vector3d& dir_b) {
  const double na = dir_a.norm();
  const double nb = dir_b.norm();
  if (na == 0.0 || nb == 0.0) {
    return std::nullopt;
  }
  const Eigen::Vector3d a = dir_a / na;
  const Eigen::Vector3d b = dir_b / nb;
  if (a.cross(b).norm() < 1e-9) {
    return std::nullopt;
  }
  // Minimise |oa + ta a - ob - tb b|^2 over (ta, tb).
  const Eigen::Vector3d w = origin_b - origin_a;
  const double ab = a.dot(b);
  const double wa = w.dot(a);
  const double wb = w.dot(b);
  const double det = 1.0 - ab * ab;
  const double ta = (wa - ab * wb) / det;
  const double tb = (ab * wa - wb) / det;
  const Eigen::Vector3d pa = origin_a + ta * a;
  const Eigen::Vector3d pb = origin_b + tb * b;
  RayTriangulation r;
  r.point = 0.5 * (pa + pb);
  r.gap = (pa - pb).norm();
  r.t_a = ta / na;
  r.t_b = tb / nb;
  return r;
}

std::vector<FisheyeMatch> match_fisheye(Engine& engine, std::span<const KeyPoint> left,
                                        std::span<const Descriptor> left_desc, std::span<const KeyPoint> right,
                                        std::span<const Descriptor> right_desc, const Camera& cam,
                                        const StereoMatchConfig& cfg) {
  if (!cam.is_fisheye()) {
    throw ConfigError("match_fisheye: camera is not a fisheye rig");
  }
  const FisheyeCamera& cl = cam.fisheye();
  const FisheyeCamera& cr = cam.fisheye_right();
  const Pose right_from_left = cr.right_from_left;
  const Eigen::Matrix3d rt = right_from_left.rotation().transpose();
  const Eigen::Vector3d right_origin = right_from_left.center();

  std::vector<std::optional<FisheyeMatch>> slots(left.size());
  engine.parallel_for(left.size(), [&](std::size_t i) {
    int best = 257;
    int second = 257;
    std::int32_t best_idx = -1;
    for (std::size_t j = 0; j < right.size(); ++j) {
      const int d = descriptor_distance(left_desc[i], right_desc[j]);
      if (d < best) {
        second = best;
        best = d;
        best_idx = static_cast<std::int32_t>(j);
      } else if (d < second) {
        second = d;
      }
    }
    if (best_idx < 0 || best > cfg.max_distance) {
      return;
    }
    if (second <= 256 && !(best < second && best <= cfg.ratio * second)) {
      return;
    }
    const KeyPoint& kl = left[i];
    const KeyPoint& kr = right[best_idx];
    const Eigen::Vector3d ray_l = unproject_fisheye(cl, Eigen::Vector2d(kl.u, kl.v));
    const Eigen::Vector3d ray_r = rt * unproject_fisheye(cr, Eigen::Vector2d(kr.u, kr.v));
    const auto tri = triangulate_rays(Eigen::Vector3d::Zero(), ray_l, right_origin, ray_r);
    if (!tri || tri->gap > cfg.max_ray_gap) {
      return;
    }
    const Eigen::Vector3d& p = tri->point;
    if (!(p.z() > 0.0) || !((right_from_left * p).z() > 0.0)) {
      return;
    }
    slots[i] = FisheyeMatch{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(best_idx), p, best};
  });
  std::vector<FisheyeMatch> out;
  for (const auto& s : slots) {
    if (s) {
      out.push_back(*s);
    }
  }
  return out;
}

}  // namespace stereotrack
