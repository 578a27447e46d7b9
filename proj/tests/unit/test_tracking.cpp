#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "stereotrack/core/map.hpp"
#include "stereotrack/parallel/engine.hpp"
#include "stereotrack/tracking/local_map.hpp"
#include "stereotrack/tracking/pose_opt.hpp"
#include "test_util.hpp"

namespace st = stereotrack;
using st::testing::random_descriptor;
using st::testing::random_pose;
using st::testing::rotation_angle_deg;
using st::testing::test_fisheye;
using st::testing::test_pinhole;

namespace {

const st::ScaleLevels kScales(1.2, 8);

st::Frame empty_frame(std::size_t n) {
  st::Frame f;
  f.keypoints_left.resize(n);
  f.descriptors_left.resize(n);
  f.finalize_features(752, 480, 48);
  return f;
}

struct Graph {
  st::Map map;
  std::vector<st::MapPointId> points;
  std::vector<st::KeyFrameId> keyframes;
};

// Random observation graph: each keyframe observes a random subset.
Graph random_graph(std::mt19937_64& rng, int n_kf, int n_pts, int per_kf) {
  Graph g;
  for (int i = 0; i < n_pts; ++i) {
    g.points.push_back(g.map.add_point(st::MapPoint{}));
  }
  for (int k = 0; k < n_kf; ++k) {
    const st::KeyFrameId kid = g.map.add_keyframe(empty_frame(static_cast<std::size_t>(per_kf)));
    g.keyframes.push_back(kid);
    std::set<st::MapPointId> used;
    for (int s = 0; s < per_kf; ++s) {
      const st::MapPointId p = g.points[rng() % g.points.size()];
      if (used.insert(p).second && rng() % 4 != 0) {
        g.map.link(kid, static_cast<std::uint32_t>(s), p);
      }
    }
  }
  return g;
}

}  // namespace

TEST(UpdateLocalMap, SingleObserver) {
  std::mt19937_64 rng(1);
  Graph g = random_graph(rng, 1, 40, 30);
  const st::KeyFrame* kf = g.map.keyframe(g.keyframes[0]);
  std::set<st::MapPointId> expect;
  for (const auto& s : kf->map_points()) {
    if (s) {
      expect.insert(*s);
    }
  }
  st::Frame frame = empty_frame(5);
  frame.map_points[2] = *expect.begin();
  frame.map_points[4] = *expect.rbegin();
  const st::LocalMap local = st::update_local_map(frame, g.map);
  EXPECT_EQ(local.keyframes, std::vector<st::KeyFrameId>{g.keyframes[0]});
  EXPECT_EQ(local.points, std::vector<st::MapPointId>(expect.begin(), expect.end()));
  EXPECT_EQ(local.soa.ids, local.points);
}

TEST(UpdateLocalMap, EmptyFrame) {
  std::mt19937_64 rng(2);
  Graph g = random_graph(rng, 3, 40, 30);
  EXPECT_TRUE(st::update_local_map(empty_frame(10), g.map).empty());
}

TEST(UpdateLocalMap, SetUnionOracleAndOrderInvariance) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Graph g = random_graph(rng, 20, 300, 40);
    ASSERT_TRUE(g.map.consistent());
    st::Frame frame = empty_frame(30);
    std::vector<st::MapPointId> frame_points;
    for (std::size_t i = 0; i < frame.size(); ++i) {
      if (rng() % 3 == 0) {
        frame.map_points[i] = g.points[rng() % g.points.size()];
        frame_points.push_back(*frame.map_points[i]);
      }
    }
    // Naive double loop over keyframe slots.
    std::set<st::KeyFrameId> kfs;
    for (const auto& [kid, kf] : g.map.keyframes()) {
      for (const auto& s : kf.map_points()) {
        if (s && std::find(frame_points.begin(), frame_points.end(), *s) != frame_points.end()) {
          kfs.insert(kid);
        }
      }
    }
    std::set<st::MapPointId> pts;
    for (st::KeyFrameId kid : kfs) {
      for (const auto& s : g.map.keyframe(kid)->map_points()) {
        if (s) {
          pts.insert(*s);
        }
      }
    }
    const st::LocalMap local = st::update_local_map(frame, g.map);
    ASSERT_EQ(local.keyframes, std::vector<st::KeyFrameId>(kfs.begin(), kfs.end()));
    ASSERT_EQ(local.points, std::vector<st::MapPointId>(pts.begin(), pts.end()));

    st::Frame shuffled = frame;
    std::shuffle(shuffled.map_points.begin(), shuffled.map_points.end(), rng);
    const st::LocalMap again = st::update_local_map(shuffled, g.map);
    EXPECT_EQ(again.keyframes, local.keyframes);
    EXPECT_EQ(again.points, local.points);
  }
}

namespace {

struct LocalScene {
  st::Map map;
  st::Frame frame;
  st::LocalMap local;
};

// One keyframe at the origin with `n` points projected into a second frame
// at a small offset; the frame starts with the first `slotted` associated.
LocalScene local_scene(std::mt19937_64& rng, int n, int slotted) {
  LocalScene s;
  const st::Camera cam(test_pinhole());
  std::uniform_real_distribution<double> uu(30.0, 720.0);
  std::uniform_real_distribution<double> vv(30.0, 450.0);
  std::uniform_real_distribution<double> zz(2.0, 8.0);
  st::Frame kf_frame = empty_frame(static_cast<std::size_t>(n));
  const st::KeyFrameId kid = s.map.add_keyframe(kf_frame);
  const st::Pose cur_pose(st::so3_exp(Eigen::Vector3d(0.0, 0.02, 0.0)), Eigen::Vector3d(0.05, 0.0, 0.0));
  std::vector<st::KeyPoint> kps;
  std::vector<st::Descriptor> desc;
  std::vector<st::MapPointId> ids;
  for (int i = 0; i < n; ++i) {
    st::MapPoint p;
    p.position = cam.backproject(uu(rng), vv(rng), zz(rng));
    p.descriptor = random_descriptor(rng);
    const double dist = p.position.norm();
    p.normal = p.position / dist;
    p.max_distance = dist * st::kDistanceMargin;
    p.min_distance = dist / kScales.scale[7] / st::kDistanceMargin;
    const st::MapPointId id = s.map.add_point(p);
    s.map.link(kid, static_cast<std::uint32_t>(i), id);
    ids.push_back(id);
    const auto uv = cam.project(cur_pose * p.position);
    if (uv) {
      st::KeyPoint k;
      k.u = static_cast<float>(uv->x());
      k.v = static_cast<float>(uv->y());
      kps.push_back(k);
      desc.push_back(st::testing::flip_bits(p.descriptor, 8, rng));
    }
  }
  s.frame.keypoints_left = kps;
  s.frame.descriptors_left = desc;
  s.frame.pose = cur_pose;
  s.frame.finalize_features(752, 480, 48);
  // Keypoint k came from the k-th visible point; all are visible here.
  for (int i = 0; i < slotted && i < static_cast<int>(kps.size()); ++i) {
    s.frame.map_points[i] = ids[i];
  }
  st::Frame seed = s.frame;
  seed.map_points.assign(seed.size(), std::nullopt);
  seed.map_points[0] = ids[0];
  s.local = st::update_local_map(seed, s.map);
  return s;
}

}  // namespace

TEST(SearchLocalPoints, AlreadySlottedPointsAreExcluded) {
  std::mt19937_64 rng(4);
  LocalScene s = local_scene(rng, 100, 100);
  ASSERT_EQ(s.frame.associated_count(), 100U);
  const auto before = s.frame.map_points;
  st::Engine engine(st::Backend::kSequential);
  st::LocalSearchScratch scratch;
  EXPECT_EQ(st::search_local_points(engine, s.local, s.frame, st::Camera(test_pinhole()), kScales, {}, scratch), 100U);
  EXPECT_TRUE(scratch.matches.empty());
  EXPECT_EQ(s.frame.map_points, before);
}

TEST(SearchLocalPoints, EmptyLocalMap) {
  std::mt19937_64 rng(5);
  LocalScene s = local_scene(rng, 50, 10);
  st::Engine engine(st::Backend::kSequential);
  st::LocalSearchScratch scratch;
  EXPECT_EQ(st::search_local_points(engine, st::LocalMap{}, s.frame, st::Camera(test_pinhole()), kScales, {}, scratch),
            10U);
}

TEST(SearchLocalPoints, NewAssociationsMatchSequentialRun) {
  std::mt19937_64 rng(6);
  LocalScene s = local_scene(rng, 600, 100);
  const st::Camera cam(test_pinhole());
  st::Engine seq(st::Backend::kSequential);
  st::Engine par(st::Backend::kParallel, 4);
  st::Frame a = s.frame;
  st::Frame b = s.frame;
  st::LocalSearchScratch sa;
  st::LocalSearchScratch sb;
  const std::size_t na = st::search_local_points(seq, s.local, a, cam, kScales, {}, sa);
  const std::size_t nb = st::search_local_points(par, s.local, b, cam, kScales, {}, sb);
  EXPECT_EQ(na, nb);
  EXPECT_EQ(a.map_points, b.map_points);
  EXPECT_EQ(sa.matches, sb.matches);
  EXPECT_GE(na, 550U);
  // Keypoint k was generated from local point k (ids ascend with k).
  std::size_t correct = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    correct += a.map_points[k] && *a.map_points[k] == s.local.points[k] ? 1 : 0;
  }
  EXPECT_EQ(correct, na);
}

TEST(PoseOpt, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  const st::Camera cams[2] = {st::Camera(test_pinhole()), st::Camera(test_fisheye(), test_fisheye())};
  int checked = 0;
  while (checked < 1000) {
    const st::Camera& cam = cams[checked % 2];
    const st::Pose pose = random_pose(rng, 3.0, 1.0);
    const Eigen::Vector3d pc(g(rng), g(rng), 1.0 + 5.0 * std::abs(g(rng)));
    const Eigen::Vector3d world = pose.inverse() * pc;
    const Eigen::Matrix<double, 2, 6> j = st::reprojection_jacobian(cam, pose, world);
    Eigen::Matrix<double, 2, 6> fd;
    const double h = 1e-6;
    for (int k = 0; k < 6; ++k) {
      st::Vector6d dx = st::Vector6d::Zero();
      dx[k] = h;
      const Eigen::Vector2d plus = cam.project_unchecked(st::se3_exp(dx) * pose * world);
      const Eigen::Vector2d minus = cam.project_unchecked(st::se3_exp(-dx) * pose * world);
      fd.col(k) = (plus - minus) / (2 * h);
    }
    ASSERT_LE((j - fd).norm() / j.norm(), 1e-4) << "config " << checked;
    ++checked;
  }
}

namespace {

std::vector<st::PoseObservation> observations(std::mt19937_64& rng, const st::Camera& cam, const st::Pose& truth, int n,
                                              double noise = 0.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> uu(20.0, 730.0);
  std::uniform_real_distribution<double> vv(20.0, 460.0);
  std::uniform_real_distribution<double> zz(1.5, 10.0);
  std::vector<st::PoseObservation> obs;
  const st::Pose inv = truth.inverse();
  for (int i = 0; i < n; ++i) {
    const double u = uu(rng);
    const double v = vv(rng);
    const int octave = static_cast<int>(rng() % 4);
    obs.push_back({inv * cam.backproject(u, v, zz(rng)),
                   Eigen::Vector2d(u + noise * kScales.scale[octave] * g(rng), v + noise * kScales.scale[octave] * g(rng)),
                   octave});
  }
  return obs;
}

st::PoseOptConfig enabled() {
  st::PoseOptConfig cfg;
  cfg.enabled = true;
  return cfg;
}

}  // namespace

TEST(PoseOpt, FixedPoint) {
  std::mt19937_64 rng(8);
  const st::Camera cam(test_pinhole());
  const st::Pose truth = random_pose(rng, 0.5, 1.0);
  const auto obs = observations(rng, cam, truth, 200);
  const auto r = st::optimize_pose(cam, truth, obs, kScales, enabled());
  EXPECT_EQ(r.status, st::PoseOptStatus::kOptimized);
  double sq = 0.0;
  for (const auto& o : obs) {
    sq += (o.pixel - cam.project_unchecked(r.pose * o.world)).squaredNorm();
  }
  EXPECT_LT(std::sqrt(sq / obs.size()), 1e-9);
  EXPECT_LT((r.pose.translation() - truth.translation()).norm(), 1e-9);
  EXPECT_EQ(r.inliers(), obs.size());
}

TEST(PoseOpt, RecoversPerturbedStart) {
  std::mt19937_64 rng(9);
  const st::Camera cam(test_pinhole());
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const st::Pose truth = random_pose(rng, 0.5, 1.0);
    const auto obs = observations(rng, cam, truth, 150);
    const Eigen::Vector3d axis = Eigen::Vector3d(g(rng), g(rng), g(rng)).normalized();
    const Eigen::Vector3d dir = Eigen::Vector3d(g(rng), g(rng), g(rng)).normalized();
    st::Vector6d xi;
    xi << axis * (0.5 * M_PI / 180.0), dir * 0.01;
    const st::Pose start = st::se3_exp(xi) * truth;
    const auto r = st::optimize_pose(cam, start, obs, kScales, enabled());
    ASSERT_EQ(r.status, st::PoseOptStatus::kOptimized);
    EXPECT_LT((r.pose.center() - truth.center()).norm(), 1e-3);
    EXPECT_LT(rotation_angle_deg(r.pose.rotation(), truth.rotation()), 0.01);
    for (std::size_t k = 1; k < r.cost_history.size(); ++k) {
      EXPECT_LE(r.cost_history[k], r.cost_history[k - 1]);
    }
  }
}

TEST(PoseOpt, FlagsGrossOutliersAndCostNeverIncreases) {
  std::mt19937_64 rng(10);
  const st::Camera cam(test_pinhole());
  const st::Pose truth = random_pose(rng, 0.5, 1.0);
  auto obs = observations(rng, cam, truth, 200, 0.5);
  for (int i = 0; i < 20; ++i) {
    obs[i].pixel += Eigen::Vector2d(40.0, -30.0);
  }
  const auto r = st::optimize_pose(cam, truth, obs, kScales, enabled());
  ASSERT_EQ(r.status, st::PoseOptStatus::kOptimized);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(r.outlier[i], 1) << i;
  }
  EXPECT_GT(r.inliers(), 160U);
  for (std::size_t k = 1; k < r.cost_history.size(); ++k) {
    EXPECT_LE(r.cost_history[k], r.cost_history[k - 1]);
  }
  EXPECT_LT((r.pose.center() - truth.center()).norm(), 0.01);
}

TEST(PoseOpt, BypassSkipAndDegenerate) {
  std::mt19937_64 rng(11);
  const st::Camera cam(test_pinhole());
  const st::Pose truth = random_pose(rng, 0.5, 1.0);
  const st::Pose start = st::se3_exp((st::Vector6d() << 0.01, 0, 0, 0.02, 0, 0).finished()) * truth;
  const auto obs = observations(rng, cam, truth, 100);

  const auto off = st::optimize_pose(cam, start, obs, kScales, st::PoseOptConfig{});
  EXPECT_EQ(off.status, st::PoseOptStatus::kDisabled);
  EXPECT_EQ(off.pose.rotation(), start.rotation());
  EXPECT_EQ(off.pose.translation(), start.translation());
  EXPECT_EQ(off.inliers(), obs.size());

  const std::vector<st::PoseObservation> few(obs.begin(), obs.begin() + 5);
  const auto skipped = st::optimize_pose(cam, start, few, kScales, enabled());
  EXPECT_EQ(skipped.status, st::PoseOptStatus::kSkipped);
  EXPECT_EQ(skipped.pose.translation(), start.translation());

  const std::vector<st::PoseObservation> same(10, obs[0]);
  const auto degenerate = st::optimize_pose(cam, start, same, kScales, enabled());
  EXPECT_EQ(degenerate.status, st::PoseOptStatus::kDegenerate);
  EXPECT_EQ(degenerate.pose.translation(), start.translation());
}

TEST(PoseOpt, FramePoseAndSlots) {
  std::mt19937_64 rng(12);
  const st::Camera cam(test_pinhole());
  const st::Pose truth = random_pose(rng, 0.3, 0.5);
  auto obs = observations(rng, cam, truth, 60);
  obs[3].pixel += Eigen::Vector2d(50.0, 50.0);
  st::Map map;
  st::Frame frame = empty_frame(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    st::MapPoint p;
    p.position = obs[i].world;
    frame.keypoints_left[i].u = static_cast<float>(obs[i].pixel.x());
    frame.keypoints_left[i].v = static_cast<float>(obs[i].pixel.y());
    frame.keypoints_left[i].octave = obs[i].octave;
    frame.map_points[i] = map.add_point(p);
  }
  frame.pose = st::se3_exp((st::Vector6d() << 0, 0.005, 0, 0, 0, 0.01).finished()) * truth;
  const auto r = st::optimize_frame_pose(frame, map, cam, kScales, enabled());
  EXPECT_EQ(r.status, st::PoseOptStatus::kOptimized);
  EXPECT_FALSE(frame.map_points[3].has_value());
  EXPECT_EQ(frame.associated_count(), obs.size() - 1);
  EXPECT_LT((frame.pose.center() - truth.center()).norm(), 1e-3);
}
