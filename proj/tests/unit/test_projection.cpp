#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "stereotrack/bench/synthetic.hpp"
#include "stereotrack/core/map.hpp"
#include "stereotrack/parallel/engine.hpp"
#include "stereotrack/projection/search.hpp"
#include "test_util.hpp"

namespace st = stereotrack;
using st::testing::flip_bits;
using st::testing::random_descriptor;
using st::testing::random_pose;
using st::testing::test_pinhole;

namespace {

const st::ScaleLevels kScales(1.2, 8);

st::Frame make_frame(std::vector<st::KeyPoint> kps, std::vector<st::Descriptor> desc, const st::Pose& pose) {
  st::Frame f;
  f.keypoints_left = std::move(kps);
  f.descriptors_left = std::move(desc);
  f.pose = pose;
  f.finalize_features(752, 480, 48);
  return f;
}

// Map point seen from `center` at keypoint octave `octave`.
st::MapPoint point_from(const Eigen::Vector3d& pos, const Eigen::Vector3d& center, int octave, const st::Descriptor& d,
                        float angle = 0.0F) {
  st::MapPoint p;
  p.position = pos;
  p.descriptor = d;
  const Eigen::Vector3d ray = pos - center;
  const double dist = ray.norm();
  p.normal = ray / dist;
  const double reference = dist * kScales.scale[octave];
  p.max_distance = reference * st::kDistanceMargin;
  p.min_distance = reference / kScales.scale[7] / st::kDistanceMargin;
  p.reference_angle = angle;
  return p;
}

struct Scene {
  st::Frame frame;
  st::MapPointSoA points;
  st::Pose pose;
};

// Keypoints with random octaves and descriptors; points near them with
// noisy descriptors, some sharing a keypoint, plus unrelated points.
Scene random_scene(std::mt19937_64& rng, int keypoints, int points) {
  const st::Camera cam(test_pinhole());
  const st::Pose pose = random_pose(rng, 0.3, 0.5);
  std::uniform_real_distribution<double> uu(0.0, 751.0);
  std::uniform_real_distribution<double> vv(0.0, 479.0);
  std::uniform_real_distribution<double> zz(1.0, 12.0);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<st::KeyPoint> kps;
  std::vector<st::Descriptor> desc;
  std::vector<double> depth;
  for (int i = 0; i < keypoints; ++i) {
    st::KeyPoint k;
    k.u = static_cast<float>(uu(rng));
    k.v = static_cast<float>(vv(rng));
    k.octave = static_cast<int>(rng() % 8);
    k.angle = static_cast<float>(rng() % 628) / 100.0F;
    kps.push_back(k);
    desc.push_back(random_descriptor(rng));
    depth.push_back(zz(rng));
  }
  Scene s{make_frame(kps, desc, pose), {}, pose};
  const st::Pose inv = pose.inverse();
  for (int i = 0; i < points; ++i) {
    if (i % 4 == 3) {
      const Eigen::Vector3d pc(g(rng), g(rng), zz(rng));
      s.points.push_back(point_from(inv * pc, pose.center(), static_cast<int>(rng() % 8), random_descriptor(rng)));
      continue;
    }
    const std::size_t k = rng() % kps.size();
    const Eigen::Vector3d pc =
        cam.backproject(kps[k].u + 2.0 * g(rng), kps[k].v + 2.0 * g(rng), depth[k] * (1.0 + 0.05 * g(rng)));
    s.points.push_back(point_from(inv * pc, pose.center(), kps[k].octave, flip_bits(desc[k], static_cast<int>(rng() % 60), rng),
                                  kps[k].angle));
  }
  return s;
}

// Visibility recomputed from the definitions.
std::optional<std::pair<Eigen::Vector2d, int>> oracle_visible(const st::MapPointSoA& pts, std::size_t i, const st::Pose& pose,
                                                              const st::PinholeCamera& cam, const st::ProjectionSearchConfig& cfg) {
  const Eigen::Matrix3d r = pose.rotation();
  const Eigen::Vector3d pc = r * pts.positions[i] + pose.translation();
  if (pc.z() <= 1e-6) {
    return std::nullopt;
  }
  const double u = cam.fx * pc.x() / pc.z() + cam.cx;
  const double v = cam.fy * pc.y() / pc.z() + cam.cy;
  if (u < 0 || v < 0 || u >= cam.width || v >= cam.height) {
    return std::nullopt;
  }
  const Eigen::Vector3d center = -r.transpose() * pose.translation();
  const double dist = (pts.positions[i] - center).norm();
  if (dist < pts.min_distances[i] || dist > pts.max_distances[i]) {
    return std::nullopt;
  }
  if ((pts.positions[i] - center).normalized().dot(pts.normals[i]) < cfg.min_view_cos) {
    return std::nullopt;
  }
  const double far = pts.max_distances[i] / st::kDistanceMargin;
  // Exact multiples of the scale stay on their octave.
  const int octave = std::clamp(static_cast<int>(std::ceil(std::log(far / dist) / std::log(1.2) - 1e-9)), 0, 7);
  return std::pair{Eigen::Vector2d(u, v), octave};
}

std::vector<st::Correspondence> oracle_search(const Scene& s, const st::ProjectionSearchConfig& cfg) {
  const st::PinholeCamera cam = test_pinhole();
  std::vector<std::optional<st::Correspondence>> claims(s.points.size());
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    const auto vis = oracle_visible(s.points, i, s.pose, cam, cfg);
    if (!vis) {
      continue;
    }
    const double radius = cfg.window * std::pow(1.2, vis->second);
    int best = 1000;
    int second = 1000;
    int best_k = -1;
    for (std::size_t k = 0; k < s.frame.size(); ++k) {
      const st::KeyPoint& kp = s.frame.keypoints_left[k];
      if (std::abs(kp.octave - vis->second) > 1 || std::abs(kp.u - vis->first.x()) > radius ||
          std::abs(kp.v - vis->first.y()) > radius) {
        continue;
      }
      const int d = st::descriptor_distance(s.points.descriptors[i], s.frame.descriptors_left[k]);
      if (d < best) {
        second = best;
        best = d;
        best_k = static_cast<int>(k);
      } else if (d < second) {
        second = d;
      }
    }
    if (best_k < 0 || best > cfg.max_distance) {
      continue;
    }
    if (second < 1000 && !(best < second && best <= cfg.ratio * second)) {
      continue;
    }
    claims[i] = st::Correspondence{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(best_k), best, vis->second};
  }
  std::vector<st::Correspondence> out;
  for (std::size_t i = 0; i < claims.size(); ++i) {
    if (!claims[i]) {
      continue;
    }
    bool wins = true;
    for (std::size_t j = 0; j < claims.size() && wins; ++j) {
      if (j != i && claims[j] && claims[j]->keypoint == claims[i]->keypoint &&
          (claims[j]->distance < claims[i]->distance || (claims[j]->distance == claims[i]->distance && j < i))) {
        wins = false;
      }
    }
    if (wins) {
      out.push_back(*claims[i]);
    }
  }
  return out;
}

}  // namespace

TEST(PredictScale, ClosedForms) {
  EXPECT_EQ(st::predict_scale(10.0, 10.0, 1.2, 8), 0);
  EXPECT_EQ(st::predict_scale(10.0 / std::pow(1.2, 3), 10.0, 1.2, 8), 3);
  EXPECT_EQ(st::predict_scale(20.0, 10.0, 1.2, 8), 0);
  EXPECT_EQ(st::predict_scale(0.01, 10.0, 1.2, 8), 7);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(0.1, 12.0);
  for (int i = 0; i < 10000; ++i) {
    const double dist = d(rng);
    const int expect = std::clamp(static_cast<int>(std::ceil(std::log(10.0 / dist) / std::log(1.2))), 0, 7);
    ASSERT_EQ(st::predict_scale(dist, 10.0, 1.2, 8), expect);
  }
}

TEST(Frustum, HeadOnAndBehind) {
  const st::Camera cam(test_pinhole());
  st::ProjectionSearchConfig cfg;
  st::MapPointSoA pts;
  st::Descriptor d;
  pts.push_back(point_from(Eigen::Vector3d(0, 0, 5), Eigen::Vector3d::Zero(), 2, d));
  pts.push_back(point_from(Eigen::Vector3d(0, 0, -5), Eigen::Vector3d::Zero(), 2, d));
  const auto v = st::frustum_and_cone_check(pts, 0, st::Pose(), cam, kScales, cfg);
  ASSERT_TRUE(v.has_value());
  EXPECT_NEAR(v->view_cos, 1.0, 1e-12);
  EXPECT_NEAR(v->uv.x(), 376.0, 1e-9);
  EXPECT_EQ(v->octave, 2);
  EXPECT_FALSE(st::frustum_and_cone_check(pts, 1, st::Pose(), cam, kScales, cfg).has_value());
}

TEST(Frustum, MatchesPredicateOracle) {
  std::mt19937_64 rng(2);
  const st::Camera cam(test_pinhole());
  st::ProjectionSearchConfig cfg;
  std::normal_distribution<double> g(0.0, 1.0);
  st::MapPointSoA pts;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d pos(3 * g(rng), 2 * g(rng), 4 + 3 * g(rng));
    const Eigen::Vector3d from(g(rng), g(rng), g(rng));
    pts.push_back(point_from(pos, from, static_cast<int>(rng() % 8), random_descriptor(rng)));
  }
  int visible = 0;
  for (int trial = 0; trial < 5; ++trial) {
    const st::Pose pose = random_pose(rng, 0.5, 1.0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto got = st::frustum_and_cone_check(pts, i, pose, cam, kScales, cfg);
      const auto expect = oracle_visible(pts, i, pose, test_pinhole(), cfg);
      ASSERT_EQ(got.has_value(), expect.has_value()) << i;
      if (got) {
        ++visible;
        EXPECT_LT((got->uv - expect->first).norm(), 1e-9);
        EXPECT_EQ(got->octave, expect->second);
      }
    }
  }
  EXPECT_GT(visible, 200);
}

TEST(SearchByProjection, SelfConsistency) {
  std::mt19937_64 rng(3);
  const st::Camera cam(test_pinhole());
  st::ProjectionSearchConfig cfg;
  std::vector<st::KeyPoint> kps;
  std::vector<st::Descriptor> desc;
  st::MapPointSoA pts;
  for (int i = 0; i < 800; ++i) {
    st::KeyPoint k;
    k.u = static_cast<float>(rng() % 752);
    k.v = static_cast<float>(rng() % 480);
    k.octave = static_cast<int>(rng() % 8);
    kps.push_back(k);
    desc.push_back(random_descriptor(rng));
    const double z = 1.0 + static_cast<double>(rng() % 1000) / 100.0;
    pts.push_back(point_from(cam.backproject(k.u, k.v, z), Eigen::Vector3d::Zero(), k.octave, desc.back()));
  }
  const st::Frame frame = make_frame(kps, desc, st::Pose());
  st::Engine engine(st::Backend::kParallel, 4);
  const auto m = st::search_by_projection(engine, pts, frame, st::Pose(), cam, kScales, cfg);
  ASSERT_EQ(m.size(), pts.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(m[i].point, i);
    EXPECT_EQ(m[i].keypoint, i);
    EXPECT_EQ(m[i].distance, 0);
  }
}

TEST(SearchByProjection, ConflictKeepsLowerIndex) {
  const st::Camera cam(test_pinhole());
  std::mt19937_64 rng(4);
  const st::Descriptor d = random_descriptor(rng);
  st::KeyPoint k;
  k.u = 300;
  k.v = 200;
  const st::Frame frame = make_frame({k}, {d}, st::Pose());
  st::MapPointSoA pts;
  const Eigen::Vector3d p = cam.backproject(300, 200, 4.0);
  pts.push_back(point_from(p, Eigen::Vector3d::Zero(), 0, d));
  pts.push_back(point_from(p + Eigen::Vector3d(0.001, 0, 0), Eigen::Vector3d::Zero(), 0, d));
  st::Engine engine(st::Backend::kSequential);
  const auto m = st::search_by_projection(engine, pts, frame, st::Pose(), cam, kScales, {});
  ASSERT_EQ(m.size(), 1U);
  EXPECT_EQ(m[0].point, 0U);
}

TEST(SearchByProjection, EqualsExhaustiveOracleAndBackends) {
  std::mt19937_64 rng(5);
  const st::Camera cam(test_pinhole());
  st::ProjectionSearchConfig cfg;
  st::Engine seq(st::Backend::kSequential);
  st::Engine par(st::Backend::kParallel, 4);
  for (int trial = 0; trial < 5; ++trial) {
    const Scene s = random_scene(rng, 1200, 2000);
    const auto a = st::search_by_projection(seq, s.points, s.frame, s.pose, cam, kScales, cfg);
    const auto b = st::search_by_projection(par, s.points, s.frame, s.pose, cam, kScales, cfg);
    ASSERT_EQ(a, b);
    ASSERT_EQ(a, oracle_search(s, cfg));
    EXPECT_GT(a.size(), 400U);
    // Injective both ways, and every predicate holds post hoc.
    std::set<std::uint32_t> kp_seen;
    std::set<std::uint32_t> pt_seen;
    for (const auto& c : a) {
      EXPECT_TRUE(kp_seen.insert(c.keypoint).second);
      EXPECT_TRUE(pt_seen.insert(c.point).second);
      EXPECT_LE(c.distance, cfg.max_distance);
      EXPECT_EQ(c.distance, st::descriptor_distance(s.points.descriptors[c.point], s.frame.descriptors_left[c.keypoint]));
      EXPECT_TRUE(st::frustum_and_cone_check(s.points, c.point, s.pose, cam, kScales, cfg).has_value());
    }
  }
}

TEST(SearchByProjection, RemovingAPointOnlyPromotes) {
  std::mt19937_64 rng(6);
  const st::Camera cam(test_pinhole());
  st::ProjectionSearchConfig cfg;
  st::Engine engine(st::Backend::kParallel, 3);
  const Scene s = random_scene(rng, 600, 900);
  std::vector<std::optional<st::Correspondence>> claims;
  std::vector<st::Correspondence> full;
  st::search_by_projection(engine, s.points, s.frame, s.pose, cam, kScales, cfg, {}, claims, full);
  const auto full_claims = claims;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t drop = rng() % s.points.size();
    std::vector<std::uint8_t> skip(s.points.size(), 0);
    skip[drop] = 1;
    st::SearchOptions opt;
    opt.skip_points = skip;
    std::vector<st::Correspondence> part;
    st::search_by_projection(engine, s.points, s.frame, s.pose, cam, kScales, cfg, opt, claims, part);
    for (std::size_t i = 0; i < claims.size(); ++i) {
      if (i != drop) {
        ASSERT_EQ(claims[i], full_claims[i]);
      }
    }
    for (const auto& c : full) {
      if (c.point != drop) {
        EXPECT_TRUE(std::find(part.begin(), part.end(), c) != part.end());
      }
    }
  }
}

TEST(SearchByProjection, FilledSlotsAreSkipped) {
  std::mt19937_64 rng(7);
  const st::Camera cam(test_pinhole());
  st::ProjectionSearchConfig cfg;
  st::Engine engine(st::Backend::kSequential);
  const Scene s = random_scene(rng, 600, 900);
  std::vector<std::uint8_t> filled(s.frame.size(), 0);
  for (std::size_t k = 0; k < filled.size(); k += 2) {
    filled[k] = 1;
  }
  st::SearchOptions opt;
  opt.filled_slots = filled;
  for (const auto& c : st::search_by_projection(engine, s.points, s.frame, s.pose, cam, kScales, cfg, opt)) {
    EXPECT_EQ(filled[c.keypoint], 0);
  }
}

TEST(RotationFilter, KeepsDominantBins) {
  st::ProjectionSearchConfig cfg;
  cfg.keep_bins = 1;
  st::MapPointSoA pts;
  std::vector<st::KeyPoint> kps;
  std::vector<st::Correspondence> ms;
  for (int i = 0; i < 10; ++i) {
    pts.push_back(point_from(Eigen::Vector3d(0, 0, 5), Eigen::Vector3d::Zero(), 0, {}, 1.0F));
    st::KeyPoint k;
    k.angle = i < 7 ? 0.9F : 3.0F;
    kps.push_back(k);
    ms.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i), 0, 0});
  }
  const st::Frame frame = make_frame(kps, std::vector<st::Descriptor>(10), st::Pose());
  const auto kept = st::rotation_filter(ms, pts, frame, cfg);
  ASSERT_EQ(kept.size(), 7U);
  for (const auto& c : kept) {
    EXPECT_LT(c.point, 7U);
  }
}

TEST(MotionBand, ForwardBackwardAndStill) {
  const st::Pose prev;
  EXPECT_EQ(st::motion_band(prev, st::Pose(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0, 0, -0.5)), 0.11),
            st::OctaveBand::kUpward);
  EXPECT_EQ(st::motion_band(prev, st::Pose(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0, 0, 0.5)), 0.11),
            st::OctaveBand::kDownward);
  EXPECT_EQ(st::motion_band(prev, st::Pose(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0.5, 0, 0.05)), 0.11),
            st::OctaveBand::kAround);
}

namespace {

// Map with one point per keypoint of `frame`, placed at the true landmark.
void seed_map(st::Map& map, st::Frame& frame, const st::SyntheticScene& scene, const std::vector<int>& landmark) {
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const st::MapPointId id = map.add_point(point_from(scene.landmarks()[landmark[i]], frame.pose.center(),
                                                       frame.keypoints_left[i].octave, frame.descriptors_left[i],
                                                       frame.keypoints_left[i].angle));
    frame.map_points[i] = id;
  }
}

st::Frame frame_from(const st::SyntheticFrame& sf) {
  return make_frame(sf.features.left, sf.features.left_desc, sf.pose);
}

}  // namespace

TEST(PrevFrame, StaticAndEmpty) {
  st::SyntheticSceneConfig cfg;
  cfg.trajectory = st::TrajectoryKind::kStatic;
  cfg.frame_count = 2;
  const st::SyntheticScene scene(cfg, 1);
  const auto sf = scene.features(0);
  st::Frame prev = frame_from(sf);
  st::Frame cur = frame_from(sf);
  const st::Camera cam(cfg.camera);
  st::Engine engine(st::Backend::kParallel, 2);
  st::Map map;
  st::PrevFrameSearch out;
  st::search_prev_frame(engine, prev, cur, prev.pose, map, cam, kScales, {}, out);
  EXPECT_TRUE(out.matches.empty());

  seed_map(map, prev, scene, sf.left_landmark);
  st::search_prev_frame(engine, prev, cur, prev.pose, map, cam, kScales, {}, out);
  ASSERT_EQ(out.matches.size(), prev.size());
  for (const auto& c : out.matches) {
    EXPECT_EQ(out.source_keypoints[c.point], c.keypoint);
  }
}

TEST(PrevFrame, TenCentimetreTranslation) {
  st::SyntheticSceneConfig cfg;
  cfg.trajectory = st::TrajectoryKind::kLine;
  cfg.frame_count = 2;
  cfg.line_length = 0.1;
  const st::SyntheticScene scene(cfg, 2);
  ASSERT_NEAR((scene.position(scene.frame_time(1)) - scene.position(scene.frame_time(0))).norm(), 0.1, 1e-12);
  const auto s0 = scene.features(0);
  const auto s1 = scene.features(1);
  st::Frame prev = frame_from(s0);
  const st::Frame cur = frame_from(s1);
  const st::Camera cam(cfg.camera);
  st::Map map;
  seed_map(map, prev, scene, s0.left_landmark);
  st::Engine engine(st::Backend::kParallel, 2);
  st::PrevFrameSearch out;
  st::search_prev_frame(engine, prev, cur, s1.pose, map, cam, kScales, {}, out);
  const std::set<int> in_cur(s1.left_landmark.begin(), s1.left_landmark.end());
  int visible = 0;
  for (int lm : s0.left_landmark) {
    visible += in_cur.count(lm) ? 1 : 0;
  }
  int correct = 0;
  for (const auto& c : out.matches) {
    correct += s0.left_landmark[out.source_keypoints[c.point]] == s1.left_landmark[c.keypoint] ? 1 : 0;
  }
  EXPECT_GT(visible, 500);
  EXPECT_GE(correct, static_cast<int>(0.9 * visible)) << correct << " of " << visible;
}
