#include <gtest/gtest.h>

#include <random>

#include "stereotrack/core/camera.hpp"
#include "stereotrack/core/error.hpp"
#include "stereotrack/core/features.hpp"
#include "stereotrack/core/frame.hpp"
#include "stereotrack/core/map.hpp"
#include "stereotrack/core/map_point.hpp"
#include "stereotrack/core/pose.hpp"
#include "test_util.hpp"

namespace st = stereotrack;
using st::testing::random_descriptor;
using st::testing::random_pose;

namespace {

int naive_distance(const st::Descriptor& a, const st::Descriptor& b) {
  int n = 0;
  for (int i = 0; i < st::Descriptor::kBits; ++i) {
    n += a.bit(i) != b.bit(i);
  }
  return n;
}

}  // namespace

TEST(Descriptor, SelfAndComplement) {
  std::mt19937_64 rng(1);
  const st::Descriptor d = random_descriptor(rng);
  EXPECT_EQ(st::descriptor_distance(d, d), 0);
  EXPECT_EQ(st::descriptor_distance(d, ~d), 256);
}

TEST(Descriptor, MatchesPerBitOracle) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100000; ++i) {
    const st::Descriptor a = random_descriptor(rng);
    const st::Descriptor b = st::testing::flip_bits(a, static_cast<int>(rng() % 200), rng);
    ASSERT_EQ(st::descriptor_distance(a, b), naive_distance(a, b));
  }
}

TEST(Descriptor, TriangleInequalityAndSymmetry) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 5000; ++i) {
    const st::Descriptor a = random_descriptor(rng);
    const st::Descriptor b = st::testing::flip_bits(a, static_cast<int>(rng() % 64), rng);
    const st::Descriptor c = random_descriptor(rng);
    const int ab = st::descriptor_distance(a, b);
    EXPECT_EQ(ab, st::descriptor_distance(b, a));
    EXPECT_LE(st::descriptor_distance(a, c), ab + st::descriptor_distance(b, c));
    EXPECT_LE(st::descriptor_distance(a, c), 256);
  }
}

TEST(Pose, IdentityAndInverse) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const st::Pose p = random_pose(rng);
    EXPECT_TRUE(p.is_valid());
    const st::Pose a = st::Pose::Identity() * p;
    EXPECT_TRUE(a.matrix().isApprox(p.matrix(), 1e-15));
    const st::Pose id = p * p.inverse();
    EXPECT_LT((id.matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Pose, ComposeMatchesHomogeneousProduct) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    const st::Pose a = random_pose(rng);
    const st::Pose b = random_pose(rng);
    const Eigen::Matrix4d oracle = a.matrix() * b.matrix();
    EXPECT_LT(((a * b).matrix() - oracle).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Pose, Associative) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 1000; ++i) {
    const st::Pose a = random_pose(rng);
    const st::Pose b = random_pose(rng);
    const st::Pose c = random_pose(rng);
    EXPECT_LT((((a * b) * c).matrix() - (a * (b * c)).matrix()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Pose, ComposeReorthonormalizesDrift) {
  Eigen::Matrix3d r = st::so3_exp(Eigen::Vector3d(0.1, 0.2, 0.3));
  r(0, 0) += 1e-7;
  const st::Pose drifted(r, Eigen::Vector3d::Zero());
  EXPECT_FALSE(drifted.is_valid());
  EXPECT_TRUE((drifted * st::Pose::Identity()).is_valid());
}

TEST(Pose, ExpLogRoundTrip) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d w(u(rng), u(rng), u(rng));
    EXPECT_LT((st::so3_log(st::so3_exp(w)) - w).norm(), 1e-9);
  }
  EXPECT_LT(st::so3_log(Eigen::Matrix3d::Identity()).norm(), 1e-15);
}

TEST(Pinhole, CanonicalAndOpticalAxis) {
  st::PinholeCamera unit;
  unit.fx = unit.fy = 1.0;
  unit.cx = unit.cy = 0.0;
  unit.width = unit.height = 10;
  unit.baseline_times_fx = 1.0;
  const auto uv = st::project_pinhole(unit, Eigen::Vector3d(0, 0, 1));
  ASSERT_TRUE(uv);
  EXPECT_EQ(uv->x(), 0.0);
  EXPECT_EQ(uv->y(), 0.0);
  const st::PinholeCamera cam = st::testing::test_pinhole();
  for (double z : {0.5, 3.0, 100.0}) {
    const auto p = st::project_pinhole(cam, Eigen::Vector3d(0, 0, z));
    ASSERT_TRUE(p);
    EXPECT_EQ(p->x(), cam.cx);
    EXPECT_EQ(p->y(), cam.cy);
  }
}

TEST(Pinhole, NotVisibleCases) {
  const st::PinholeCamera cam = st::testing::test_pinhole();
  EXPECT_FALSE(st::project_pinhole(cam, Eigen::Vector3d(0, 0, -1)));
  EXPECT_FALSE(st::project_pinhole(cam, Eigen::Vector3d(0, 0, 1e-7)));
  EXPECT_FALSE(st::project_pinhole(cam, Eigen::Vector3d(100, 0, 1)));
}

TEST(Pinhole, MatchesFormulaAndBackProjects) {
  const st::PinholeCamera cam = st::testing::test_pinhole();
  const st::Camera camera(cam);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> xy(-2.0, 2.0);
  std::uniform_real_distribution<double> z(0.1, 20.0);
  int visible = 0;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d p(xy(rng), xy(rng), z(rng));
    const double u = cam.fx * p.x() / p.z() + cam.cx;
    const double v = cam.fy * p.y() / p.z() + cam.cy;
    const auto uv = st::project_pinhole(cam, p);
    const bool inside = u >= 0 && u < cam.width && v >= 0 && v < cam.height;
    ASSERT_EQ(static_cast<bool>(uv), inside);
    if (!uv) {
      continue;
    }
    ++visible;
    EXPECT_NEAR(uv->x(), u, 1e-9);
    EXPECT_NEAR(uv->y(), v, 1e-9);
    const Eigen::Vector3d back = camera.backproject(uv->x(), uv->y(), p.z());
    EXPECT_LT((back - p).norm() / p.norm(), 1e-6);
  }
  EXPECT_GT(visible, 100);
}

TEST(Pinhole, DepthFromDisparity) {
  st::PinholeCamera cam = st::testing::test_pinhole();
  cam.baseline_times_fx = 50.0;
  EXPECT_DOUBLE_EQ(st::stereo_depth_from_disparity(cam, 10.0), 5.0);
  EXPECT_DOUBLE_EQ(st::stereo_depth_from_disparity(cam, 50.0), 1.0);
  EXPECT_THROW(st::stereo_depth_from_disparity(cam, 0.0), st::InvalidDisparityError);
  EXPECT_THROW(st::stereo_depth_from_disparity(cam, -1.0), st::InvalidDisparityError);
}

TEST(Pinhole, ValidateRejectsBadIntrinsics) {
  st::PinholeCamera cam = st::testing::test_pinhole();
  cam.cx = cam.width;
  EXPECT_THROW(cam.validate(), st::ConfigError);
  cam = st::testing::test_pinhole();
  cam.baseline_times_fx = 0.0;
  EXPECT_THROW(cam.validate(), st::ConfigError);
}

namespace {

st::FisheyeCamera test_fisheye() {
  st::FisheyeCamera cam;
  cam.fx = 190.0;
  cam.fy = 190.0;
  cam.cx = 254.5;
  cam.cy = 256.5;
  cam.k = {0.0034, 0.0007, -0.0020, 0.0002};
  cam.width = 512;
  cam.height = 512;
  return cam;
}

}  // namespace

TEST(Fisheye, OpticalAxisAndEquidistant) {
  st::FisheyeCamera cam = test_fisheye();
  const auto c = st::project_fisheye(cam, Eigen::Vector3d(0, 0, 2));
  ASSERT_TRUE(c);
  EXPECT_EQ(c->x(), cam.cx);
  EXPECT_EQ(c->y(), cam.cy);
  cam.k = {0, 0, 0, 0};
  const Eigen::Vector3d p(0.3, -0.2, 1.0);
  const double r = std::hypot(p.x(), p.y());
  const double theta = std::atan2(r, p.z());
  const auto uv = st::project_fisheye(cam, p);
  ASSERT_TRUE(uv);
  EXPECT_NEAR(uv->x(), cam.fx * theta * p.x() / r + cam.cx, 1e-12);
  EXPECT_NEAR(uv->y(), cam.fy * theta * p.y() / r + cam.cy, 1e-12);
}

TEST(Fisheye, MatchesPolynomialOracleAndUnprojects) {
  const st::FisheyeCamera cam = test_fisheye();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> xy(-1.0, 1.0);
  std::uniform_real_distribution<double> z(0.2, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d p(xy(rng), xy(rng), z(rng));
    const double r = std::hypot(p.x(), p.y());
    const double t = std::atan2(r, p.z());
    const double d = t + cam.k[0] * std::pow(t, 3) + cam.k[1] * std::pow(t, 5) + cam.k[2] * std::pow(t, 7) +
                     cam.k[3] * std::pow(t, 9);
    const Eigen::Vector2d oracle(cam.fx * d * p.x() / r + cam.cx, cam.fy * d * p.y() / r + cam.cy);
    const Eigen::Vector2d got = st::project_fisheye_unchecked(cam, p);
    EXPECT_LT((got - oracle).norm(), 1e-9);
    const Eigen::Vector3d ray = st::unproject_fisheye(cam, got);
    EXPECT_LT((ray - p.normalized()).norm(), 1e-8);
  }
}

TEST(MapPointSoA, EmptyAndSingleton) {
  const st::MapPointSoA empty = st::decompose_map_points({});
  EXPECT_TRUE(empty.empty());
  EXPECT_TRUE(empty.positions.empty() && empty.descriptors.empty() && empty.normals.empty());
  std::mt19937_64 rng(10);
  st::MapPoint p;
  p.id = 42;
  p.position = Eigen::Vector3d(1, 2, 3);
  p.descriptor = random_descriptor(rng);
  p.min_distance = 0.5;
  p.max_distance = 7.0;
  const std::vector<st::MapPoint> one{p};
  const st::MapPointSoA soa = st::decompose_map_points(one);
  ASSERT_EQ(soa.size(), 1U);
  EXPECT_EQ(soa.ids[0], 42U);
  EXPECT_EQ(soa.positions[0], p.position);
  EXPECT_EQ(soa.descriptors[0], p.descriptor);
}

TEST(MapPointSoA, RoundTripThousandPoints) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 3.0);
  std::vector<st::MapPoint> points(1000);
  for (std::size_t i = 0; i < points.size(); ++i) {
    st::MapPoint& p = points[i];
    p.id = 1000 + i * 7;
    p.position = Eigen::Vector3d(g(rng), g(rng), g(rng));
    p.normal = Eigen::Vector3d(g(rng), g(rng), g(rng)).normalized();
    p.descriptor = random_descriptor(rng);
    p.min_distance = std::abs(g(rng));
    p.max_distance = p.min_distance + std::abs(g(rng));
    p.reference_angle = static_cast<float>(std::abs(g(rng)));
  }
  const st::MapPointSoA soa = st::decompose_map_points(points);
  ASSERT_EQ(soa.size(), points.size());
  ASSERT_EQ(soa.positions.size(), points.size());
  ASSERT_EQ(soa.normals.size(), points.size());
  ASSERT_EQ(soa.min_distances.size(), points.size());
  ASSERT_EQ(soa.max_distances.size(), points.size());
  ASSERT_EQ(soa.descriptors.size(), points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const st::MapPoint back = soa.point(i);
    EXPECT_EQ(back.id, points[i].id);
    EXPECT_EQ(back.position, points[i].position);
    EXPECT_EQ(back.normal, points[i].normal);
    EXPECT_EQ(back.descriptor, points[i].descriptor);
    EXPECT_EQ(back.min_distance, points[i].min_distance);
    EXPECT_EQ(back.max_distance, points[i].max_distance);
    EXPECT_EQ(back.reference_angle, points[i].reference_angle);
  }
  std::vector<st::MapPointId> ids = soa.ids;
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(std::adjacent_find(ids.begin(), ids.end()), ids.end());
}

TEST(FeatureGrid, EveryKeypointOnceAndQueryMatchesScan) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<float> u(0.0F, 751.99F);
  std::uniform_real_distribution<float> v(0.0F, 479.99F);
  std::vector<st::KeyPoint> kps(3000);
  for (auto& k : kps) {
    k.u = u(rng);
    k.v = v(rng);
    k.octave = static_cast<int>(rng() % 8);
  }
  st::FeatureGrid grid;
  grid.build(kps, 752, 480, 48);
  std::vector<int> seen(kps.size(), 0);
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      for (std::uint32_t i : grid.cell(c, r)) {
        ++seen[i];
      }
    }
  }
  for (int s : seen) {
    ASSERT_EQ(s, 1);
  }
  std::vector<std::uint32_t> got;
  for (int q = 0; q < 200; ++q) {
    const double qu = u(rng);
    const double qv = v(rng);
    const double radius = 5.0 + (rng() % 60);
    const int lo = static_cast<int>(rng() % 4);
    const int hi = lo + static_cast<int>(rng() % 4);
    grid.query(kps, qu, qv, radius, lo, hi, got);
    std::vector<std::uint32_t> oracle;
    for (std::uint32_t i = 0; i < kps.size(); ++i) {
      if (std::abs(kps[i].u - qu) <= radius && std::abs(kps[i].v - qv) <= radius && kps[i].octave >= lo &&
          kps[i].octave <= hi) {
        oracle.push_back(i);
      }
    }
    ASSERT_EQ(got, oracle);
  }
}

TEST(Map, LinksAreBidirectional) {
  st::Map map;
  st::Frame frame;
  frame.keypoints_left.resize(5);
  frame.descriptors_left.resize(5);
  frame.finalize_features(100, 100, 48);
  const st::KeyFrameId kf = map.add_keyframe(frame);
  std::vector<st::MapPointId> ids;
  for (int i = 0; i < 3; ++i) {
    ids.push_back(map.add_point(st::MapPoint{}));
    map.link(kf, static_cast<std::uint32_t>(i), ids.back());
  }
  EXPECT_EQ(map.point_count(), 3U);
  EXPECT_TRUE(map.consistent());
  for (int i = 0; i < 3; ++i) {
    EXPECT_TRUE(map.point(ids[i])->observed_by(kf));
    EXPECT_EQ(map.keyframe(kf)->map_points()[i], ids[i]);
  }
  EXPECT_FALSE(map.keyframe(kf)->map_points()[4].has_value());
}
