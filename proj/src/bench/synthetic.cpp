#include "stereotrack/bench/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "stereotrack/core/error.hpp"

namespace stereotrack {
namespace {

constexpr double kGyroStep = 1e-5;

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return std::mt19937_64(seq);
}

Eigen::Matrix3d look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target) {
  const Eigen::Vector3d z = (target - eye).normalized();
  const Eigen::Vector3d down(0.0, 1.0, 0.0);
  const Eigen::Vector3d x = down.cross(z).normalized();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

// Length of [a0, a1] ∩ [b0, b1].
double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace

TrajectoryKind parse_trajectory_kind(const std::string& name) {
  if (name == "static") {
    return TrajectoryKind::kStatic;
  }
  if (name == "line") {
    return TrajectoryKind::kLine;
  }
  if (name == "circle") {
    return TrajectoryKind::kCircle;
  }
  throw ConfigError("unknown trajectory kind '" + name + "'");
}

std::string trajectory_kind_name(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::kStatic:
      return "static";
    case TrajectoryKind::kLine:
      return "line";
    case TrajectoryKind::kCircle:
      return "circle";
  }
  return "circle";
}

PinholeCamera default_synthetic_camera() {
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

void SyntheticSceneConfig::validate() const {
  if (landmark_count <= 0) {
    throw ConfigError("synthetic: landmark count must be positive");
  }
  if (!(frame_rate > 0.0) || frame_count <= 0) {
    throw ConfigError("synthetic: frame rate and frame count must be positive");
  }
  if (!(extent > 0.0) || !(imu_rate > 0.0) || !(square_size > 0.0) || texture_cells < 1) {
    throw ConfigError("synthetic: extent, imu rate, square size and texture cells must be positive");
  }
  if (image_noise < 0.0 || keypoint_noise < 0.0 || gyro_noise < 0.0 || accel_noise < 0.0 || descriptor_flips < 0) {
    throw ConfigError("synthetic: noise parameters must be non-negative");
  }
  if (levels < 1 || !(scale_factor > 1.0)) {
    throw ConfigError("synthetic: invalid scale pyramid");
  }
  camera.validate();
}

SyntheticScene::SyntheticScene(const SyntheticSceneConfig& cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {
  cfg_.validate();
  std::mt19937_64 rng = stream_rng(seed, 0, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> tone(20, 235);
  const auto n = static_cast<std::size_t>(cfg_.landmark_count);
  landmarks_.resize(n);
  reference_depth_.resize(n);
  descriptors_.resize(n);
  textures_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) {
      landmarks_[i][k] = cfg_.center[k] + (unit(rng) - 0.5) * cfg_.extent;
    }
    reference_depth_[i] = 4.0 * std::pow(cfg_.scale_factor, unit(rng) * (cfg_.levels - 1));
    for (auto& w : descriptors_[i].words) {
      w = rng();
    }
    textures_[i].resize(static_cast<std::size_t>(cfg_.texture_cells) * cfg_.texture_cells);
    for (auto& t : textures_[i]) {
      t = static_cast<std::uint8_t>(tone(rng));
    }
  }

  const double t_end = frame_time(frame_count() - 1);
  const auto samples = static_cast<std::size_t>(std::llround(std::floor(t_end * cfg_.imu_rate + 1e-9))) + 1;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::mt19937_64 imu_rng = stream_rng(seed, 1, 0);
  imu_.resize(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = static_cast<double>(k) / cfg_.imu_rate;
    const Eigen::Matrix3d r0 = world_from_camera_rotation(t - kGyroStep);
    const Eigen::Matrix3d r1 = world_from_camera_rotation(t + kGyroStep);
    ImuSample& s = imu_[k];
    s.timestamp = t;
    s.gyro = so3_log(r0.transpose() * r1) / (2.0 * kGyroStep);
    s.accel = world_from_camera_rotation(t).transpose() * (acceleration(t) - cfg_.gravity);
    if (cfg_.gyro_noise > 0.0 || cfg_.accel_noise > 0.0) {
      for (int a = 0; a < 3; ++a) {
        s.gyro[a] += cfg_.gyro_noise * gauss(imu_rng);
        s.accel[a] += cfg_.accel_noise * gauss(imu_rng);
      }
    }
  }
}

double SyntheticScene::frame_time(std::size_t i) const { return static_cast<double>(i) / cfg_.frame_rate; }

Eigen::Vector3d SyntheticScene::position(double t) const {
  switch (cfg_.trajectory) {
    case TrajectoryKind::kStatic:
      return Eigen::Vector3d::Zero();
    case TrajectoryKind::kLine: {
      const double duration = std::max(frame_time(frame_count() - 1), 1.0 / cfg_.frame_rate);
      return {-0.5 * cfg_.line_length + cfg_.line_length * t / duration, 0.0, 0.0};
    }
    case TrajectoryKind::kCircle: {
      const double a = cfg_.angular_rate * t;
      return {cfg_.radius * std::cos(a), 0.0, cfg_.radius * std::sin(a)};
    }
  }
  return Eigen::Vector3d::Zero();
}

Eigen::Vector3d SyntheticScene::velocity(double t) const {
  switch (cfg_.trajectory) {
    case TrajectoryKind::kStatic:
      return Eigen::Vector3d::Zero();
    case TrajectoryKind::kLine: {
      const double duration = std::max(frame_time(frame_count() - 1), 1.0 / cfg_.frame_rate);
      return {cfg_.line_length / duration, 0.0, 0.0};
    }
    case TrajectoryKind::kCircle: {
      const double a = cfg_.angular_rate * t;
      const double rw = cfg_.radius * cfg_.angular_rate;
      return {-rw * std::sin(a), 0.0, rw * std::cos(a)};
    }
  }
  return Eigen::Vector3d::Zero();
}

Eigen::Vector3d SyntheticScene::acceleration(double t) const {
  if (cfg_.trajectory != TrajectoryKind::kCircle) {
    return Eigen::Vector3d::Zero();
  }
  const double a = cfg_.angular_rate * t;
  const double rw2 = cfg_.radius * cfg_.angular_rate * cfg_.angular_rate;
  return {-rw2 * std::cos(a), 0.0, -rw2 * std::sin(a)};
}

Eigen::Matrix3d SyntheticScene::world_from_camera_rotation(double t) const {
  if (cfg_.trajectory != TrajectoryKind::kCircle) {
    return Eigen::Matrix3d::Identity();
  }
  return look_at(position(t), cfg_.center);
}

Pose SyntheticScene::pose_at(double t) const {
  const Eigen::Matrix3d rwc = world_from_camera_rotation(t);
  return Pose(rwc.transpose(), -rwc.transpose() * position(t));
}

Trajectory SyntheticScene::ground_truth() const {
  Trajectory traj;
  for (std::size_t i = 0; i < frame_count(); ++i) {
    const double t = frame_time(i);
    traj.push_back(t, pose_at(t).inverse());
  }
  return traj;
}

std::vector<double> SyntheticScene::timestamps() const {
  std::vector<double> ts(frame_count());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    ts[i] = frame_time(i);
  }
  return ts;
}

std::span<const ImuSample> SyntheticScene::imu_between(std::size_t i) const {
  if (i == 0 || i >= frame_count()) {
    return {};
  }
  const double t0 = frame_time(i - 1) - 1e-9;
  const double t1 = frame_time(i) + 1e-9;
  const auto lo = std::lower_bound(imu_.begin(), imu_.end(), t0,
                                   [](const ImuSample& s, double v) { return s.timestamp < v; });
  const auto hi = std::upper_bound(imu_.begin(), imu_.end(), t1,
                                   [](double v, const ImuSample& s) { return v < s.timestamp; });
  return {lo, hi};
}

SyntheticFrame SyntheticScene::features(std::size_t i) const {
  SyntheticFrame out;
  out.timestamp = frame_time(i);
  out.pose = pose_at(out.timestamp);
  out.features.timestamp = out.timestamp;
  const PinholeCamera& cam = cfg_.camera;
  const double b = cam.baseline();
  const double log_s = std::log(cfg_.scale_factor);
  const double edge = cfg_.edge_threshold;
  std::mt19937_64 rng = stream_rng(seed_, 2, i);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> bit(0, Descriptor::kBits - 1);
  auto inside = [&](double u, double v) {
    return u >= edge && u < cam.width - edge && v >= edge && v < cam.height - edge;
  };
  auto noisy_descriptor = [&](std::size_t l) {
    Descriptor d = descriptors_[l];
    for (int k = 0; k < cfg_.descriptor_flips; ++k) {
      const int pos = bit(rng);
      d.set_bit(pos, !d.bit(pos));
    }
    return d;
  };
  for (std::size_t l = 0; l < landmarks_.size(); ++l) {
    const Eigen::Vector3d p = out.pose * landmarks_[l];
    if (p.z() < 0.1) {
      continue;
    }
    const double dist = p.norm();
    const int octave = std::clamp(static_cast<int>(std::floor(std::log(reference_depth_[l] / dist) / log_s)), 0,
                                  cfg_.levels - 1);
    const double ul = cam.fx * p.x() / p.z() + cam.cx + cfg_.keypoint_noise * gauss(rng);
    const double vl = cam.fy * p.y() / p.z() + cam.cy + cfg_.keypoint_noise * gauss(rng);
    const double ur = cam.fx * (p.x() - b) / p.z() + cam.cx + cfg_.keypoint_noise * gauss(rng);
    const double vr = cam.fy * p.y() / p.z() + cam.cy + cfg_.keypoint_noise * gauss(rng);
    if (inside(ul, vl)) {
      KeyPoint kp;
      kp.u = static_cast<float>(ul);
      kp.v = static_cast<float>(vl);
      kp.octave = octave;
      kp.response = 1.0F;
      out.features.left.push_back(kp);
      out.features.left_desc.push_back(noisy_descriptor(l));
      out.left_landmark.push_back(static_cast<int>(l));
    }
    if (inside(ur, vr)) {
      KeyPoint kp;
      kp.u = static_cast<float>(ur);
      kp.v = static_cast<float>(vr);
      kp.octave = octave;
      kp.response = 1.0F;
      out.features.right.push_back(kp);
      out.features.right_desc.push_back(noisy_descriptor(l));
      out.right_landmark.push_back(static_cast<int>(l));
    }
  }
  return out;
}

void SyntheticScene::render(std::size_t i, GrayImage& left, GrayImage& right) const {
  const Pose pose = pose_at(frame_time(i));
  render_view(pose, 0.0, i * 2, left);
  render_view(pose, cfg_.camera.baseline(), i * 2 + 1, right);
}

void SyntheticScene::render_view(const Pose& cam_from_world, double x_offset, std::uint64_t noise_seed,
                                 GrayImage& out) const {
  const PinholeCamera& cam = cfg_.camera;
  out.reshape(cam.width, cam.height);
  std::vector<float> canvas(static_cast<std::size_t>(cam.width) * cam.height, 128.0F);

  struct Item {
    double depth;
    std::size_t index;
    Eigen::Vector3d p;
  };
  std::vector<Item> items;
  items.reserve(landmarks_.size());
  for (std::size_t l = 0; l < landmarks_.size(); ++l) {
    Eigen::Vector3d p = cam_from_world * landmarks_[l];
    p.x() -= x_offset;
    if (p.z() > 0.1) {
      items.push_back({p.z(), l, p});
    }
  }
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.depth > b.depth; });

  const double half = 0.5 * cfg_.square_size;
  std::vector<double> ox;
  std::vector<double> oy;
  for (const Item& it : items) {
    const double u = cam.fx * it.p.x() / it.p.z() + cam.cx;
    const double v = cam.fy * it.p.y() / it.p.z() + cam.cy;
    const double hu = cam.fx * half / it.p.z();
    const double hv = cam.fy * half / it.p.z();
    const double u0 = u - hu;
    const double v0 = v - hv;
    const int cells = cfg_.texture_cells;
    const double cw = 2.0 * hu / cells;
    const double ch = 2.0 * hv / cells;
    const int x_lo = std::max(0, static_cast<int>(std::floor(u0 + 0.5)));
    const int x_hi = std::min(cam.width - 1, static_cast<int>(std::ceil(u + hu - 0.5)));
    const int y_lo = std::max(0, static_cast<int>(std::floor(v0 + 0.5)));
    const int y_hi = std::min(cam.height - 1, static_cast<int>(std::ceil(v + hv - 0.5)));
    if (x_lo > x_hi || y_lo > y_hi) {
      continue;
    }
    const auto& tex = textures_[it.index];
    oy.resize(cells);
    ox.resize(cells);
    for (int y = y_lo; y <= y_hi; ++y) {
      for (int r = 0; r < cells; ++r) {
        oy[r] = overlap(y - 0.5, y + 0.5, v0 + r * ch, v0 + (r + 1) * ch);
      }
      for (int x = x_lo; x <= x_hi; ++x) {
        for (int c = 0; c < cells; ++c) {
          ox[c] = overlap(x - 0.5, x + 0.5, u0 + c * cw, u0 + (c + 1) * cw);
        }
        double cover = 0.0;
        double value = 0.0;
        for (int r = 0; r < cells; ++r) {
          if (oy[r] <= 0.0) {
            continue;
          }
          for (int c = 0; c < cells; ++c) {
            const double a = oy[r] * ox[c];
            cover += a;
            value += a * tex[static_cast<std::size_t>(r) * cells + c];
          }
        }
        if (cover <= 0.0) {
          continue;
        }
        float& px = canvas[static_cast<std::size_t>(y) * cam.width + x];
        px = static_cast<float>(value + (1.0 - cover) * px);
      }
    }
  }

  std::mt19937_64 rng = stream_rng(seed_, 3, noise_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t k = 0; k < canvas.size(); ++k) {
    double value = canvas[k];
    if (cfg_.image_noise > 0.0) {
      value += cfg_.image_noise * gauss(rng);
    }
    out.pixels[k] = static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
  }
}

}  // namespace stereotrack
