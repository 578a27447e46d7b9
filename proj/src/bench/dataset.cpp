#include "stereotrack/bench/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>

#include "stereotrack/core/error.hpp"

namespace stereotrack {
namespace {

namespace fs = std::filesystem;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) {
      break;
    }
    start = comma + 1;
  }
  return out;
}

std::int64_t parse_ns(const std::string& path, std::size_t lineno, const std::string& field) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError(path, lineno, "invalid timestamp '" + field + "'");
  }
  return v;
}

double parse_double(const std::string& path, std::size_t lineno, const std::string& field) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) {
      throw ParseError(path, lineno, "invalid number '" + field + "'");
    }
    return v;
  } catch (const std::logic_error&) {
    throw ParseError(path, lineno, "invalid number '" + field + "'");
  }
}

template <class F>
void for_each_row(const std::string& path, F&& fn) {
  std::ifstream in(path);
  if (!in) {
    throw DatasetError("missing file: " + path);
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') {
      continue;
    }
    fn(lineno, split_fields(t));
  }
}

fs::path data_root(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::exists(root / "cam0") && fs::exists(root / "mav0" / "cam0")) {
    return root / "mav0";
  }
  return root;
}

Sequence load_asl(const std::string& dir, double stereo_tolerance, const char* gt_dir) {
  const fs::path root = data_root(dir);
  Sequence seq;
  const auto left = read_camera_csv((root / "cam0" / "data.csv").string());
  const auto right = read_camera_csv((root / "cam1" / "data.csv").string());
  seq.imu = read_imu_csv((root / "imu0" / "data.csv").string());
  const auto match = associate_stereo(left, right, static_cast<std::int64_t>(std::llround(stereo_tolerance * 1e9)));
  std::vector<bool> used(right.size(), false);
  for (std::size_t i = 0; i < left.size(); ++i) {
    if (match[i] < 0) {
      ++seq.unmatched_left;
      continue;
    }
    used[match[i]] = true;
    StereoPair p;
    p.timestamp_ns = left[i].timestamp_ns;
    p.timestamp = left[i].timestamp;
    p.left_path = (root / "cam0" / "data" / left[i].filename).string();
    p.right_path = (root / "cam1" / "data" / right[match[i]].filename).string();
    seq.pairs.push_back(std::move(p));
  }
  seq.unmatched_right = static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
  const fs::path gt = root / gt_dir / "data.csv";
  if (fs::exists(gt)) {
    seq.ground_truth = read_groundtruth_csv(gt.string());
  }
  return seq;
}

}  // namespace

double ns_to_seconds(std::int64_t ns) {
  const std::int64_t whole = ns / 1000000000;
  const std::int64_t frac = ns % 1000000000;
  return static_cast<double>(whole) + static_cast<double>(frac) * 1e-9;
}

std::vector<CameraRow> read_camera_csv(const std::string& path) {
  std::vector<CameraRow> rows;
  for_each_row(path, [&](std::size_t lineno, const std::vector<std::string>& f) {
    if (f.size() != 2 || f[1].empty()) {
      throw ParseError(path, lineno, "expected 2 fields, got " + std::to_string(f.size()));
    }
    CameraRow r;
    r.timestamp_ns = parse_ns(path, lineno, f[0]);
    r.timestamp = ns_to_seconds(r.timestamp_ns);
    r.filename = f[1];
    if (!rows.empty() && r.timestamp_ns <= rows.back().timestamp_ns) {
      throw ParseError(path, lineno, "timestamps must increase");
    }
    rows.push_back(std::move(r));
  });
  return rows;
}

std::vector<ImuSample> read_imu_csv(const std::string& path) {
  std::vector<ImuSample> samples;
  std::int64_t last_ns = 0;
  for_each_row(path, [&](std::size_t lineno, const std::vector<std::string>& f) {
    if (f.size() != 7) {
      throw ParseError(path, lineno, "expected 7 fields, got " + std::to_string(f.size()));
    }
    const std::int64_t ns = parse_ns(path, lineno, f[0]);
    if (!samples.empty() && ns <= last_ns) {
      throw ParseError(path, lineno, "timestamps must increase");
    }
    last_ns = ns;
    ImuSample s;
    s.timestamp = ns_to_seconds(ns);
    for (int k = 0; k < 3; ++k) {
      s.gyro[k] = parse_double(path, lineno, f[1 + k]);
      s.accel[k] = parse_double(path, lineno, f[4 + k]);
    }
    samples.push_back(s);
  });
  return samples;
}

Trajectory read_groundtruth_csv(const std::string& path) {
  Trajectory traj;
  for_each_row(path, [&](std::size_t lineno, const std::vector<std::string>& f) {
    if (f.size() < 8) {
      throw ParseError(path, lineno, "expected at least 8 fields, got " + std::to_string(f.size()));
    }
    const double t = ns_to_seconds(parse_ns(path, lineno, f[0]));
    double v[7];
    for (int k = 0; k < 7; ++k) {
      v[k] = parse_double(path, lineno, f[1 + k]);
    }
    if (!traj.empty() && !(t > traj.timestamps.back())) {
      throw ParseError(path, lineno, "timestamps must increase");
    }
    traj.push_back(t, Pose(Eigen::Quaterniond(v[3], v[4], v[5], v[6]), Eigen::Vector3d(v[0], v[1], v[2])));
  });
  return traj;
}

std::vector<std::int64_t> associate_stereo(const std::vector<CameraRow>& left, const std::vector<CameraRow>& right,
                                           std::int64_t tolerance_ns) {
  std::vector<std::int64_t> out(left.size(), -1);
  for (std::size_t i = 0; i < left.size(); ++i) {
    const std::int64_t t = left[i].timestamp_ns;
    const auto it = std::lower_bound(right.begin(), right.end(), t,
                                     [](const CameraRow& r, std::int64_t v) { return r.timestamp_ns < v; });
    const auto hi = static_cast<std::size_t>(it - right.begin());
    std::int64_t best = -1;
    std::int64_t best_gap = tolerance_ns;
    for (std::size_t cand : {hi - 1, hi}) {
      if (cand >= right.size()) {
        continue;
      }
      const std::int64_t gap = std::abs(right[cand].timestamp_ns - t);
      if (gap <= best_gap && (best < 0 || gap < best_gap)) {
        best_gap = gap;
        best = static_cast<std::int64_t>(cand);
      }
    }
    out[i] = best;
  }
  return out;
}

Sequence load_euroc(const std::string& dir, double stereo_tolerance) {
  return load_asl(dir, stereo_tolerance, "state_groundtruth_estimate0");
}

Sequence load_tumvi(const std::string& dir, double stereo_tolerance) {
  return load_asl(dir, stereo_tolerance, "mocap0");
}

}  // namespace stereotrack
