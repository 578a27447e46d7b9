#include "stereotrack/bench/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "stereotrack/core/error.hpp"

namespace stereotrack {
namespace {

bool present(const YAML::Node& node) { return node.IsDefined() && !node.IsNull(); }

class Section {
 public:
  Section(const YAML::Node& node, std::string name) : node_(node), name_(std::move(name)) {
    if (present(node_) && !node_.IsMap()) {
      throw ConfigError(name_ + ": expected a mapping");
    }
  }

  template <class T>
  void get(const char* key, T& value) {
    seen_.insert(key);
    if (!present(node_) || !present(node_[key])) {
      return;
    }
    try {
      value = node_[key].as<T>();
    } catch (const YAML::Exception& e) {
      throw ConfigError(name_ + "." + key + ": " + e.what());
    }
  }

  YAML::Node child(const char* key) {
    seen_.insert(key);
    return present(node_) ? node_[key] : YAML::Node();
  }

  void finish() const {
    if (!present(node_)) {
      return;
    }
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (seen_.count(key) == 0) {
        throw ConfigError(name_ + ": unknown key '" + key + "'");
      }
    }
  }

  const std::string& name() const { return name_; }

 private:
  YAML::Node node_;
  std::string name_;
  std::set<std::string> seen_;
};

Eigen::Vector3d read_vector3(const YAML::Node& node, const std::string& name) {
  if (!node.IsSequence() || node.size() != 3) {
    throw ConfigError(name + ": expected 3 numbers");
  }
  return {node[0].as<double>(), node[1].as<double>(), node[2].as<double>()};
}

Pose read_pose(const YAML::Node& node, const std::string& name) {
  Section s(node, name);
  Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  const YAML::Node rot = s.child("rotation");
  if (present(rot)) {
    if (!rot.IsSequence() || rot.size() != 9) {
      throw ConfigError(name + ".rotation: expected 9 numbers, row-major");
    }
    for (int i = 0; i < 9; ++i) {
      r(i / 3, i % 3) = rot[i].as<double>();
    }
  }
  const YAML::Node tr = s.child("translation");
  if (present(tr)) {
    t = read_vector3(tr, name + ".translation");
  }
  s.finish();
  const Pose pose(r, t);
  if (!pose.is_valid(1e-6)) {
    throw ConfigError(name + ": rotation is not orthonormal");
  }
  return Pose(orthonormalize(r), t);
}

void read_fisheye(const YAML::Node& node, const std::string& name, FisheyeCamera& cam) {
  Section s(node, name);
  s.get("fx", cam.fx);
  s.get("fy", cam.fy);
  s.get("cx", cam.cx);
  s.get("cy", cam.cy);
  s.get("width", cam.width);
  s.get("height", cam.height);
  std::vector<double> k;
  s.get("k", k);
  if (!k.empty()) {
    if (k.size() != 4) {
      throw ConfigError(name + ".k: expected 4 coefficients");
    }
    std::copy(k.begin(), k.end(), cam.k.begin());
  }
  const YAML::Node rfl = s.child("right_from_left");
  if (present(rfl)) {
    cam.right_from_left = read_pose(rfl, name + ".right_from_left");
  }
  s.finish();
}

void read_camera(const YAML::Node& node, RunConfig& cfg) {
  Section s(node, "camera");
  std::string model = "pinhole";
  s.get("model", model);
  if (model == "pinhole") {
    double baseline = cfg.pinhole.baseline();
    s.get("fx", cfg.pinhole.fx);
    s.get("fy", cfg.pinhole.fy);
    s.get("cx", cfg.pinhole.cx);
    s.get("cy", cfg.pinhole.cy);
    s.get("width", cfg.pinhole.width);
    s.get("height", cfg.pinhole.height);
    s.get("baseline", baseline);
    cfg.pinhole.baseline_times_fx = baseline * cfg.pinhole.fx;
  } else if (model == "fisheye") {
    cfg.has_fisheye = true;
    read_fisheye(s.child("left"), "camera.left", cfg.fisheye_left);
    read_fisheye(s.child("right"), "camera.right", cfg.fisheye_right);
    cfg.fisheye_left.right_from_left = Pose();
  } else {
    throw ConfigError("camera.model: expected pinhole or fisheye, got '" + model + "'");
  }
  s.finish();
}

}  // namespace

Camera RunConfig::camera(bool fisheye) const {
  if (!fisheye) {
    pinhole.validate();
    return Camera(pinhole);
  }
  if (!has_fisheye) {
    throw ConfigError("fisheye camera requested but the config has no fisheye calibration");
  }
  fisheye_left.validate();
  fisheye_right.validate();
  return Camera(fisheye_left, fisheye_right);
}

RunConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("invalid YAML: ") + e.what());
  }
  RunConfig cfg;
  if (!root || root.IsNull()) {
    return cfg;
  }
  Section top(root, "config");
  read_camera(top.child("camera"), cfg);

  Section ex(top.child("extraction"), "extraction");
  ExtractionConfig& e = cfg.tracker.extraction;
  ex.get("n_features", e.n_features);
  ex.get("levels", e.levels);
  ex.get("scale_factor", e.scale_factor);
  ex.get("fast_threshold", e.fast_threshold);
  ex.get("min_fast_threshold", e.min_fast_threshold);
  ex.get("edge_threshold", e.edge_threshold);
  ex.get("detection_cell", e.detection_cell);
  ex.finish();

  Section st(top.child("stereo"), "stereo");
  StereoMatchConfig& m = cfg.tracker.stereo;
  st.get("max_distance", m.max_distance);
  st.get("row_band", m.row_band);
  st.get("min_disparity", m.min_disparity);
  st.get("max_disparity", m.max_disparity);
  st.get("window", m.window);
  st.get("slide", m.slide);
  st.get("outlier_factor", m.outlier_factor);
  st.get("ratio", m.ratio);
  st.get("max_ray_gap", m.max_ray_gap);
  st.get("tolerance", cfg.stereo_tolerance);
  st.finish();

  Section pr(top.child("projection"), "projection");
  ProjectionSearchConfig& p = cfg.tracker.projection;
  pr.get("window", p.window);
  pr.get("max_distance", p.max_distance);
  pr.get("ratio", p.ratio);
  pr.get("min_view_cos", p.min_view_cos);
  pr.get("histogram_bins", p.histogram_bins);
  pr.get("keep_bins", p.keep_bins);
  pr.get("rotation_check", p.rotation_check);
  pr.finish();

  Section po(top.child("pose_opt"), "pose_opt");
  PoseOptConfig& o = cfg.tracker.pose_opt;
  po.get("enabled", o.enabled);
  po.get("max_iterations", o.max_iterations);
  po.get("huber_delta", o.huber_delta);
  po.get("tolerance", o.tolerance);
  po.get("chi2_threshold", o.chi2_threshold);
  po.get("outlier_rounds", o.outlier_rounds);
  po.finish();

  Section tr(top.child("tracking"), "tracking");
  TrackingConfig& t = cfg.tracker.tracking;
  tr.get("init_min_matches", t.init_min_matches);
  tr.get("min_associations", t.min_associations);
  tr.get("keyframe_ratio", t.keyframe_ratio);
  tr.get("max_keyframe_interval", t.max_keyframe_interval);
  tr.get("depth_ceiling_baselines", t.depth_ceiling_baselines);
  tr.get("grid_cell", t.grid_cell);
  tr.get("prev_search_retry", t.prev_search_retry);
  tr.get("residency", t.residency);
  tr.get("use_imu", t.use_imu);
  tr.get("max_local_points", t.max_local_points);
  tr.get("max_keypoints", t.max_keypoints);
  tr.get("trajectory_tolerance", cfg.trajectory_tolerance);
  if (const YAML::Node g = tr.child("gravity"); present(g)) {
    t.gravity = read_vector3(g, "tracking.gravity");
  }
  if (const YAML::Node c = tr.child("cam_from_imu"); present(c)) {
    t.cam_from_imu = read_pose(c, "tracking.cam_from_imu");
  }
  tr.finish();

  Section sy(top.child("synthetic"), "synthetic");
  SyntheticSceneConfig& s = cfg.synthetic;
  std::string kind = trajectory_kind_name(s.trajectory);
  std::string input = "images";
  sy.get("landmarks", s.landmark_count);
  sy.get("extent", s.extent);
  sy.get("trajectory", kind);
  sy.get("frame_rate", s.frame_rate);
  sy.get("frames", s.frame_count);
  sy.get("radius", s.radius);
  sy.get("angular_rate", s.angular_rate);
  sy.get("line_length", s.line_length);
  sy.get("image_noise", s.image_noise);
  sy.get("keypoint_noise", s.keypoint_noise);
  sy.get("descriptor_flips", s.descriptor_flips);
  sy.get("square_size", s.square_size);
  sy.get("texture_cells", s.texture_cells);
  sy.get("imu_rate", s.imu_rate);
  sy.get("gyro_noise", s.gyro_noise);
  sy.get("accel_noise", s.accel_noise);
  sy.get("input", input);
  sy.get("seed", cfg.seed);
  if (const YAML::Node c = sy.child("center"); present(c)) {
    s.center = read_vector3(c, "synthetic.center");
  }
  sy.finish();
  s.trajectory = parse_trajectory_kind(kind);
  if (input == "images") {
    cfg.synthetic_input = SyntheticInput::kImages;
  } else if (input == "features") {
    cfg.synthetic_input = SyntheticInput::kFeatures;
  } else {
    throw ConfigError("synthetic.input: expected images or features, got '" + input + "'");
  }
  top.finish();

  s.camera = cfg.pinhole;
  s.levels = cfg.tracker.extraction.levels;
  s.scale_factor = cfg.tracker.extraction.scale_factor;
  s.edge_threshold = cfg.tracker.extraction.edge_threshold;
  s.gravity = t.gravity;
  cfg.tracker.validate();
  s.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config " + path);
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace stereotrack
