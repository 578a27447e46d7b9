#include <cstring>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stereotrack/bench/config.hpp"
#include "stereotrack/bench/runner.hpp"
#include "stereotrack/bench/synthetic.hpp"
#include "stereotrack/bench/trajectory.hpp"
#include "stereotrack/core/error.hpp"
#include "stereotrack/features/extraction.hpp"
#include "stereotrack/parallel/engine.hpp"
#include "stereotrack/pipeline/imu.hpp"
#include "stereotrack/stereo/stereo.hpp"

namespace py = pybind11;
namespace st = stereotrack;

namespace {

using RowsD = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Nx8 rows: timestamp tx ty tz qx qy qz qw (camera to world).
st::Trajectory to_trajectory(const RowsD& rows) {
  if (rows.ndim() != 2 || rows.shape(1) != 8) {
    throw py::value_error("trajectory must be an (N, 8) array");
  }
  auto r = rows.unchecked<2>();
  st::Trajectory traj;
  for (py::ssize_t i = 0; i < r.shape(0); ++i) {
    const Eigen::Quaterniond q(r(i, 7), r(i, 4), r(i, 5), r(i, 6));
    traj.push_back(r(i, 0), st::Pose(q, Eigen::Vector3d(r(i, 1), r(i, 2), r(i, 3))));
  }
  return traj;
}

py::array_t<double> from_trajectory(const st::Trajectory& traj) {
  py::array_t<double> out({static_cast<py::ssize_t>(traj.size()), py::ssize_t{8}});
  auto w = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& t = traj.poses[i].translation();
    const Eigen::Quaterniond q = traj.poses[i].quaternion();
    const auto k = static_cast<py::ssize_t>(i);
    w(k, 0) = traj.timestamps[i];
    w(k, 1) = t.x();
    w(k, 2) = t.y();
    w(k, 3) = t.z();
    w(k, 4) = q.x();
    w(k, 5) = q.y();
    w(k, 6) = q.z();
    w(k, 7) = q.w();
  }
  return out;
}

st::SyntheticSceneConfig scene_config(const std::string& trajectory, int frames, int landmarks) {
  st::SyntheticSceneConfig cfg;
  cfg.trajectory = st::parse_trajectory_kind(trajectory);
  cfg.frame_count = frames;
  cfg.landmark_count = landmarks;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stereo visual-inertial tracking frontend";
  m.attr("__version__") = "0.1.0";

  // Translators run newest first, so the base class goes first.
  py::register_exception<st::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<st::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<st::InsufficientOverlapError>(m, "InsufficientOverlapError", PyExc_ValueError);

  m.def(
      "compute_ate",
      [](const RowsD& est, const RowsD& ref, double tolerance, bool with_scale) {
        return st::compute_ate(to_trajectory(est), to_trajectory(ref), tolerance, with_scale).rmse;
      },
      py::arg("estimate"), py::arg("reference"), py::arg("tolerance") = 0.01, py::arg("with_scale") = false,
      "Aligned translational RMSE between two (N, 8) trajectories.");

  m.def(
      "compute_rpe",
      [](const RowsD& est, const RowsD& ref, std::size_t delta, double tolerance) {
        return st::compute_rpe(to_trajectory(est), to_trajectory(ref), delta, tolerance);
      },
      py::arg("estimate"), py::arg("reference"), py::arg("delta") = 1, py::arg("tolerance") = 0.01);

  m.def(
      "read_trajectory", [](const std::string& path) { return from_trajectory(st::read_trajectory(path)); },
      py::arg("path"));

  m.def("subpixel_offset", &st::subpixel_offset, py::arg("d_minus"), py::arg("d_zero"), py::arg("d_plus"));

  m.def(
      "descriptor_distance",
      [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> a,
         py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> b) {
        if (a.size() != st::Descriptor::kBytes || b.size() != st::Descriptor::kBytes) {
          throw py::value_error("descriptors must have 32 bytes");
        }
        st::Descriptor da;
        st::Descriptor db;
        std::memcpy(da.words.data(), a.data(), st::Descriptor::kBytes);
        std::memcpy(db.words.data(), b.data(), st::Descriptor::kBytes);
        return st::descriptor_distance(da, db);
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "extract_features",
      [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> image, int n_features) {
        if (image.ndim() != 2) {
          throw py::value_error("image must be a 2-D uint8 array");
        }
        st::GrayImage img(static_cast<int>(image.shape(1)), static_cast<int>(image.shape(0)));
        std::memcpy(img.pixels.data(), image.data(), img.pixels.size());
        st::ExtractionConfig cfg;
        cfg.n_features = n_features;
        st::Engine engine;
        st::OrbExtractor extractor(cfg);
        st::ImagePyramid pyr;
        std::vector<st::KeyPoint> kps;
        std::vector<st::Descriptor> desc;
        {
          py::gil_scoped_release release;
          extractor.extract(engine, img, pyr, kps, desc);
        }
        py::array_t<float> k({static_cast<py::ssize_t>(kps.size()), py::ssize_t{5}});
        py::array_t<std::uint8_t> d({static_cast<py::ssize_t>(desc.size()), py::ssize_t{st::Descriptor::kBytes}});
        auto kw = k.mutable_unchecked<2>();
        for (std::size_t i = 0; i < kps.size(); ++i) {
          const auto r = static_cast<py::ssize_t>(i);
          kw(r, 0) = kps[i].u;
          kw(r, 1) = kps[i].v;
          kw(r, 2) = static_cast<float>(kps[i].octave);
          kw(r, 3) = kps[i].angle;
          kw(r, 4) = kps[i].response;
          std::memcpy(d.mutable_data(r, 0), desc[i].words.data(), st::Descriptor::kBytes);
        }
        return py::make_tuple(k, d);
      },
      py::arg("image"), py::arg("n_features") = 1200,
      "Keypoints as (N, 5) [u, v, octave, angle, response] and (N, 32) descriptors.");

  m.def(
      "preintegrate_imu",
      [](const Eigen::VectorXd& t, const Eigen::MatrixX3d& gyro, const Eigen::MatrixX3d& accel,
         const Eigen::Vector3d& gravity) {
        if (gyro.rows() != t.size() || accel.rows() != t.size()) {
          throw py::value_error("timestamps, gyro and accel must have the same length");
        }
        std::vector<st::ImuSample> samples(static_cast<std::size_t>(t.size()));
        for (Eigen::Index i = 0; i < t.size(); ++i) {
          samples[i].timestamp = t[i];
          samples[i].gyro = gyro.row(i).transpose();
          samples[i].accel = accel.row(i).transpose();
        }
        const st::ImuDelta d = st::preintegrate_imu(samples, gravity);
        py::dict out;
        out["rotation"] = Eigen::Matrix3d(d.rotation);
        out["velocity"] = Eigen::Vector3d(d.velocity);
        out["position"] = Eigen::Vector3d(d.position);
        out["dt"] = d.dt;
        return out;
      },
      py::arg("timestamps"), py::arg("gyro"), py::arg("accel"), py::arg("gravity"));

  m.def(
      "synthetic_ground_truth",
      [](const std::string& trajectory, int frames, int landmarks, std::uint64_t seed) {
        const st::SyntheticScene scene(scene_config(trajectory, frames, landmarks), seed);
        return from_trajectory(scene.ground_truth());
      },
      py::arg("trajectory") = "circle", py::arg("frames") = 300, py::arg("landmarks") = 2000, py::arg("seed") = 1);

  m.def(
      "run_synthetic",
      [](const std::string& trajectory, int frames, const std::string& input, const std::string& backend,
         bool pose_opt, std::uint64_t seed, unsigned workers) {
        if (input != "images" && input != "features") {
          throw py::value_error("input must be 'images' or 'features'");
        }
        st::RunConfig cfg;
        cfg.synthetic.frame_count = frames;
        cfg.synthetic_input = input == "images" ? st::SyntheticInput::kImages : st::SyntheticInput::kFeatures;
        cfg.seed = seed;
        st::RunOptions options;
        options.dataset = trajectory;
        options.backend = st::parse_backend(backend);
        options.workers = workers;
        options.pose_opt = pose_opt;
        st::RunOutput out;
        {
          py::gil_scoped_release release;
          out = st::run_sequence(options, cfg);
        }
        py::dict result;
        result["trajectory"] = from_trajectory(out.trajectory);
        result["ground_truth"] = out.ground_truth ? py::object(from_trajectory(*out.ground_truth)) : py::none();
        result["ate"] = out.ate ? py::object(py::float_(*out.ate)) : py::none();
        result["drops"] = out.stats.drops;
        result["fps"] = out.stats.fps;
        py::dict stages;
        for (int s = 0; s < st::kStageCount; ++s) {
          stages[py::str(std::string(st::stage_name(s)))] =
              py::make_tuple(out.stats.stages[s].mean, out.stats.stages[s].stddev);
        }
        result["stages"] = stages;
        return result;
      },
      py::arg("trajectory") = "circle", py::arg("frames") = 100, py::arg("input") = "features",
      py::arg("backend") = "seq", py::arg("pose_opt") = false, py::arg("seed") = 1, py::arg("workers") = 0,
      "Track a synthetic sequence; returns trajectory, ground truth, ATE and stage statistics.");
}
