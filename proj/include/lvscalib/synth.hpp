// lvscalib - spatiotemporal calibration of a line laser sensor on a robot arm
//
// Ground-truth scenario generator. The end-effector follows an S-shaped
// scan over a straight weld while its attitude oscillates. Each camera tick
// at time t observes the weld through the pose at t - td_truth, so the
// emitted streams carry a known time offset.
//
// Path model. Knot poses are sampled from smooth functions at pose_rate.
// Between knots the true motion has constant body angular velocity and
// constant linear velocity, the same model the pose buffer interpolates
// with. Setting knot_exact = false evaluates the smooth functions directly
// instead, which leaves interpolation error in the data.
//
// Noise model. mt19937_64 seeded with `seed`. Uniforms take the top 53 bits
// of each draw. Gaussians come from the Box-Muller transform, with u1 in
// (0, 1] feeding the radius. Every camera tick consumes three Gaussians,
// observable or not, so noise streams line up across configurations that
// share a seed.

#ifndef LVSCALIB_SYNTH_HPP
#define LVSCALIB_SYNTH_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "lvscalib/errors.hpp"
#include "lvscalib/liegeo.hpp"
#include "lvscalib/residual.hpp"
#include "lvscalib/solver.hpp"
#include "lvscalib/trajectory.hpp"

namespace lvscalib {

struct ScenarioConfig {
  PluckerLine line_truth = line_from_point_dir({500.0, 100.0, 0.0}, {1.0, 0.05, 0.02});
  Rotation he_rot_truth = rot_exp(Vec3(0.10, -0.06, 0.25));
  Vec3 he_trans_truth{45.0, -30.0, 180.0};  // mm
  double td_truth = 0.018;                  // s
  double pose_rate = 250.0;                 // Hz
  double cam_rate = 33.0;                   // Hz
  double duration = 20.0;                   // s of camera data
  double path_amplitude = 30.0;             // mm, lateral S amplitude
  double attitude_sweep = 0.8;              // rad
  double noise_sigma = 0.0;                 // mm, per axis
  std::uint64_t seed = 1;

  double scan_speed = 40.0;   // mm/s along the weld
  double lateral_freq = 0.5;  // Hz
  double standoff = 250.0;    // mm, camera height above the weld
  double margin = 0.25;       // s of extra pose data before and after the camera window
  bool knot_exact = true;

  void validate() const {
    const bool ok = pose_rate > 0.0 && cam_rate > 0.0 && duration > 0.0 && noise_sigma >= 0.0 &&
                    margin >= 0.0 && standoff > 0.0 && std::abs(line_truth.v.norm() - 1.0) < 1e-9;
    if (!ok) throw Error(ErrorKind::InvalidArgument, "invalid scenario config");
  }

  [[nodiscard]] CalibrationState truth() const {
    return {td_truth, to_orthonormal(line_truth), he_rot_truth, he_trans_truth};
  }
};

struct SynthDataset {
  std::vector<TimedPose> poses;
  std::vector<FeatureObservation> features;
  CalibrationState truth;
  std::size_t skipped = 0;
  std::size_t camera_ticks = 0;

  [[nodiscard]] Dataset to_dataset() const {
    Dataset d;
    for (const auto& p : poses) d.poses.insert(p);
    d.features = features;
    return d;
  }
};

/// Seeded standard normal source with a platform-independent algorithm.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double operator()() {
    if (cached_) {
      const double z = *cached_;
      cached_.reset();
      return z;
    }
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_ = radius * std::sin(angle);
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> cached_;
};

namespace detail {

struct ScanFrame {
  Vec3 along;    // weld direction
  Vec3 lateral;  // horizontal, perpendicular to the weld
  Vec3 up;       // completes the frame
  Vec3 anchor;   // point on the weld
  Rotation camera_nominal;
};

inline ScanFrame scan_frame(const ScenarioConfig& cfg) {
  ScanFrame f;
  f.along = cfg.line_truth.v.normalized();
  Vec3 lat = Vec3::UnitZ().cross(f.along);
  if (lat.norm() < 1e-6) lat = Vec3::UnitX().cross(f.along);
  f.lateral = lat.normalized();
  f.up = f.along.cross(f.lateral);
  f.anchor = cfg.line_truth.closest_point();
  // Laser plane (camera y = 0) cuts across the weld; camera looks down.
  const Vec3 y_c = f.along;
  const Vec3 z_c = -f.up;
  f.camera_nominal.col(0) = y_c.cross(z_c);
  f.camera_nominal.col(1) = y_c;
  f.camera_nominal.col(2) = z_c;
  return f;
}

// End-effector pose of the smooth path at time t.
inline Pose smooth_pose(const ScenarioConfig& cfg, const ScanFrame& f, double t) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double tau = t - cfg.margin;
  const double a = cfg.path_amplitude;
  const double phase = two_pi * cfg.lateral_freq * tau;

  const double s = cfg.scan_speed * tau;
  const double lateral = a * std::sin(phase);
  const double vertical = 0.3 * a * std::sin(0.7 * phase + 0.5);
  const Vec3 camera_center =
      f.anchor + s * f.along + lateral * f.lateral + (cfg.standoff + vertical) * f.up;

  const double sweep = cfg.attitude_sweep;
  const Vec3 attitude{sweep * std::sin(two_pi * 0.13 * tau),
                      sweep * std::sin(two_pi * 0.21 * tau + 1.0),
                      0.5 * sweep * std::sin(two_pi * 0.17 * tau + 2.0)};
  const Rotation camera_rot = f.camera_nominal * rot_exp(attitude);

  Pose ee;
  ee.rotation = camera_rot * cfg.he_rot_truth.transpose();
  ee.translation = camera_center - ee.rotation * cfg.he_trans_truth;
  return ee;
}

inline std::size_t knot_count(const ScenarioConfig& cfg) {
  return static_cast<std::size_t>(std::ceil((cfg.duration + 2.0 * cfg.margin) * cfg.pose_rate)) + 1;
}

inline double knot_time(const ScenarioConfig& cfg, std::size_t k) {
  return static_cast<double>(k) / cfg.pose_rate;
}

}  // namespace detail

/// End-effector knots of the S-shaped scan, sampled at pose_rate.
[[nodiscard]] inline std::vector<TimedPose> make_s_path(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto frame = detail::scan_frame(cfg);
  const std::size_t count = detail::knot_count(cfg);
  std::vector<TimedPose> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = detail::knot_time(cfg, k);
    out.push_back({t, detail::smooth_pose(cfg, frame, t)});
  }
  return out;
}

/// True end-effector pose at time t.
[[nodiscard]] inline Pose true_pose(const ScenarioConfig& cfg, double t) {
  const auto frame = detail::scan_frame(cfg);
  if (!cfg.knot_exact) return detail::smooth_pose(cfg, frame, t);

  const std::size_t last = detail::knot_count(cfg) - 1;
  const double pos = t * cfg.pose_rate;
  if (!(pos >= 0.0 && pos <= static_cast<double>(last))) {
    throw Error(ErrorKind::OutOfRange, "time outside the generated path");
  }
  auto j = std::min(static_cast<std::size_t>(std::floor(pos)), last - 1);
  while (j > 0 && t < detail::knot_time(cfg, j)) --j;
  while (j + 1 < last && t >= detail::knot_time(cfg, j + 1)) ++j;

  const double t0 = detail::knot_time(cfg, j);
  const double t1 = detail::knot_time(cfg, j + 1);
  const Pose a = detail::smooth_pose(cfg, frame, t0);
  const Pose b = detail::smooth_pose(cfg, frame, t1);
  const double frac = (t - t0) / (t1 - t0);
  return {a.rotation * rot_exp(frac * rot_log(a.rotation.transpose() * b.rotation)),
          a.translation + frac * (b.translation - a.translation)};
}

/// Intersection of the line with the camera-frame plane y = 0, in camera
/// coordinates. Empty when the line is within 1e-6 rad of parallel to the
/// plane or the intersection is not in front of the camera.
[[nodiscard]] inline std::optional<Vec3> simulate_measurement(const Pose& pose, const Pose& hand_eye,
                                                              const PluckerLine& line) {
  const Pose base_from_camera = pose.compose(hand_eye);
  const Pose camera_from_base = base_from_camera.inverse();
  const Vec3 dir = base_from_camera.rotation.transpose() * line.v;
  const Vec3 origin = camera_from_base.apply(line.closest_point());
  if (std::abs(dir.y()) < std::sin(1e-6)) return std::nullopt;
  const double lambda = -origin.y() / dir.y();
  Vec3 p = origin + lambda * dir;
  p.y() = 0.0;
  if (!(p.z() > 0.0)) return std::nullopt;
  return p;
}

[[nodiscard]] inline SynthDataset synthesize(const ScenarioConfig& cfg) {
  cfg.validate();
  SynthDataset out;
  out.poses = make_s_path(cfg);
  out.truth = cfg.truth();

  const Pose hand_eye{cfg.he_rot_truth, cfg.he_trans_truth};
  GaussianSource noise(cfg.seed);
  out.camera_ticks = static_cast<std::size_t>(std::floor(cfg.duration * cfg.cam_rate));
  out.features.reserve(out.camera_ticks);
  for (std::size_t i = 0; i < out.camera_ticks; ++i) {
    const double t = cfg.margin + static_cast<double>(i) / cfg.cam_rate;
    const Vec3 w{noise(), noise(), noise()};
    const auto p = simulate_measurement(true_pose(cfg, t - cfg.td_truth), hand_eye, cfg.line_truth);
    if (!p) {
      ++out.skipped;
      continue;
    }
    out.features.push_back({t, *p + cfg.noise_sigma * w});
  }
  return out;
}

}  // namespace lvscalib

#endif  // LVSCALIB_SYNTH_HPP
