// lvscalib - spatiotemporal calibration of a line laser sensor on a robot arm
//
// Time-indexed end-effector pose buffer. Between consecutive samples the
// robot is modelled as moving with constant body angular velocity and
// constant base-frame linear velocity.

#ifndef LVSCALIB_TRAJECTORY_HPP
#define LVSCALIB_TRAJECTORY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "lvscalib/errors.hpp"
#include "lvscalib/liegeo.hpp"

namespace lvscalib {

struct TimedPose {
  double t = 0.0;  // s
  Pose pose;
};

struct Twist {
  Vec3 omega = Vec3::Zero();  // rad/s, end-effector frame
  Vec3 vel = Vec3::Zero();    // mm/s, base frame
};

/// Derivatives of the pose interpolated at t - t_d with respect to t_d.
struct TimeJacobian {
  Mat3 d_rotation = Mat3::Zero();        // dR/dt_d as a matrix
  Vec3 rotation_tangent = Vec3::Zero();  // left-trivialized: R(t_d + h) ~ Exp(h * tangent) R
  Vec3 d_translation = Vec3::Zero();     // mm/s
};

class PoseBuffer {
 public:
  PoseBuffer() = default;

  /// Appends a sample; timestamps must be strictly increasing.
  void insert(const TimedPose& tp) {
    if (!std::isfinite(tp.t) || !tp.pose.translation.allFinite() ||
        !tp.pose.rotation.allFinite()) {
      throw Error(ErrorKind::InvalidArgument, "non-finite pose sample");
    }
    if (!samples_.empty() && !(tp.t > samples_.back().t)) {
      std::ostringstream os;
      os << "timestamp " << tp.t << " does not follow " << samples_.back().t;
      throw Error(ErrorKind::NonMonotonicTimestamp, os.str());
    }
    samples_.push_back(tp);
  }

  [[nodiscard]] std::size_t size() const { return samples_.size(); }
  [[nodiscard]] bool empty() const { return samples_.empty(); }
  [[nodiscard]] const TimedPose& operator[](std::size_t i) const { return samples_[i]; }
  [[nodiscard]] const std::vector<TimedPose>& samples() const { return samples_; }

  [[nodiscard]] double first_time() const { return samples_.front().t; }
  [[nodiscard]] double last_time() const { return samples_.back().t; }

  [[nodiscard]] bool contains(double t) const {
    return samples_.size() >= 2 && t >= first_time() && t <= last_time();
  }

  /// Index j of the interval with t_j <= t < t_{j+1}; the last sample time
  /// belongs to the final interval.
  [[nodiscard]] std::size_t bracket(double t) const {
    if (samples_.size() < 2) {
      throw Error(ErrorKind::OutOfRange, "pose buffer needs at least 2 samples");
    }
    if (!contains(t)) {
      std::ostringstream os;
      os << "query time " << t << " outside [" << first_time() << ", " << last_time() << "]";
      throw Error(ErrorKind::OutOfRange, os.str());
    }
    const auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                                     [](double q, const TimedPose& s) { return q < s.t; });
    const auto j = static_cast<std::size_t>(std::distance(samples_.begin(), it)) - 1;
    return std::min(j, samples_.size() - 2);
  }

  [[nodiscard]] Twist velocity_at(double t) const { return interval_twist(bracket(t)); }

  [[nodiscard]] Pose interpolate(double tq) const {
    const std::size_t j = bracket(tq);
    if (tq == samples_[j + 1].t) return samples_[j + 1].pose;
    return interpolate_in(j, tq);
  }

  /// Derivatives of interpolate(t - t_d) with respect to t_d.
  [[nodiscard]] TimeJacobian time_jacobian(double t, double t_d) const {
    const double tq = t - t_d;
    const std::size_t j = bracket(tq);
    const Twist tw = interval_twist(j);
    const Rotation r = interpolate_in(j, tq).rotation;
    TimeJacobian jac;
    jac.d_rotation = -r * skew(tw.omega);
    // Exp(w s) leaves w fixed, so R(s) w == R_j w.
    jac.rotation_tangent = -(samples_[j].pose.rotation * tw.omega);
    jac.d_translation = -tw.vel;
    return jac;
  }

  /// Pose and twist of the interval containing tq, in one lookup.
  struct Sample {
    Pose pose;
    Twist twist;
    std::size_t interval = 0;
  };

  [[nodiscard]] Sample sample(double tq) const {
    const std::size_t j = bracket(tq);
    Sample s;
    s.interval = j;
    s.twist = interval_twist(j);
    s.pose = tq == samples_[j + 1].t ? samples_[j + 1].pose : interpolate_in(j, tq);
    return s;
  }

 private:
  [[nodiscard]] Twist interval_twist(std::size_t j) const {
    const TimedPose& a = samples_[j];
    const TimedPose& b = samples_[j + 1];
    const double dt = b.t - a.t;
    return {rot_log(a.pose.rotation.transpose() * b.pose.rotation) / dt,
            (b.pose.translation - a.pose.translation) / dt};
  }

  [[nodiscard]] Pose interpolate_in(std::size_t j, double tq) const {
    const TimedPose& a = samples_[j];
    const double s = tq - a.t;
    if (s == 0.0) return a.pose;
    const Twist tw = interval_twist(j);
    return {a.pose.rotation * rot_exp(tw.omega * s), a.pose.translation + tw.vel * s};
  }

  std::vector<TimedPose> samples_;
};

}  // namespace lvscalib

#endif  // LVSCALIB_TRAJECTORY_HPP
