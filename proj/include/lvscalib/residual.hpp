// lvscalib - spatiotemporal calibration of a line laser sensor on a robot arm
//
// Measurement model: a camera-frame feature observed at time t is mapped
// through the hand-eye transform and the end-effector pose interpolated at
// t - t_d into the base frame, then compared against the weld line.

#ifndef LVSCALIB_RESIDUAL_HPP
#define LVSCALIB_RESIDUAL_HPP

#include <Eigen/Core>

#include "lvscalib/liegeo.hpp"
#include "lvscalib/trajectory.hpp"

namespace lvscalib {

struct FeatureObservation {
  double t = 0.0;               // s, camera receipt time
  Vec3 p_cam = Vec3::Zero();    // mm, camera frame
};

/// Estimated quantities. t_d > 0 means the camera stream lags the robot.
struct CalibrationState {
  double t_d = 0.0;  // s
  OrthonormalLine line;
  Rotation he_rot = Rotation::Identity();  // camera -> end-effector
  Vec3 he_trans = Vec3::Zero();            // mm, camera origin in end-effector frame

  [[nodiscard]] Pose hand_eye() const { return {he_rot, he_trans}; }
};

// Tangent layout [t_d | dω dm | dP | dθ].
inline constexpr int kStateDim = 11;
inline constexpr int kTimeCol = 0;
inline constexpr int kLineCol = 1;
inline constexpr int kTransCol = 5;
inline constexpr int kRotCol = 8;

using StateVector = Eigen::Matrix<double, kStateDim, 1>;
using ResidualJacobian = Eigen::Matrix<double, 3, kStateDim>;

struct ResidualBlock {
  Vec3 r = Vec3::Zero();  // mm
  ResidualJacobian jacobian = ResidualJacobian::Zero();
};

[[nodiscard]] inline Vec3 map_feature_to_base(const CalibrationState& state,
                                              const PoseBuffer& buf,
                                              const FeatureObservation& obs) {
  const Pose robot = buf.interpolate(obs.t - state.t_d);
  return robot.apply(state.he_rot * obs.p_cam + state.he_trans);
}

/// The two contributions to d(base point)/dt_d: attitude change and
/// end-effector translation.
struct TimeOffsetTerms {
  Vec3 rotational = Vec3::Zero();
  Vec3 translational = Vec3::Zero();
};

[[nodiscard]] inline TimeOffsetTerms time_offset_terms(const PoseBuffer::Sample& s,
                                                       const Vec3& point_in_ee) {
  const Rotation& r = s.pose.rotation;
  TimeOffsetTerms terms;
  // Perturbing t_d by h left-multiplies the attitude by Exp(-h R w).
  terms.rotational = skew(r * point_in_ee) * (r * s.twist.omega);
  terms.translational = -s.twist.vel;
  return terms;
}

/// Point-to-line residual and its Jacobian under the retraction
/// U <- Exp(dω) U, m <- m + dm, t_d <- t_d + dt, P <- P + dP,
/// R <- Exp(dθ) R.
[[nodiscard]] inline ResidualBlock evaluate(const CalibrationState& state,
                                            const PoseBuffer& buf,
                                            const FeatureObservation& obs) {
  const PoseBuffer::Sample s = buf.sample(obs.t - state.t_d);
  const Rotation& r_robot = s.pose.rotation;

  const Vec3 rotated_feature = state.he_rot * obs.p_cam;
  const Vec3 point_in_ee = rotated_feature + state.he_trans;
  const Vec3 p_base = r_robot * point_in_ee + s.pose.translation;

  const Rotation u = rot_exp(state.line.omega);
  const Vec3 u1 = u.col(0);
  const Vec3 u2 = u.col(1);
  const double m = state.line.m;

  ResidualBlock block;
  block.r = p_base.cross(u1) - m * u2;

  const Mat3 d_r_d_point = -skew(u1);
  const TimeOffsetTerms td = time_offset_terms(s, point_in_ee);

  auto& jac = block.jacobian;
  jac.col(kTimeCol) = d_r_d_point * (td.rotational + td.translational);
  jac.block<3, 3>(0, kLineCol) = m * skew(u2) - skew(p_base) * skew(u1);
  jac.col(kLineCol + 3) = -u2;
  jac.block<3, 3>(0, kTransCol) = d_r_d_point * r_robot;
  jac.block<3, 3>(0, kRotCol) = skew(u1) * r_robot * skew(rotated_feature);
  return block;
}

}  // namespace lvscalib

#endif  // LVSCALIB_RESIDUAL_HPP
