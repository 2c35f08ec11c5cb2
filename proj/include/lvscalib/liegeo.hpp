// lvscalib - spatiotemporal calibration of a line laser sensor on a robot arm
//
// SO(3) algebra plus the Pluecker and orthonormal (minimal) line
// representations. Positions are millimeters, rotation vectors radians.

#ifndef LVSCALIB_LIEGEO_HPP
#define LVSCALIB_LIEGEO_HPP

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lvscalib/errors.hpp"

namespace lvscalib {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Member of SO(3), stored as a 3x3 matrix.
using Rotation = Eigen::Matrix3d;

struct Pose {
  Rotation rotation = Rotation::Identity();
  Vec3 translation = Vec3::Zero();  // mm

  [[nodiscard]] Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  [[nodiscard]] Pose compose(const Pose& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }

  [[nodiscard]] Pose inverse() const {
    const Rotation rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }
};

/// Line as unit direction v and moment n = p0 x v.
struct PluckerLine {
  Vec3 v = Vec3::UnitX();
  Vec3 n = Vec3::Zero();  // mm

  /// Point of the line closest to the origin.
  [[nodiscard]] Vec3 closest_point() const { return v.cross(n); }
};

/// Minimal 4-DOF line: U = Exp(omega) in SO(3) and m = |n|.
struct OrthonormalLine {
  Vec3 omega = Vec3::Zero();
  double m = 0.0;  // mm
};

// ---------------------------------------------------------------------------
// SO(3)
// ---------------------------------------------------------------------------

/// skew(v) * b == v.cross(b)
template <typename Derived>
[[nodiscard]] Eigen::Matrix<typename Derived::Scalar, 3, 3> skew(
    const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, 3, 3> s;
  // clang-format off
  s << Scalar(0), -v(2),      v(1),
       v(2),      Scalar(0), -v(0),
      -v(1),      v(0),      Scalar(0);
  // clang-format on
  return s;
}

template <typename Derived>
[[nodiscard]] Eigen::Matrix<typename Derived::Scalar, 3, 1> vee(
    const Eigen::MatrixBase<Derived>& s) {
  return {s(2, 1), s(0, 2), s(1, 0)};
}

/// Rodrigues formula, second-order Taylor expansion below 1e-8 rad.
template <typename Derived>
[[nodiscard]] Eigen::Matrix<typename Derived::Scalar, 3, 3> rot_exp(
    const Eigen::MatrixBase<Derived>& omega) {
  using Scalar = typename Derived::Scalar;
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  const Scalar theta2 = omega.squaredNorm();
  const Scalar theta = std::sqrt(theta2);
  const Matrix3 w = skew(omega);
  if (theta < Scalar(1e-8)) {
    return Matrix3::Identity() + w + Scalar(0.5) * w * w;
  }
  const Scalar a = std::sin(theta) / theta;
  const Scalar b = (Scalar(1) - std::cos(theta)) / theta2;
  return Matrix3::Identity() + a * w + b * w * w;
}

namespace detail {

// First nonzero component positive; picks one representative of the
// antipodal pair that maps to the same half-turn.
inline Vec3 canonical_axis(Vec3 a) {
  for (int i = 0; i < 3; ++i) {
    if (a(i) > 0.0) return a;
    if (a(i) < 0.0) return -a;
  }
  return a;
}

}  // namespace detail

/// Rotation vector with |result| <= pi. Half-turns return the canonical axis.
[[nodiscard]] inline Vec3 rot_log(const Rotation& r) {
  const double cos_theta = std::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
  const Vec3 w = 0.5 * vee(r - r.transpose());  // sin(theta) * axis
  const double sin_theta = w.norm();
  const double theta = std::atan2(sin_theta, cos_theta);

  if (theta < 1e-8) {
    return w * (1.0 + theta * theta / 6.0);
  }
  if (cos_theta > -0.99) {
    return w * (theta / sin_theta);
  }

  // Near pi the skew part vanishes; recover the axis from the symmetric part.
  const Mat3 b = 0.5 * (r + r.transpose()) - cos_theta * Mat3::Identity();
  Eigen::Index k = 0;
  b.diagonal().maxCoeff(&k);
  Vec3 axis = b.col(k) / std::sqrt(std::max(b(k, k), 1e-300));
  axis.normalize();
  if (axis.dot(w) < 0.0) axis = -axis;
  if (std::numbers::pi - theta < 1e-12) axis = detail::canonical_axis(axis);
  return theta * axis;
}

/// Nearest rotation matrix in the Frobenius sense.
[[nodiscard]] inline Rotation orthonormalize(const Rotation& r) {
  return Eigen::Quaterniond(r).normalized().toRotationMatrix();
}

/// Angle of r_a^T r_b in radians.
[[nodiscard]] inline double rotation_distance(const Rotation& r_a, const Rotation& r_b) {
  return rot_log(r_a.transpose() * r_b).norm();
}

// ---------------------------------------------------------------------------
// Lines
// ---------------------------------------------------------------------------

[[nodiscard]] inline PluckerLine line_from_point_dir(const Vec3& p0, const Vec3& d) {
  const double len = d.norm();
  if (!(len > 1e-12)) {
    throw Error(ErrorKind::ZeroDirection, "line direction has norm <= 1e-12");
  }
  PluckerLine l;
  l.v = d / len;
  l.n = p0.cross(l.v);
  return l;
}

namespace detail {

// Unit vector orthogonal to v, Gram-Schmidt against the coordinate axis of
// v's smallest-magnitude component.
inline Vec3 completion_axis(const Vec3& v) {
  Eigen::Index k = 0;
  v.cwiseAbs().minCoeff(&k);
  const Vec3 e = Vec3::Unit(k);
  return (e - e.dot(v) * v).normalized();
}

}  // namespace detail

/// Frame U = [v, n/|n|, v x n/|n|] and m = |n|.
[[nodiscard]] inline Rotation line_frame(const PluckerLine& l) {
  const Vec3 v = l.v.normalized();
  const Vec3 n_perp = l.n - l.n.dot(v) * v;
  const double m = n_perp.norm();
  const Vec3 u2 = m < 1e-9 ? detail::completion_axis(v) : Vec3(n_perp / m);
  Rotation u;
  u.col(0) = v;
  u.col(1) = u2;
  u.col(2) = v.cross(u2);
  return u;
}

[[nodiscard]] inline OrthonormalLine to_orthonormal(const PluckerLine& l) {
  return {rot_log(line_frame(l)), l.n.norm()};
}

[[nodiscard]] inline PluckerLine from_orthonormal(const OrthonormalLine& phi) {
  const Rotation u = rot_exp(phi.omega);
  return {u.col(0), phi.m * u.col(1)};
}

/// p x v - n; its norm is the distance from p to the line.
[[nodiscard]] inline Vec3 point_line_error(const Vec3& p, const PluckerLine& l) {
  return p.cross(l.v) - l.n;
}

/// Angle between two undirected lines' directions, radians.
[[nodiscard]] inline double line_angle(const PluckerLine& a, const PluckerLine& b) {
  return std::acos(std::clamp(std::abs(a.v.dot(b.v)), 0.0, 1.0));
}

}  // namespace lvscalib

#endif  // LVSCALIB_LIEGEO_HPP
