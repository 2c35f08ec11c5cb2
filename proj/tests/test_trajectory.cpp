#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lvscalib/trajectory.hpp"
#include "oracles.hpp"

namespace lvscalib {
namespace {

using testing::Rng;
constexpr double kPi = std::numbers::pi;

PoseBuffer two_samples(const Pose& a, const Pose& b, double dt) {
  PoseBuffer buf;
  buf.insert({0.0, a});
  buf.insert({dt, b});
  return buf;
}

// Random buffer: each interval has its own random twist.
PoseBuffer random_buffer(Rng& rng, int n) {
  PoseBuffer buf;
  Pose pose{rot_exp(rng.rotvec(kPi)), rng.vec(500.0)};
  double t = rng.uniform(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    buf.insert({t, pose});
    const double dt = rng.uniform(0.002, 0.006);
    pose.rotation = pose.rotation * rot_exp(rng.vec(2.0) * dt);
    pose.translation += rng.vec(200.0) * dt;
    t += dt;
  }
  return buf;
}

TEST(PoseBufferInsert, GrowsInOrder) {
  PoseBuffer buf;
  buf.insert({0.0, Pose{}});
  EXPECT_EQ(buf.size(), 1u);
  buf.insert({0.004, Pose{}});
  EXPECT_EQ(buf.size(), 2u);
  EXPECT_LT(buf[0].t, buf[1].t);
}

TEST(PoseBufferInsert, RejectsOutOfOrderAndDuplicate) {
  PoseBuffer buf;
  buf.insert({0.004, Pose{}});
  for (double t : {0.0, 0.004}) {
    try {
      buf.insert({t, Pose{}});
      FAIL() << "expected NonMonotonicTimestamp for t=" << t;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::NonMonotonicTimestamp);
    }
  }
  EXPECT_EQ(buf.size(), 1u);
}

TEST(VelocityAt, IdenticalPosesGiveZeroTwist) {
  const Pose p{rot_exp(Vec3(0.1, 0.2, 0.3)), Vec3(1, 2, 3)};
  const Twist tw = two_samples(p, p, 0.004).velocity_at(0.001);
  EXPECT_EQ(tw.omega, Vec3::Zero());
  EXPECT_EQ(tw.vel, Vec3::Zero());
}

TEST(VelocityAt, PureTranslation) {
  const Twist tw = two_samples(Pose{}, Pose{Mat3::Identity(), Vec3(10, 0, 0)}, 0.1).velocity_at(0.05);
  EXPECT_LT((tw.vel - Vec3(100, 0, 0)).norm(), 1e-12);
  EXPECT_EQ(tw.omega, Vec3::Zero());
}

TEST(VelocityAt, QuarterTurnOverOneSecond) {
  const Twist tw =
      two_samples(Pose{}, Pose{rot_exp(Vec3(0, 0, kPi / 2)), Vec3::Zero()}, 1.0).velocity_at(0.5);
  EXPECT_LT((tw.omega - Vec3(0, 0, kPi / 2)).norm(), 1e-12);
}

TEST(VelocityAt, OutsideSpanIsOutOfRange) {
  const PoseBuffer buf = two_samples(Pose{}, Pose{}, 1.0);
  for (double t : {-1e-9, 1.0 + 1e-9}) {
    try {
      (void)buf.velocity_at(t);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::OutOfRange);
    }
  }
  PoseBuffer single;
  single.insert({0.0, Pose{}});
  EXPECT_THROW((void)single.interpolate(0.0), Error);
}

TEST(Interpolate, SampleTimesReturnStoredPoseExactly) {
  Rng rng(21);
  const PoseBuffer buf = random_buffer(rng, 30);
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const Pose p = buf.interpolate(buf[i].t);
    EXPECT_EQ(p.rotation, buf[i].pose.rotation) << i;
    EXPECT_EQ(p.translation, buf[i].pose.translation) << i;
  }
}

TEST(Interpolate, MidpointOfTranslationIsMean) {
  const Vec3 a(1, 2, 3);
  const Vec3 b(11, -4, 7);
  const Pose p = two_samples({Mat3::Identity(), a}, {Mat3::Identity(), b}, 0.2).interpolate(0.1);
  EXPECT_LT((p.translation - 0.5 * (a + b)).norm(), 1e-12);
}

TEST(Interpolate, MidpointOfRotationIsHalfAngle) {
  const Vec3 axis = Vec3(1, 1, 0).normalized();
  const PoseBuffer buf = two_samples(Pose{}, Pose{rot_exp(axis * kPi / 2), Vec3::Zero()}, 1.0);
  const Mat3 half = Eigen::AngleAxisd(kPi / 4, axis).toRotationMatrix();
  EXPECT_LT((buf.interpolate(0.5).rotation - half).norm(), 1e-9);
}

TEST(Interpolate, StaysOnSO3) {
  Rng rng(22);
  const PoseBuffer buf = random_buffer(rng, 50);
  for (int i = 0; i < 100; ++i) {
    const double t = rng.uniform(buf.first_time(), buf.last_time());
    EXPECT_LT(testing::orthonormality_defect(buf.interpolate(t).rotation), 1e-9);
  }
}

TEST(Interpolate, ReproducesConstantTwistMotion) {
  // Exact motion R(t) = R0 Exp(w t), P(t) = P0 + v t sampled at 250 Hz.
  const Mat3 r0 = rot_exp(Vec3(0.3, -0.2, 1.0));
  const Vec3 p0(100, 50, -20);
  const Vec3 w(0.4, -0.7, 0.2);
  const Vec3 v(30, -10, 5);
  PoseBuffer buf;
  for (int k = 0; k <= 250; ++k) {
    const double t = k / 250.0;
    buf.insert({t, {r0 * rot_exp(w * t), p0 + v * t}});
  }
  Rng rng(23);
  for (int i = 0; i < 100; ++i) {
    const double t = rng.uniform(0.0, 1.0);
    const Pose p = buf.interpolate(t);
    EXPECT_LT((p.rotation - r0 * rot_exp(w * t)).norm(), 1e-9);
    EXPECT_LT((p.translation - (p0 + v * t)).norm(), 1e-9);
  }
}

TEST(TimeJacobian, StationaryRobotIsZero) {
  const Pose p{rot_exp(Vec3(0.1, 0.2, 0.3)), Vec3(1, 2, 3)};
  const TimeJacobian j = two_samples(p, p, 0.004).time_jacobian(0.003, 0.001);
  EXPECT_EQ(j.d_rotation, Mat3::Zero());
  EXPECT_EQ(j.rotation_tangent, Vec3::Zero());
  EXPECT_EQ(j.d_translation, Vec3::Zero());
}

TEST(TimeJacobian, PureTranslation) {
  const PoseBuffer buf = two_samples(Pose{}, Pose{Mat3::Identity(), Vec3(10, 0, 0)}, 0.1);
  const TimeJacobian j = buf.time_jacobian(0.06, 0.01);
  EXPECT_LT((j.d_translation - Vec3(-100, 0, 0)).norm(), 1e-12);
}

TEST(TimeJacobian, MatchesCentralDifferences) {
  Rng rng(24);
  const double h = 1e-6;
  int checked = 0;
  while (checked < 200) {
    const PoseBuffer buf = random_buffer(rng, 20);
    const double t_d = rng.uniform(-0.01, 0.01);
    const double t = rng.uniform(buf.first_time() + 0.012, buf.last_time() - 0.012);
    const std::size_t j = buf.bracket(t - t_d);
    if (std::min(t - t_d - buf[j].t, buf[j + 1].t - (t - t_d)) < 1e-4) continue;

    const TimeJacobian jac = buf.time_jacobian(t, t_d);
    const Mat3 fd_rot = testing::central_difference(
        [&](double dh) -> Mat3 { return buf.interpolate(t - (t_d + dh)).rotation; }, h);
    const Vec3 fd_pos = testing::central_difference(
        [&](double dh) -> Vec3 { return buf.interpolate(t - (t_d + dh)).translation; }, h);
    // Left tangent: R(t_d + h) R(t_d)^T ~ Exp(h * tangent).
    const Mat3 r = buf.interpolate(t - t_d).rotation;
    const Vec3 fd_tangent = testing::central_difference(
        [&](double dh) -> Vec3 { return rot_log(buf.interpolate(t - (t_d + dh)).rotation * r.transpose()); },
        h);

    EXPECT_LE((jac.d_rotation - fd_rot).norm(), 1e-5 * std::max(fd_rot.norm(), 1e-3));
    EXPECT_LE((jac.d_translation - fd_pos).norm(), 1e-5 * std::max(fd_pos.norm(), 1e-3));
    EXPECT_LE((jac.rotation_tangent - fd_tangent).norm(), 1e-5 * std::max(fd_tangent.norm(), 1e-3));
    ++checked;
  }
}

}  // namespace
}  // namespace lvscalib
