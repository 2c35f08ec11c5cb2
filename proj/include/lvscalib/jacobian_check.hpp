// lvscalib - spatiotemporal calibration of a line laser sensor on a robot arm
//
// Analytic-versus-numeric Jacobian comparison on randomized states. The
// numeric side perturbs each tangent coordinate through retract() with
// central differences, so it shares no code with the analytic columns.

#ifndef LVSCALIB_JACOBIAN_CHECK_HPP
#define LVSCALIB_JACOBIAN_CHECK_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string_view>

#include "lvscalib/residual.hpp"
#include "lvscalib/solver.hpp"
#include "lvscalib/synth.hpp"
#include "lvscalib/trajectory.hpp"

namespace lvscalib {

struct JacobianBlock {
  std::string_view name;
  int col;
  int width;
};

inline constexpr std::array<JacobianBlock, 4> kJacobianBlocks{{
    {"t_d", kTimeCol, 1},
    {"phi", kLineCol, 4},
    {"P", kTransCol, 3},
    {"R", kRotCol, 3},
}};

inline constexpr double kJacobianTolerance = 1e-5;
inline constexpr double kTimeStep = 1e-6;      // s
inline constexpr double kManifoldStep = 1e-6;  // rad, mm
inline constexpr double kBoundaryGuard = 1e-4; // s

/// Central differences of the residual under retract(), one column per
/// tangent coordinate.
[[nodiscard]] inline ResidualJacobian numeric_jacobian(const CalibrationState& state,
                                                       const PoseBuffer& buf,
                                                       const FeatureObservation& obs) {
  ResidualJacobian jac;
  for (int k = 0; k < kStateDim; ++k) {
    const double h = k == kTimeCol ? kTimeStep : kManifoldStep;
    StateVector d = StateVector::Zero();
    d(k) = h;
    const Vec3 plus = evaluate(retract(state, d), buf, obs).r;
    const Vec3 minus = evaluate(retract(state, -d), buf, obs).r;
    jac.col(k) = (plus - minus) / (2.0 * h);
  }
  return jac;
}

/// Frobenius relative error of one block; falls back to the absolute error
/// when the reference block is numerically zero.
[[nodiscard]] inline double block_error(const ResidualJacobian& analytic,
                                        const ResidualJacobian& numeric, const JacobianBlock& b) {
  const auto a = analytic.middleCols(b.col, b.width);
  const auto n = numeric.middleCols(b.col, b.width);
  const double scale = n.norm();
  const double diff = (a - n).norm();
  return scale > 1e-9 ? diff / scale : diff;
}

struct JacobianCheckResult {
  std::array<double, 4> max_error{};  // per kJacobianBlocks entry
  int trials = 0;

  [[nodiscard]] bool passed() const {
    return std::all_of(max_error.begin(), max_error.end(),
                       [](double e) { return e < kJacobianTolerance; });
  }
};

using ResidualEvaluator =
    std::function<ResidualBlock(const CalibrationState&, const PoseBuffer&, const FeatureObservation&)>;

/// Random states around the default S-path scenario, random camera points
/// and query times kept at least 1e-4 s away from any pose sample.
[[nodiscard]] inline JacobianCheckResult run_jacobian_check(int trials, std::uint64_t seed,
                                                            const ResidualEvaluator& analytic = evaluate) {
  ScenarioConfig cfg;
  cfg.duration = 4.0;
  Dataset data = synthesize(cfg).to_dataset();
  const PoseBuffer& buf = data.poses;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const auto rand_vec = [&](double scale) { return Vec3(unit(rng), unit(rng), unit(rng)) * scale; };

  JacobianCheckResult result;
  while (result.trials < trials) {
    CalibrationState s;
    s.t_d = 0.05 * unit(rng);
    s.line.omega = rand_vec(1.0);
    s.line.m = 800.0 + 700.0 * unit(rng);
    s.he_rot = rot_exp(rand_vec(1.0));
    s.he_trans = rand_vec(200.0);

    FeatureObservation obs;
    obs.t = buf.first_time() + 0.5 + (buf.last_time() - buf.first_time() - 1.0) * 0.5 * (1.0 + unit(rng));
    obs.p_cam = Vec3(60.0 * unit(rng), 5.0 * unit(rng), 250.0 + 80.0 * unit(rng));

    const double tq = obs.t - s.t_d;
    const std::size_t j = buf.bracket(tq);
    if (std::min(tq - buf[j].t, buf[j + 1].t - tq) < kBoundaryGuard) continue;

    const ResidualJacobian a = analytic(s, buf, obs).jacobian;
    const ResidualJacobian n = numeric_jacobian(s, buf, obs);
    for (std::size_t b = 0; b < kJacobianBlocks.size(); ++b) {
      result.max_error[b] = std::max(result.max_error[b], block_error(a, n, kJacobianBlocks[b]));
    }
    ++result.trials;
  }
  return result;
}

}  // namespace lvscalib

#endif  // LVSCALIB_JACOBIAN_CHECK_HPP
