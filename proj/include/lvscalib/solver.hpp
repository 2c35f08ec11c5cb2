// lvscalib - spatiotemporal calibration of a line laser sensor on a robot arm
//
// Robust Levenberg-Marquardt over t_d x line x hand-eye. Each iteration
// reweights the point-to-line residuals with Huber IRLS weights, solves the
// damped normal equations and retracts the step onto the manifold.

#ifndef LVSCALIB_SOLVER_HPP
#define LVSCALIB_SOLVER_HPP

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/SVD>

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "lvscalib/errors.hpp"
#include "lvscalib/liegeo.hpp"
#include "lvscalib/parallel.hpp"
#include "lvscalib/residual.hpp"
#include "lvscalib/trajectory.hpp"

namespace lvscalib {

struct Dataset {
  PoseBuffer poses;
  std::vector<FeatureObservation> features;  // sorted by t
};

struct SolverOptions {
  double huber_delta = 1.0;  // mm
  double mu0 = 1e-4;
  double mu_up = 10.0;
  double mu_down = 0.1;
  double eps = 1e-8;
  int max_iters = 100;
  double td_window = 0.2;  // s

  void validate() const {
    const bool ok = huber_delta > 0.0 && mu0 > 0.0 && mu_up > 1.0 && mu_down > 0.0 &&
                    mu_down < 1.0 && eps > 0.0 && max_iters > 0 && td_window > 0.0;
    if (!ok) throw Error(ErrorKind::InvalidArgument, "invalid solver options");
  }
};

inline constexpr double kSingularCondition = 1e14;
inline constexpr double kConditionWarning = 1e10;
inline constexpr double kMaxDamping = 1e12;
inline constexpr std::size_t kMinResidualRows = kStateDim;

struct IterationRecord {
  int iter = 0;
  double rmse = 0.0;  // mm
  double t_d = 0.0;   // s
  double cost = 0.0;
  double mu = 0.0;
  bool accepted = false;
};

enum class StopReason { StepTolerance, DampingLimit, MaxIterations };

struct CalibrationReport {
  CalibrationState state;
  PluckerLine line;
  std::vector<IterationRecord> iterations;
  double rmse = 0.0;  // mm
  double mae = 0.0;   // mm
  bool converged = false;
  StopReason stop_reason = StopReason::MaxIterations;
  std::size_t dropped_observations = 0;
  bool condition_warning = false;
  double condition = 0.0;  // scaled, undamped normal matrix at the final state
};

/// IRLS weight of the Huber loss on the residual norm.
[[nodiscard]] inline double huber_weight(double rnorm, double delta) {
  return rnorm <= delta ? 1.0 : delta / rnorm;
}

/// Huber loss on the residual norm, quadratic inside the knee.
[[nodiscard]] inline double huber_cost(double rnorm, double delta) {
  return rnorm <= delta ? rnorm * rnorm : 2.0 * delta * rnorm - delta * delta;
}

// ---------------------------------------------------------------------------
// Manifold update
// ---------------------------------------------------------------------------

[[nodiscard]] inline CalibrationState retract(const CalibrationState& state,
                                              const StateVector& delta,
                                              double td_window = std::numeric_limits<double>::infinity()) {
  CalibrationState out = state;
  out.t_d = std::clamp(state.t_d + delta(kTimeCol), -td_window, td_window);

  Rotation u = orthonormalize(rot_exp(delta.segment<3>(kLineCol)) * rot_exp(state.line.omega));
  double m = state.line.m + delta(kLineCol + 3);
  if (m < 0.0) {
    // (−m, u2) and (m, −u2) give the same moment.
    m = -m;
    u.col(1) = -u.col(1);
    u.col(2) = -u.col(2);
  }
  out.line = {rot_log(u), m};

  out.he_trans = state.he_trans + delta.segment<3>(kTransCol);
  out.he_rot = orthonormalize(rot_exp(delta.segment<3>(kRotCol)) * state.he_rot);
  return out;
}

// ---------------------------------------------------------------------------
// Linearization
// ---------------------------------------------------------------------------

using NormalMatrix = Eigen::Matrix<double, kStateDim, kStateDim>;

struct Linearization {
  NormalMatrix hessian = NormalMatrix::Zero();  // sum w J^T J
  StateVector gradient = StateVector::Zero();   // sum w J^T r
  double cost = 0.0;                            // sum of Huber losses
  double weighted_sq = 0.0;                     // sum w |r|^2
  double sum_sq = 0.0;
  double sum_abs = 0.0;
  std::size_t retained = 0;
  std::size_t dropped = 0;

  [[nodiscard]] std::size_t rows() const { return 3 * retained; }
  [[nodiscard]] double rmse() const { return retained ? std::sqrt(sum_sq / retained) : 0.0; }
  [[nodiscard]] double mae() const { return retained ? sum_abs / retained : 0.0; }
};

/// Residual blocks for every feature whose t - t_d lies inside the pose
/// buffer; out-of-span features are left empty.
[[nodiscard]] inline std::vector<std::optional<ResidualBlock>> evaluate_all(
    const CalibrationState& state, const Dataset& data) {
  std::vector<std::optional<ResidualBlock>> blocks(data.features.size());
  parallel_for(data.features.size(), [&](std::size_t i) {
    const FeatureObservation& obs = data.features[i];
    if (data.poses.contains(obs.t - state.t_d)) blocks[i] = evaluate(state, data.poses, obs);
  });
  return blocks;
}

[[nodiscard]] inline Linearization linearize(const CalibrationState& state, const Dataset& data,
                                             double huber_delta) {
  const auto blocks = evaluate_all(state, data);
  Linearization lin;
  for (const auto& block : blocks) {
    if (!block) {
      ++lin.dropped;
      continue;
    }
    const double rnorm = block->r.norm();
    const double w = huber_weight(rnorm, huber_delta);
    lin.hessian.noalias() += w * block->jacobian.transpose() * block->jacobian;
    lin.gradient.noalias() += w * block->jacobian.transpose() * block->r;
    lin.cost += huber_cost(rnorm, huber_delta);
    lin.weighted_sq += w * rnorm * rnorm;
    lin.sum_sq += rnorm * rnorm;
    lin.sum_abs += rnorm;
    ++lin.retained;
  }
  return lin;
}

/// Ratio of extreme pivot magnitudes of the LDLT factorization.
[[nodiscard]] inline double pivot_condition(const NormalMatrix& a) {
  if (!a.allFinite()) return std::numeric_limits<double>::infinity();
  const Eigen::LDLT<NormalMatrix> ldlt(a);
  const auto d = ldlt.vectorD().cwiseAbs();
  const double lo = d.minCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return d.maxCoeff() / lo;
}

/// Pivot condition after symmetric Jacobi scaling, which removes the unit
/// mismatch between seconds, millimeters and radians. A parameter whose
/// diagonal is negligible against the largest one counts as unobservable.
[[nodiscard]] inline double scaled_condition(const NormalMatrix& h) {
  const auto diag = h.diagonal();
  const double top = diag.maxCoeff();
  if (!(top > 0.0) || !(diag.minCoeff() > 1e-20 * top)) {
    return std::numeric_limits<double>::infinity();
  }
  const StateVector s = diag.cwiseSqrt().cwiseInverse();
  return pivot_condition(s.asDiagonal() * h * s.asDiagonal());
}

/// Step of a damped Gauss-Newton system (H + mu I) delta = -g.
template <int N>
struct DampedSolution {
  Eigen::Matrix<double, N, 1> delta;
  double condition = 0.0;  // pivot condition of H + mu I
};

template <int N>
[[nodiscard]] DampedSolution<N> solve_normal_equations(const Eigen::Matrix<double, N, N>& h,
                                                       const Eigen::Matrix<double, N, 1>& g,
                                                       double mu) {
  using Matrix = Eigen::Matrix<double, N, N>;
  const Matrix damped = h + mu * Matrix::Identity(h.rows(), h.cols());
  DampedSolution<N> out;
  if (!damped.allFinite() || !g.allFinite()) {
    throw Error(ErrorKind::SingularSystem, "non-finite normal equations");
  }
  const Eigen::LDLT<Matrix> ldlt(damped);
  const auto d = ldlt.vectorD().cwiseAbs();
  const double lo = d.minCoeff();
  out.condition = lo > 0.0 ? d.maxCoeff() / lo : std::numeric_limits<double>::infinity();
  if (!(out.condition <= kSingularCondition)) {
    std::ostringstream os;
    os << "damped normal matrix condition " << out.condition << " at mu=" << mu;
    throw Error(ErrorKind::SingularSystem, os.str());
  }
  out.delta = ldlt.solve(-g);
  return out;
}

struct LmStep {
  StateVector delta = StateVector::Zero();
  double predicted_cost = 0.0;  // weighted quadratic model at the step
  double condition = 0.0;       // pivot condition of the damped system
};

[[nodiscard]] inline LmStep solve_damped(const Linearization& lin, double mu) {
  if (lin.rows() < kMinResidualRows) {
    throw Error(ErrorKind::InsufficientData, "fewer than 11 residual rows");
  }
  const auto sol = solve_normal_equations<kStateDim>(lin.hessian, lin.gradient, mu);
  LmStep step;
  step.delta = sol.delta;
  step.condition = sol.condition;
  // sum w |r + J d|^2 with the weights frozen at the linearization point
  step.predicted_cost = lin.weighted_sq + 2.0 * lin.gradient.dot(step.delta) +
                        step.delta.dot(lin.hessian * step.delta);
  return step;
}

[[nodiscard]] inline LmStep lm_step(const CalibrationState& state, const Dataset& data, double mu,
                                    const SolverOptions& opts = {}) {
  return solve_damped(linearize(state, data, opts.huber_delta), mu);
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

/// Line through the centroid of the base-frame features (t_d = 0) along
/// their principal scatter direction.
[[nodiscard]] inline OrthonormalLine init_line(const std::vector<FeatureObservation>& features,
                                               const PoseBuffer& buf, const Rotation& he_rot,
                                               const Vec3& he_trans) {
  CalibrationState probe;
  probe.he_rot = he_rot;
  probe.he_trans = he_trans;
  std::vector<Vec3> points;
  points.reserve(features.size());
  for (const auto& obs : features) {
    if (buf.contains(obs.t)) points.push_back(map_feature_to_base(probe, buf, obs));
  }
  if (points.size() < 2) {
    throw Error(ErrorKind::InsufficientData, "need at least 2 features inside the pose span");
  }

  Vec3 centroid = Vec3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());

  Eigen::MatrixX3d centered(static_cast<Eigen::Index>(points.size()), 3);
  for (std::size_t i = 0; i < points.size(); ++i) {
    centered.row(static_cast<Eigen::Index>(i)) = (points[i] - centroid).transpose();
  }
  const Eigen::JacobiSVD<Eigen::MatrixX3d> svd(centered, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || (sv(1) > 0.0 && sv(0) / sv(1) < 1.01)) {
    throw Error(ErrorKind::DegenerateCloud, "principal scatter direction is not unique");
  }
  const Vec3 dir = detail::canonical_axis(svd.matrixV().col(0));
  return to_orthonormal(line_from_point_dir(centroid, dir));
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

[[nodiscard]] inline CalibrationReport calibrate(const Dataset& data,
                                                 const CalibrationState& init,
                                                 const SolverOptions& opts = {}) {
  opts.validate();
  if (data.features.empty() || data.poses.size() < 2) {
    throw Error(ErrorKind::InsufficientData, "dataset is empty");
  }

  CalibrationReport report;
  CalibrationState state = init;
  state.t_d = std::clamp(state.t_d, -opts.td_window, opts.td_window);
  Linearization lin = linearize(state, data, opts.huber_delta);
  if (lin.rows() < kMinResidualRows) {
    std::ostringstream os;
    os << lin.rows() << " residual rows after dropping " << lin.dropped
       << " out-of-span observations";
    throw Error(ErrorKind::InsufficientData, os.str());
  }

  double mu = opts.mu0;
  int iter = 0;
  report.iterations.push_back({iter, lin.rmse(), state.t_d, lin.cost, mu, true});

  while (iter < opts.max_iters) {
    std::optional<LmStep> step;
    while (!step) {
      try {
        step = solve_damped(lin, mu);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::SingularSystem) throw;
        mu *= opts.mu_up;
        if (mu > kMaxDamping) throw;
      }
    }
    if (step->delta.norm() < opts.eps) {
      report.stop_reason = StopReason::StepTolerance;
      break;
    }

    ++iter;
    const CalibrationState candidate = retract(state, step->delta, opts.td_window);
    Linearization cand = linearize(candidate, data, opts.huber_delta);
    if (cand.rows() >= kMinResidualRows && cand.cost < lin.cost) {
      state = candidate;
      lin = std::move(cand);
      mu = std::max(mu * opts.mu_down, 1e-15);
      report.iterations.push_back({iter, lin.rmse(), state.t_d, lin.cost, mu, true});
    } else {
      mu *= opts.mu_up;
      report.iterations.push_back({iter, cand.rmse(), candidate.t_d, cand.cost, mu, false});
      if (mu > kMaxDamping) {
        report.stop_reason = StopReason::DampingLimit;
        break;
      }
    }
  }

  report.converged = report.stop_reason != StopReason::MaxIterations;
  report.state = state;
  report.line = from_orthonormal(state.line);
  report.rmse = lin.rmse();
  report.mae = lin.mae();
  report.dropped_observations = lin.dropped;
  report.condition = scaled_condition(lin.hessian);
  report.condition_warning = !(report.condition <= kConditionWarning);
  return report;
}

[[nodiscard]] inline const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::StepTolerance: return "step_tolerance";
    case StopReason::DampingLimit: return "damping_limit";
    case StopReason::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

}  // namespace lvscalib

#endif  // LVSCALIB_SOLVER_HPP
