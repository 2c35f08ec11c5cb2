// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <random>
#include <string>

#include "lvscalib/lvscalib.hpp"

namespace {

using namespace lvscalib;

int failures = 0;

void report(int id, bool ok, const std::string& what) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

CalibrationState perturbed_init(const Dataset& data, const CalibrationState& truth) {
  CalibrationState init;
  init.t_d = 0.0;
  init.he_rot = rot_exp(Vec3(0.02, 0.01, -0.015)) * truth.he_rot;
  init.he_trans = truth.he_trans + Vec3(3, -2, 4);
  init.line = init_line(data.features, data.poses, init.he_rot, init.he_trans);
  return init;
}

double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }

void jacobian_agreement() {
  const auto start = std::chrono::steady_clock::now();
  const JacobianCheckResult r = run_jacobian_check(200, 7);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  double worst = 0.0;
  for (double e : r.max_error) worst = std::max(worst, e);
  report(1, r.passed() && r.trials >= 100 && secs < 5.0,
         fmt("analytic vs numeric Jacobian, %.0f states, worst block rel err %.2e, %.2f s", r.trials, worst,
             secs));
}

void line_round_trip() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto rvec = [&] { return Vec3(u(rng), u(rng), u(rng)); };
  double worst = 0.0;
  int count = 0;
  const auto check = [&](const PluckerLine& l) {
    const PluckerLine b = from_orthonormal(to_orthonormal(l));
    const double scale = std::max(1.0, l.n.norm());
    worst = std::max({worst, (b.v - l.v).norm(), (b.n - l.n).norm() / scale});
    ++count;
  };
  for (int i = 0; i < 1000; ++i) {
    Vec3 d = rvec();
    while (d.norm() < 1e-3) d = rvec();
    check(line_from_point_dir(rvec() * 2000.0, d));
  }
  for (int i = 0; i < 10; ++i) {
    const Vec3 v = rvec().normalized();
    const Vec3 perp = v.cross(rvec()).normalized();
    check({v, perp * std::pow(10.0, -6.0 - 0.3 * i)});
  }
  report(2, worst < 1e-10,
         fmt("Plucker <-> orthonormal round trip on %.0f lines (10 near-degenerate), max err %.2e", count,
             worst));
}

void noise_free_recovery() {
  const SynthDataset syn = synthesize(ScenarioConfig{});
  const Dataset data = syn.to_dataset();
  const CalibrationReport rep = calibrate(data, perturbed_init(data, syn.truth));
  const double td_ms = 1e3 * std::abs(rep.state.t_d - syn.truth.t_d);
  const double trans = (rep.state.he_trans - syn.truth.he_trans).norm();
  const double rot = rad_to_deg(rotation_distance(rep.state.he_rot, syn.truth.he_rot));
  report(3, rep.converged && td_ms < 0.1 && trans < 0.01 && rot < 0.01 && rep.rmse < 1e-6,
         fmt("noise-free recovery: t_d err %.2e ms, trans err %.2e mm, rot err %.2e deg, rmse %.2e mm",
             td_ms, trans, rot, rep.rmse));
}

void noisy_recovery() {
  int good = 0;
  double worst_td = 0.0;
  double worst_trans = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ScenarioConfig cfg;
    cfg.noise_sigma = 0.1;
    cfg.seed = seed;
    const SynthDataset syn = synthesize(cfg);
    const Dataset data = syn.to_dataset();
    const CalibrationReport rep = calibrate(data, perturbed_init(data, syn.truth));
    const double td_ms = 1e3 * std::abs(rep.state.t_d - syn.truth.t_d);
    const double trans = (rep.state.he_trans - syn.truth.he_trans).norm();
    worst_td = std::max(worst_td, td_ms);
    worst_trans = std::max(worst_trans, trans);
    if (td_ms < 1.0 && trans < 0.2) ++good;
  }
  report(4, good >= 9,
         fmt("noisy recovery (sigma 0.1 mm): %.0f/10 seeds within bounds, worst t_d %.3f ms, worst trans %.3f mm",
             good, worst_td, worst_trans));
}

double validation_rmse(const CalibrationState& s, const Dataset& data) {
  const Linearization lin = linearize(s, data, 1.0);
  return lin.rmse();
}

void ablation() {
  ScenarioConfig cfg;
  cfg.noise_sigma = 0.1;
  const SynthDataset syn = synthesize(cfg);
  const Dataset data = syn.to_dataset();
  const CalibrationReport rep = calibrate(data, perturbed_init(data, syn.truth));

  ScenarioConfig val_cfg = cfg;
  val_cfg.seed = 1001;
  const Dataset val = synthesize(val_cfg).to_dataset();
  CalibrationState with_td = rep.state;
  with_td.line = syn.truth.line;
  CalibrationState without_td = with_td;
  without_td.t_d = 0.0;
  const double e_with = validation_rmse(with_td, val);
  const double e_without = validation_rmse(without_td, val);
  const double ratio = e_without / e_with;
  report(5, ratio >= 3.0,
         fmt("ablation: validation rmse %.4f mm with t_d vs %.4f mm with t_d = 0, ratio %.2f", e_with,
             e_without, ratio));
}

void constant_attitude() {
  PoseBuffer buf;
  const Mat3 r = rot_exp(Vec3(0.3, 0.2, -0.5));
  for (int k = 0; k < 50; ++k) buf.insert({k * 0.004, {r, Vec3(10.0 * k, -3.0 * k, 0.5 * k)}});
  double worst = 0.0;
  for (double t = 0.001; t < 0.19; t += 0.0071) {
    const TimeOffsetTerms terms = time_offset_terms(buf.sample(t), Vec3(45, -30, 180));
    worst = std::max(worst, terms.rotational.cwiseAbs().maxCoeff());
  }
  report(6, worst == 0.0, fmt("constant attitude: max |rotational time term| = %g", worst));
}

void conditioning() {
  ScenarioConfig flat;
  flat.path_amplitude = 0.0;
  flat.attitude_sweep = 0.0;
  const SynthDataset a = synthesize(flat);
  const Dataset da = a.to_dataset();
  const CalibrationReport ra = calibrate(da, perturbed_init(da, a.truth));

  const SynthDataset b = synthesize(ScenarioConfig{});
  const Dataset db = b.to_dataset();
  const CalibrationReport rb = calibrate(db, perturbed_init(db, b.truth));
  report(7, ra.condition_warning && !rb.condition_warning,
         fmt("conditioning: flat path cond %.2e (warning %.0f), S-path cond %.2e (warning %.0f)", ra.condition,
             ra.condition_warning, rb.condition, rb.condition_warning));
}

void monotone_and_deterministic() {
  ScenarioConfig cfg;
  cfg.noise_sigma = 0.1;
  cfg.seed = 3;
  const SynthDataset syn = synthesize(cfg);
  const Dataset data = syn.to_dataset();
  const CalibrationState init = perturbed_init(data, syn.truth);

  setenv(kThreadsEnv, "1", 1);
  const CalibrationReport a = calibrate(data, init);
  setenv(kThreadsEnv, "4", 1);
  const CalibrationReport b = calibrate(data, init);
  unsetenv(kThreadsEnv);

  bool decreasing = true;
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& it : a.iterations) {
    if (!it.accepted) continue;
    decreasing = decreasing && it.cost < prev;
    prev = it.cost;
  }
  bool identical = a.iterations.size() == b.iterations.size() && a.state.t_d == b.state.t_d &&
                   a.state.he_trans == b.state.he_trans && a.state.he_rot == b.state.he_rot;
  for (std::size_t i = 0; identical && i < a.iterations.size(); ++i) {
    identical = a.iterations[i].cost == b.iterations[i].cost;
  }
  report(8, decreasing && identical,
         fmt("accepted costs strictly decrease over %.0f iterations; 1 vs 4 threads bit-identical: ",
             static_cast<double>(a.iterations.size() - 1)) +
             (identical ? "yes" : "no"));
}

}  // namespace

int main() {
  try {
    jacobian_agreement();
    line_round_trip();
    noise_free_recovery();
    noisy_recovery();
    ablation();
    constant_attitude();
    conditioning();
    monotone_and_deterministic();
  } catch (const std::exception& e) {
    std::printf("[FAIL] aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
