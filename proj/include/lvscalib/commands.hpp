// lvscalib - spatiotemporal calibration of a line laser sensor on a robot arm
//
// Command implementations behind the lvscalib executable. Each command
// writes human-readable progress to `out`, diagnostics to `err`, and
// returns the process exit status.

#ifndef LVSCALIB_COMMANDS_HPP
#define LVSCALIB_COMMANDS_HPP

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>

#include "json.hpp"
#include "lvscalib/errors.hpp"
#include "lvscalib/io.hpp"
#include "lvscalib/jacobian_check.hpp"
#include "lvscalib/liegeo.hpp"
#include "lvscalib/solver.hpp"
#include "lvscalib/synth.hpp"

namespace lvscalib {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kIngestion = 2;
inline constexpr int kInsufficientData = 3;
inline constexpr int kNoConvergence = 4;
inline constexpr int kConditioning = 5;
}  // namespace exit_code

[[nodiscard]] inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError:
    case ErrorKind::NonMonotonicTimestamp:
    case ErrorKind::EmptyStream:
    case ErrorKind::InvalidArgument:
    case ErrorKind::OutOfRange:
    case ErrorKind::Io:
      return exit_code::kIngestion;
    case ErrorKind::InsufficientData:
      return exit_code::kInsufficientData;
    case ErrorKind::SingularSystem:
    case ErrorKind::DegenerateCloud:
      return exit_code::kNoConvergence;
    case ErrorKind::ZeroDirection:
      return exit_code::kFailure;
  }
  return exit_code::kFailure;
}

struct RunConfig {
  std::string poses_path;
  std::string features_path;
  std::string out_dir = ".";
  Rotation init_he_rot = Rotation::Identity();
  Vec3 init_he_trans = Vec3::Zero();
  double init_td = 0.0;
  std::optional<OrthonormalLine> init_phi;
  SolverOptions solver;
  bool strict = false;
};

struct SynthRun {
  ScenarioConfig scenario;
  std::string out_dir = ".";
};

// ---------------------------------------------------------------------------
// Config files: flat JSON objects, unknown keys rejected.
// ---------------------------------------------------------------------------

namespace detail {

inline Vec3 vec3_from(const nlohmann::json& a, const std::string& key) {
  if (!a.is_array() || a.size() != 3) {
    throw Error(ErrorKind::InvalidArgument, "config key '" + key + "' must be an array of 3 numbers");
  }
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

inline Rotation quat_from(const nlohmann::json& a, const std::string& key) {
  if (!a.is_array() || a.size() != 4) {
    throw Error(ErrorKind::InvalidArgument, "config key '" + key + "' must be [w, x, y, z]");
  }
  return rotation_from_wxyz({a[0].get<double>(), a[1].get<double>(), a[2].get<double>(), a[3].get<double>()});
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path);
  try {
    auto j = nlohmann::json::parse(in);
    if (!j.is_object()) throw Error(ErrorKind::ParseError, path + ": config must be a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, path + ": " + e.what());
  }
}

template <typename Fn>
void for_each_key(const nlohmann::json& j, Fn&& apply) {
  for (const auto& [key, value] : j.items()) {
    try {
      if (!apply(key, value)) {
        throw Error(ErrorKind::InvalidArgument, "unknown config key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::InvalidArgument, "config key '" + key + "': " + e.what());
    }
  }
}

}  // namespace detail

inline void apply_run_config(RunConfig& cfg, const nlohmann::json& j) {
  detail::for_each_key(j, [&](const std::string& key, const nlohmann::json& v) {
    if (key == "poses") cfg.poses_path = v.get<std::string>();
    else if (key == "features") cfg.features_path = v.get<std::string>();
    else if (key == "out") cfg.out_dir = v.get<std::string>();
    else if (key == "init_he_quat_wxyz") cfg.init_he_rot = detail::quat_from(v, key);
    else if (key == "init_he_trans_mm") cfg.init_he_trans = detail::vec3_from(v, key);
    else if (key == "init_td_s") cfg.init_td = v.get<double>();
    else if (key == "init_phi") {
      if (!v.is_array() || v.size() != 4) {
        throw Error(ErrorKind::InvalidArgument, "config key 'init_phi' must be [w1, w2, w3, m]");
      }
      cfg.init_phi = OrthonormalLine{{v[0].get<double>(), v[1].get<double>(), v[2].get<double>()},
                                     v[3].get<double>()};
    }
    else if (key == "huber_delta_mm") cfg.solver.huber_delta = v.get<double>();
    else if (key == "mu0") cfg.solver.mu0 = v.get<double>();
    else if (key == "mu_up") cfg.solver.mu_up = v.get<double>();
    else if (key == "mu_down") cfg.solver.mu_down = v.get<double>();
    else if (key == "eps") cfg.solver.eps = v.get<double>();
    else if (key == "max_iters") cfg.solver.max_iters = v.get<int>();
    else if (key == "td_window_s") cfg.solver.td_window = v.get<double>();
    else if (key == "strict") cfg.strict = v.get<bool>();
    else return false;
    return true;
  });
}

/// Reads a run config file. Relative stream paths in it are taken relative
/// to the file's own directory.
inline void apply_run_config_file(RunConfig& cfg, const std::string& path) {
  const nlohmann::json j = detail::read_json_file(path);
  apply_run_config(cfg, j);
  const auto base = std::filesystem::path(path).parent_path();
  for (auto* stream : {&cfg.poses_path, &cfg.features_path}) {
    if (!stream->empty() && std::filesystem::path(*stream).is_relative()) {
      *stream = (base / *stream).lexically_normal().string();
    }
  }
}

inline void apply_synth_config(SynthRun& run, const nlohmann::json& j) {
  ScenarioConfig& c = run.scenario;
  std::optional<Vec3> line_point;
  std::optional<Vec3> line_dir;
  detail::for_each_key(j, [&](const std::string& key, const nlohmann::json& v) {
    if (key == "out") run.out_dir = v.get<std::string>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "td_s") c.td_truth = v.get<double>();
    else if (key == "noise_mm") c.noise_sigma = v.get<double>();
    else if (key == "duration_s") c.duration = v.get<double>();
    else if (key == "pose_rate_hz") c.pose_rate = v.get<double>();
    else if (key == "cam_rate_hz") c.cam_rate = v.get<double>();
    else if (key == "path_amplitude_mm") c.path_amplitude = v.get<double>();
    else if (key == "attitude_sweep_rad") c.attitude_sweep = v.get<double>();
    else if (key == "scan_speed_mm_s") c.scan_speed = v.get<double>();
    else if (key == "lateral_freq_hz") c.lateral_freq = v.get<double>();
    else if (key == "standoff_mm") c.standoff = v.get<double>();
    else if (key == "margin_s") c.margin = v.get<double>();
    else if (key == "knot_exact") c.knot_exact = v.get<bool>();
    else if (key == "he_quat_wxyz") c.he_rot_truth = detail::quat_from(v, key);
    else if (key == "he_trans_mm") c.he_trans_truth = detail::vec3_from(v, key);
    else if (key == "line_point_mm") line_point = detail::vec3_from(v, key);
    else if (key == "line_dir") line_dir = detail::vec3_from(v, key);
    else return false;
    return true;
  });
  if (line_point || line_dir) {
    c.line_truth = line_from_point_dir(line_point.value_or(c.line_truth.closest_point()),
                                       line_dir.value_or(c.line_truth.v));
  }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace detail {

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline void print_state(std::ostream& out, const CalibrationState& s) {
  const auto q = wxyz_from_rotation(s.he_rot);
  out << "  t_d          " << format_number(s.t_d) << " s\n"
      << "  he_quat_wxyz " << format_number(q[0]) << ' ' << format_number(q[1]) << ' '
      << format_number(q[2]) << ' ' << format_number(q[3]) << '\n'
      << "  he_trans_mm  " << format_number(s.he_trans.x()) << ' ' << format_number(s.he_trans.y())
      << ' ' << format_number(s.he_trans.z()) << '\n';
}

}  // namespace detail

inline int cmd_calibrate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  CalibrationReport report;
  try {
    const Dataset data = load_dataset(cfg.poses_path, cfg.features_path);
    out << "loaded " << data.poses.size() << " poses, " << data.features.size() << " features\n";

    CalibrationState init;
    init.t_d = cfg.init_td;
    init.he_rot = cfg.init_he_rot;
    init.he_trans = cfg.init_he_trans;
    init.line = cfg.init_phi ? *cfg.init_phi
                             : init_line(data.features, data.poses, init.he_rot, init.he_trans);
    report = calibrate(data, init, cfg.solver);

    std::filesystem::create_directories(cfg.out_dir);
    const std::filesystem::path dir(cfg.out_dir);
    auto json = to_json(record_from(report));
    json["generated_at"] = detail::utc_timestamp();
    write_file(dir / "report.json", [&](std::ostream& os) { os << json.dump(2) << '\n'; });
    write_file(dir / "iterations.csv", [&](std::ostream& os) { write_iterations(os, report.iterations); });
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kIngestion;
  }

  out << "calibration " << (report.converged ? "converged" : "did not converge") << " ("
      << to_string(report.stop_reason) << ", " << report.iterations.size() - 1 << " iterations)\n";
  detail::print_state(out, report.state);
  out << "  rmse_mm      " << format_number(report.rmse) << '\n'
      << "  mae_mm       " << format_number(report.mae) << '\n'
      << "  dropped      " << report.dropped_observations << '\n'
      << "  condition    " << format_number(report.condition) << '\n';

  if (report.condition_warning) {
    err << "warning: normal matrix condition " << report.condition
        << " exceeds 1e10; the time offset or hand-eye may be unobservable from this motion\n";
    if (cfg.strict) return exit_code::kConditioning;
  }
  if (!report.converged) return exit_code::kNoConvergence;
  return exit_code::kOk;
}

inline int cmd_synth(const SynthRun& run, std::ostream& out, std::ostream& err) {
  try {
    const SynthDataset ds = synthesize(run.scenario);
    std::filesystem::create_directories(run.out_dir);
    const std::filesystem::path dir(run.out_dir);
    write_file(dir / "poses.csv", [&](std::ostream& os) { write_poses(os, ds.poses); });
    write_file(dir / "features.csv", [&](std::ostream& os) { write_features(os, ds.features); });
    write_file(dir / "truth.json",
               [&](std::ostream& os) { os << to_json(record_from(ds.truth)).dump(2) << '\n'; });
    out << "wrote " << ds.poses.size() << " poses, " << ds.features.size() << " features ("
        << ds.skipped << " of " << ds.camera_ticks << " camera ticks unobservable) to " << run.out_dir
        << '\n';
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kIngestion;
  }
  return exit_code::kOk;
}

struct CheckOptions {
  int trials = 200;
  std::uint64_t seed = 7;
  bool flip_td_sign = false;  // sensitivity hook: corrupt the analytic t_d column
};

inline int cmd_check(const CheckOptions& opts, std::ostream& out) {
  ResidualEvaluator analytic = evaluate;
  if (opts.flip_td_sign) {
    analytic = [](const CalibrationState& s, const PoseBuffer& b, const FeatureObservation& o) {
      ResidualBlock block = evaluate(s, b, o);
      block.jacobian.col(kTimeCol) *= -1.0;
      return block;
    };
  }
  const JacobianCheckResult result = run_jacobian_check(opts.trials, opts.seed, analytic);
  out << "jacobian check over " << result.trials << " randomized states (tolerance "
      << kJacobianTolerance << ")\n";
  for (std::size_t b = 0; b < kJacobianBlocks.size(); ++b) {
    const double e = result.max_error[b];
    out << "  block " << std::left << std::setw(4) << kJacobianBlocks[b].name << " max_rel_err "
        << std::scientific << std::setprecision(3) << e << std::defaultfloat
        << (e < kJacobianTolerance ? "  ok" : "  FAIL") << '\n';
  }
  return result.passed() ? exit_code::kOk : exit_code::kFailure;
}

}  // namespace lvscalib

#endif  // LVSCALIB_COMMANDS_HPP
