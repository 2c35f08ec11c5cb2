// lvscalib - spatiotemporal calibration of a line laser sensor on a robot arm
//
//   lvscalib synth     --out DIR [--seed N] [--td S] [--noise MM] [--duration S]
//   lvscalib calibrate --poses poses.csv --features features.csv --out DIR
//                      [--config run.json] [--td S] [--strict]
//   lvscalib check     [--trials N] [--seed N]
//
// Config files are flat JSON objects; command-line flags override them.
// Relative stream paths in a calibrate config resolve against its directory.
// LVSCALIB_THREADS sets the residual worker count (default: all cores).

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lvscalib/commands.hpp"

namespace {

constexpr const char* kCalibrateKeys = R"(config keys (calibrate):
  poses, features, out            paths
  init_he_quat_wxyz  [1,0,0,0]    initial camera->end-effector rotation
  init_he_trans_mm   [0,0,0]      initial camera origin in end-effector frame
  init_td_s          0            initial time offset
  init_phi           (fitted)     initial line [w1,w2,w3,m]; default fits the t_d=0 cloud
  huber_delta_mm     1.0
  mu0                1e-4
  mu_up              10
  mu_down            0.1
  eps                1e-8
  max_iters          100
  td_window_s        0.2
  strict             false
exit codes: 0 ok, 2 ingestion, 3 insufficient data, 4 singular/no convergence,
            5 ill-conditioned (with --strict))";

constexpr const char* kSynthKeys = R"(config keys (synth):
  out                .
  seed               1
  td_s               0.018
  noise_mm           0
  duration_s         20
  pose_rate_hz       250
  cam_rate_hz        33
  path_amplitude_mm  30
  attitude_sweep_rad 0.8
  scan_speed_mm_s    40
  lateral_freq_hz    0.5
  standoff_mm        250
  margin_s           0.25
  knot_exact         true
  he_quat_wxyz       exp([0.10,-0.06,0.25]) as a quaternion
  he_trans_mm        [45,-30,180]
  line_point_mm      [500,100,0]
  line_dir           [1,0.05,0.02])";

}  // namespace

int main(int argc, char** argv) {
  using namespace lvscalib;

  CLI::App app{"Joint time-offset, hand-eye and weld-line calibration for a robot-mounted line laser sensor"};
  app.require_subcommand(1);
  app.footer(std::string("environment:\n  ") + kThreadsEnv + "   residual worker count (default: all cores)");

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "Estimate t_d, hand-eye and line from recorded streams");
  std::string calib_config;
  std::string poses;
  std::string features;
  std::string calib_out;
  double init_td = 0.0;
  bool strict = false;
  calibrate->add_option("--config", calib_config, "Flat JSON run config");
  calibrate->add_option("--poses", poses, "Pose stream CSV (t,px,py,pz,qw,qx,qy,qz)");
  calibrate->add_option("--features", features, "Feature stream CSV (t,x,y,z)");
  calibrate->add_option("--out", calib_out, "Output directory for report.json and iterations.csv")
      ->default_str(".");
  calibrate->add_option("--td", init_td, "Initial time offset in seconds")->default_str("0");
  calibrate->add_flag("--strict", strict, "Fail with exit code 5 when the problem is ill-conditioned");
  calibrate->footer(kCalibrateKeys);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic S-path dataset with known truth");
  std::string synth_config;
  std::string synth_out;
  std::uint64_t seed = 1;
  double td_truth = 0.018;
  double noise = 0.0;
  double duration = 20.0;
  synth->add_option("--config", synth_config, "Flat JSON scenario config");
  synth->add_option("--out", synth_out, "Output directory")->default_str(".");
  synth->add_option("--seed", seed, "Noise seed")->capture_default_str();
  synth->add_option("--td", td_truth, "True time offset in seconds")->capture_default_str();
  synth->add_option("--noise", noise, "Feature noise sigma per axis in mm")->capture_default_str();
  synth->add_option("--duration", duration, "Camera window length in seconds")->capture_default_str();
  synth->footer(kSynthKeys);

  // check
  auto* check = app.add_subcommand("check", "Compare analytic Jacobians against finite differences");
  CheckOptions check_opts;
  check->add_option("--trials", check_opts.trials, "Randomized states")->capture_default_str();
  check->add_option("--seed", check_opts.seed, "Random seed")->capture_default_str();
  check->add_flag("--flip-td-sign", check_opts.flip_td_sign, "Negate the analytic t_d column (self-test)")
      ->group("");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*calibrate) {
      RunConfig cfg;
      if (!calib_config.empty()) apply_run_config_file(cfg, calib_config);
      if (calibrate->count("--poses")) cfg.poses_path = poses;
      if (calibrate->count("--features")) cfg.features_path = features;
      if (calibrate->count("--out")) cfg.out_dir = calib_out;
      if (calibrate->count("--td")) cfg.init_td = init_td;
      if (strict) cfg.strict = true;
      if (cfg.poses_path.empty() || cfg.features_path.empty()) {
        std::cerr << "error: --poses and --features (or config keys) are required\n";
        return exit_code::kIngestion;
      }
      return cmd_calibrate(cfg, std::cout, std::cerr);
    }
    if (*synth) {
      SynthRun run;
      if (!synth_config.empty()) apply_synth_config(run, detail::read_json_file(synth_config));
      if (synth->count("--out")) run.out_dir = synth_out;
      if (synth->count("--seed")) run.scenario.seed = seed;
      if (synth->count("--td")) run.scenario.td_truth = td_truth;
      if (synth->count("--noise")) run.scenario.noise_sigma = noise;
      if (synth->count("--duration")) run.scenario.duration = duration;
      return cmd_synth(run, std::cout, std::cerr);
    }
    if (*check) return cmd_check(check_opts, std::cout);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  }
  return exit_code::kFailure;
}
