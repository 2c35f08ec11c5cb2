// lvscalib - spatiotemporal calibration of a line laser sensor on a robot arm
//
// Dataset and report files.
//
//   poses.csv       t,px,py,pz,qw,qx,qy,qz   s, mm, unit quaternion (Hamilton,
//                                            end-effector to base)
//   features.csv    t,x,y,z                  s, mm, camera frame
//   truth.json /    {t_d_s, he_quat_wxyz, he_trans_mm, line: {v, n},
//   report.json      rmse_mm, mae_mm, iterations, converged}
//   iterations.csv  iter,cost,rmse_mm,t_d_s,mu,accepted
//
// Numbers are written with 17 significant digits so files reload bit-exact.

#ifndef LVSCALIB_IO_HPP
#define LVSCALIB_IO_HPP

#include <Eigen/Geometry>

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lvscalib/errors.hpp"
#include "lvscalib/liegeo.hpp"
#include "lvscalib/residual.hpp"
#include "lvscalib/solver.hpp"
#include "lvscalib/trajectory.hpp"

namespace lvscalib {

inline constexpr std::string_view kPoseHeader = "t,px,py,pz,qw,qx,qy,qz";
inline constexpr std::string_view kFeatureHeader = "t,x,y,z";
inline constexpr std::string_view kIterationHeader = "iter,cost,rmse_mm,t_d_s,mu,accepted";
inline constexpr double kQuaternionNormTolerance = 1e-6;

inline std::string format_number(double x) {
  std::array<char, 32> buf{};
  const int n = std::snprintf(buf.data(), buf.size(), "%.17g", x);
  return {buf.data(), static_cast<std::size_t>(n)};
}

// ---------------------------------------------------------------------------
// Quaternions
// ---------------------------------------------------------------------------

/// Rotation from a Hamilton quaternion (w, x, y, z) whose norm is within
/// 1e-6 of one; the quaternion is renormalized before conversion.
[[nodiscard]] inline Rotation rotation_from_wxyz(const std::array<double, 4>& q) {
  const Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);
  const double norm = quat.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > kQuaternionNormTolerance) {
    std::ostringstream os;
    os << "quaternion norm " << norm << " deviates from 1 by more than "
       << kQuaternionNormTolerance;
    throw Error(ErrorKind::InvalidArgument, os.str());
  }
  return quat.normalized().toRotationMatrix();
}

/// Unit quaternion with non-negative w.
[[nodiscard]] inline std::array<double, 4> wxyz_from_rotation(const Rotation& r) {
  Eigen::Quaterniond q(r);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return {q.w(), q.x(), q.y(), q.z()};
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

namespace detail {

inline std::string location(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line);
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <std::size_t N>
std::array<double, N> parse_row(std::string_view row, const std::string& where) {
  std::vector<std::string_view> tokens;
  std::size_t start = 0;
  while (true) {
    const auto comma = row.find(',', start);
    tokens.push_back(trim(row.substr(start, comma == std::string_view::npos ? row.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (tokens.size() != N) {
    throw Error(ErrorKind::ParseError, where + ": expected " + std::to_string(N) + " fields, got " +
                                           std::to_string(tokens.size()));
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    const auto token = tokens[i];
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out[i]);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
      throw Error(ErrorKind::ParseError,
                  where + ": cannot parse field " + std::to_string(i + 1) + " '" + std::string(token) + "'");
    }
    if (!std::isfinite(out[i])) {
      throw Error(ErrorKind::ParseError, where + ": non-finite value in field " + std::to_string(i + 1));
    }
  }
  return out;
}

// Calls on_row(values, where) for each non-empty data row after the header.
template <std::size_t N, typename OnRow>
void read_csv(const std::string& path, std::string_view header, OnRow&& on_row) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = trim(line);
    if (row.empty()) continue;
    if (!have_header) {
      if (row != header) {
        throw Error(ErrorKind::ParseError, location(path, line_no) + ": expected header '" +
                                               std::string(header) + "'");
      }
      have_header = true;
      continue;
    }
    on_row(parse_row<N>(row, location(path, line_no)), location(path, line_no));
    ++rows;
  }
  if (rows == 0) throw Error(ErrorKind::EmptyStream, path + " has no data rows");
}

}  // namespace detail

[[nodiscard]] inline PoseBuffer load_poses(const std::string& path) {
  PoseBuffer buf;
  detail::read_csv<8>(path, kPoseHeader, [&](const std::array<double, 8>& v, const std::string& where) {
    TimedPose tp;
    tp.t = v[0];
    tp.pose.translation = {v[1], v[2], v[3]};
    try {
      tp.pose.rotation = rotation_from_wxyz({v[4], v[5], v[6], v[7]});
    } catch (const Error& e) {
      throw Error(ErrorKind::ParseError, where + ": " + e.what());
    }
    if (!buf.empty() && !(tp.t > buf.last_time())) {
      throw Error(ErrorKind::NonMonotonicTimestamp,
                  where + ": timestamp " + format_number(tp.t) + " does not increase");
    }
    buf.insert(tp);
  });
  return buf;
}

[[nodiscard]] inline std::vector<FeatureObservation> load_features(const std::string& path) {
  std::vector<FeatureObservation> out;
  detail::read_csv<4>(path, kFeatureHeader, [&](const std::array<double, 4>& v, const std::string& where) {
    FeatureObservation obs{v[0], {v[1], v[2], v[3]}};
    if (!(obs.p_cam.z() > 0.0)) {
      throw Error(ErrorKind::ParseError, where + ": feature is not in front of the camera (z <= 0)");
    }
    if (!out.empty() && !(obs.t > out.back().t)) {
      throw Error(ErrorKind::NonMonotonicTimestamp,
                  where + ": timestamp " + format_number(obs.t) + " does not increase");
    }
    out.push_back(obs);
  });
  return out;
}

[[nodiscard]] inline Dataset load_dataset(const std::string& pose_path, const std::string& feature_path) {
  return {load_poses(pose_path), load_features(feature_path)};
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

inline void write_poses(std::ostream& os, const std::vector<TimedPose>& poses) {
  os << kPoseHeader << '\n';
  for (const auto& tp : poses) {
    const auto q = wxyz_from_rotation(tp.pose.rotation);
    const Vec3& p = tp.pose.translation;
    os << format_number(tp.t) << ',' << format_number(p.x()) << ',' << format_number(p.y()) << ','
       << format_number(p.z()) << ',' << format_number(q[0]) << ',' << format_number(q[1]) << ','
       << format_number(q[2]) << ',' << format_number(q[3]) << '\n';
  }
}

inline void write_features(std::ostream& os, const std::vector<FeatureObservation>& features) {
  os << kFeatureHeader << '\n';
  for (const auto& f : features) {
    os << format_number(f.t) << ',' << format_number(f.p_cam.x()) << ','
       << format_number(f.p_cam.y()) << ',' << format_number(f.p_cam.z()) << '\n';
  }
}

inline void write_iterations(std::ostream& os, const std::vector<IterationRecord>& records) {
  os << kIterationHeader << '\n';
  for (const auto& r : records) {
    os << r.iter << ',' << format_number(r.cost) << ',' << format_number(r.rmse) << ','
       << format_number(r.t_d) << ',' << format_number(r.mu) << ',' << (r.accepted ? 1 : 0) << '\n';
  }
}

/// Contents shared by truth.json and report.json.
struct ResultRecord {
  double t_d = 0.0;
  Rotation he_rot = Rotation::Identity();
  Vec3 he_trans = Vec3::Zero();
  PluckerLine line;
  double rmse = 0.0;
  double mae = 0.0;
  int iterations = 0;
  bool converged = true;
};

inline ResultRecord record_from(const CalibrationState& s) {
  ResultRecord r;
  r.t_d = s.t_d;
  r.he_rot = s.he_rot;
  r.he_trans = s.he_trans;
  r.line = from_orthonormal(s.line);
  return r;
}

inline ResultRecord record_from(const CalibrationReport& rep) {
  ResultRecord r = record_from(rep.state);
  r.line = rep.line;
  r.rmse = rep.rmse;
  r.mae = rep.mae;
  r.iterations = static_cast<int>(rep.iterations.size()) - 1;
  r.converged = rep.converged;
  return r;
}

inline nlohmann::ordered_json to_json(const ResultRecord& r) {
  const auto vec = [](const Vec3& v) { return nlohmann::ordered_json::array({v.x(), v.y(), v.z()}); };
  const auto q = wxyz_from_rotation(r.he_rot);
  nlohmann::ordered_json j;
  j["t_d_s"] = r.t_d;
  j["he_quat_wxyz"] = {q[0], q[1], q[2], q[3]};
  j["he_trans_mm"] = vec(r.he_trans);
  j["line"] = {{"v", vec(r.line.v)}, {"n", vec(r.line.n)}};
  j["rmse_mm"] = r.rmse;
  j["mae_mm"] = r.mae;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  return j;
}

[[nodiscard]] inline ResultRecord result_from_json(const nlohmann::json& j) {
  const auto vec = [](const nlohmann::json& a) {
    return Vec3(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>());
  };
  try {
    ResultRecord r;
    r.t_d = j.at("t_d_s").get<double>();
    const auto& q = j.at("he_quat_wxyz");
    r.he_rot = rotation_from_wxyz({q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                                   q.at(3).get<double>()});
    r.he_trans = vec(j.at("he_trans_mm"));
    r.line.v = vec(j.at("line").at("v"));
    r.line.n = vec(j.at("line").at("n"));
    r.rmse = j.at("rmse_mm").get<double>();
    r.mae = j.at("mae_mm").get<double>();
    r.iterations = j.at("iterations").get<int>();
    r.converged = j.at("converged").get<bool>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("result json: ") + e.what());
  }
}

[[nodiscard]] inline ResultRecord load_result(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  try {
    return result_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, path + ": " + e.what());
  }
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  writer(out);
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace lvscalib

#endif  // LVSCALIB_IO_HPP
