// lvscalib - spatiotemporal calibration of a line laser sensor on a robot arm
//
// Error type shared by every module. Each failure carries a kind so the
// command line front-end can map it onto a stable exit code.

#ifndef LVSCALIB_ERRORS_HPP
#define LVSCALIB_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace lvscalib {

enum class ErrorKind {
  ZeroDirection,
  NonMonotonicTimestamp,
  OutOfRange,
  DegenerateCloud,
  SingularSystem,
  InsufficientData,
  ParseError,
  EmptyStream,
  InvalidArgument,
  Io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ZeroDirection: return "ZeroDirection";
    case ErrorKind::NonMonotonicTimestamp: return "NonMonotonicTimestamp";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::DegenerateCloud: return "DegenerateCloud";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::EmptyStream: return "EmptyStream";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace lvscalib

#endif  // LVSCALIB_ERRORS_HPP
