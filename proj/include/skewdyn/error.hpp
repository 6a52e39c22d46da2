#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace skewdyn {

enum class ErrorKind {
  invalid_matrix,
  not_ergodic,
  incomparable_windows,
  invalid_argument,
  domain,
  range,
  window_too_short,
  incompatible,
  invalid_approximation,
  invalid_region,
  family_range,
  tolerance,
  resource_limit,
  config,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_matrix: return "invalid-matrix";
    case ErrorKind::not_ergodic: return "not-ergodic";
    case ErrorKind::incomparable_windows: return "incomparable-windows";
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::domain: return "domain";
    case ErrorKind::range: return "range";
    case ErrorKind::window_too_short: return "window-too-short";
    case ErrorKind::incompatible: return "incompatible";
    case ErrorKind::invalid_approximation: return "invalid-approximation";
    case ErrorKind::invalid_region: return "invalid-region";
    case ErrorKind::family_range: return "family-range";
    case ErrorKind::tolerance: return "tolerance";
    case ErrorKind::resource_limit: return "resource-limit";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

// Every failure raised by the library carries a kind so that front ends can
// map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace skewdyn
