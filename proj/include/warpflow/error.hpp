#pragma once

#include <stdexcept>
#include <string>

namespace warpflow {

enum class ErrorKind {
  Domain,        // point or parameter outside the interval of definition
  Degenerate,    // metric or chart degenerates (phi = 0, r = 0, rank loss)
  Inadmissible,  // principal curvatures outside the speed's cone
  Escape,        // flow trajectory leaves the ambient interval
  Validation,    // malformed user input or configuration
  Numerical,     // integrator or root finder failed
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Inadmissible: return "inadmissible";
    case ErrorKind::Escape: return "escape";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Numerical: return "numerical";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when a flow trajectory leaves the ambient interval; carries the
/// parameter value at which the boundary was reached.
class EscapeError : public Error {
 public:
  EscapeError(double escape_time, const std::string& what)
      : Error(ErrorKind::Escape, what), escape_time_(escape_time) {}
  double escape_time() const noexcept { return escape_time_; }

 private:
  double escape_time_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace warpflow
