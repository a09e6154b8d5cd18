#pragma once

#include <stdexcept>
#include <string>

namespace cbap {

enum class ErrorKind {
  kInvalidParameter,
  kConfig,
  kInfeasibleCbap,
  kSaturationInfeasible,
  kNoFixedPoint,
  kConvergenceFailure,
  kInternalConsistency,
  kTooLarge,
  kOracleFailure,
};

const char* to_string(ErrorKind kind);

// All library failures are reported through this type; `kind()` lets callers
// (the CLI in particular) map failures onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // True for failures caused by a model that has no valid operating point,
  // as opposed to malformed input.
  bool is_infeasible() const noexcept {
    return kind_ == ErrorKind::kInfeasibleCbap ||
           kind_ == ErrorKind::kSaturationInfeasible ||
           kind_ == ErrorKind::kNoFixedPoint ||
           kind_ == ErrorKind::kConvergenceFailure;
  }

 private:
  ErrorKind kind_;
};

// Raised by the fixed-point solver when the iteration budget runs out.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double lo, double hi)
      : Error(ErrorKind::kConvergenceFailure, what), lo_(lo), hi_(hi) {}

  double bracket_lo() const noexcept { return lo_; }
  double bracket_hi() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

}  // namespace cbap
