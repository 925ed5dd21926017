#pragma once

#include <stdexcept>
#include <string>

namespace qpcert {

enum class ErrorCode {
  invalid_parameter,
  dimension_mismatch,
  degree_zero,
  kappa_domain,
  singular_covariance,
  diagonal_positivity,
  propagation_invalid,
  indefinite_kernel,
  non_convergence,
  degenerate_class,
  invalid_interval,
  solver_failure,
  io_error,
  config_error,
};

/// All recoverable failures are reported through this type; code() identifies
/// the failure class so callers can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace qpcert
