#pragma once

#include <stdexcept>
#include <string>

namespace popcode {

enum class Errc {
  invalid_parameter,
  domain_error,
  rate_underflow,
  singular_covariance,
  degenerate_input,
  precondition_failed,
  quadrature_failure,
  non_finite_likelihood,
  undefined_ratio,
  io_error,
};

// Every failure raised by the library carries one of the codes above so that
// callers (the CLI in particular) can map them onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace popcode
