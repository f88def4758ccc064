#pragma once

#include <stdexcept>
#include <string>

namespace freedeconv {

enum class ErrorKind {
  Domain,
  InvalidArgument,
  MomentUndefined,
  NonConvergence,
  BelowThreshold,
  DomainEscape,
  FirstMomentZero,
  DegenerateNoise,
  CertificateFailure,
  NonUniformGrid,
  GridCoverage,
  BracketFailure,
  MaxIterExceeded,
  SingularResolvent,
  SingularIterate,
  BoundViolation,
  InvariantViolation,
  Config,
  IO
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace freedeconv
