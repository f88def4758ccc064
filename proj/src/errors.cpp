#include "freedeconv/errors.hpp"

namespace freedeconv {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Domain: return "DomainError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::MomentUndefined: return "MomentUndefined";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::BelowThreshold: return "BelowThreshold";
    case ErrorKind::DomainEscape: return "DomainEscape";
    case ErrorKind::FirstMomentZero: return "FirstMomentZero";
    case ErrorKind::DegenerateNoise: return "DegenerateNoise";
    case ErrorKind::CertificateFailure: return "CertificateFailure";
    case ErrorKind::NonUniformGrid: return "NonUniformGrid";
    case ErrorKind::GridCoverage: return "GridCoverage";
    case ErrorKind::BracketFailure: return "BracketFailure";
    case ErrorKind::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorKind::SingularResolvent: return "SingularResolvent";
    case ErrorKind::SingularIterate: return "SingularIterate";
    case ErrorKind::BoundViolation: return "BoundViolation";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::IO: return "IOError";
  }
  return "Error";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace freedeconv
