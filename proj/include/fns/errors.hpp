#pragma once

#include <stdexcept>
#include <string>

namespace fns {

/// Base class of every error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonPowerOfTwoSize : Error { using Error::Error; };
struct GridMismatch : Error { using Error::Error; };
struct NonPositiveCoefficient : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct ZeroDiagonal : Error { using Error::Error; };
struct NotConstantStencil : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };
struct ZeroRhs : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct Diverged : Error { using Error::Error; };
struct MaxIterations : Error { using Error::Error; };
struct NonConvergentQR : Error { using Error::Error; };
struct SingularEigenbasis : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct CorruptCheckpoint : Error { using Error::Error; };
struct VersionMismatch : Error { using Error::Error; };

/// Invalid user input (configuration, flags). The CLI maps this to exit code 1.
struct ValidationError : Error { using Error::Error; };

/// Raised when a frequency partition leaves one side empty. The statistics
/// computed before the failure are kept so callers can still report them.
struct EmptyPartition : Error {
  EmptyPartition(const std::string& what, double mu_b, double eps_b)
      : Error(what), mu_b(mu_b), eps_b(eps_b) {}
  double mu_b;
  double eps_b;
};

}  // namespace fns
