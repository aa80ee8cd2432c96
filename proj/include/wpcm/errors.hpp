#pragma once

#include <stdexcept>
#include <string>

namespace wpcm {

/// Argument outside the normalized unit interval / unit square.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid configuration values or violated call preconditions.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rejection sampling exhausted its budget.
class SamplingFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A generated image could not be turned into a curve.
class ExtractionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Root finder did not converge (bracket missing, divergence, flat derivative).
class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Least-squares system is numerically rank deficient.
class NumericalRankError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checkpoint or data file that cannot be parsed.
class CorruptFile : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class VersionMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArchitectureMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a NaN/Inf loss.
class NonFiniteLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wpcm
