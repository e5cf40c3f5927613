#pragma once

#include <stdexcept>
#include <string>

namespace ecsim {

/// Base of every error raised by the library. The CLI maps these to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mode-count mismatch or out-of-range mode index.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A numeric argument outside its allowed domain (eta outside [0,1], F <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Normalization of a state whose norm vanishes.
class DegenerateStateError : public Error {
 public:
  using Error::Error;
};

/// Fock truncation lost more probability than the configured tail budget.
class TruncationError : public Error {
 public:
  using Error::Error;
};

/// A numerical derivative produced an inconsistent result.
class DerivativeError : public Error {
 public:
  using Error::Error;
};

/// A phase family changed structure or normalization across a difference stencil.
class BuilderError : public Error {
 public:
  using Error::Error;
};

/// Finite support needed for a QFI evaluation exceeds the configured maximum.
class SupportError : public Error {
 public:
  using Error::Error;
};

/// Density operator with an eigenvalue significantly below zero.
class PositivityError : public Error {
 public:
  using Error::Error;
};

/// No admissible point found during optimization.
class OptimizationError : public Error {
 public:
  using Error::Error;
};

/// Invalid run manifest or configuration file. The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ecsim
