#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mlmcq {

enum class ErrorKind {
  InvalidParameter,
  NumericDomain,
  Convergence,
  Resource,
  ContractionViolation,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Base class for all library errors. `kind()` is what the CLI reports in its
/// machine-readable error object.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidParameter : public Error {
 public:
  explicit InvalidParameter(const std::string& message)
      : Error(ErrorKind::InvalidParameter, message) {}
};

class NumericDomainError : public Error {
 public:
  explicit NumericDomainError(const std::string& message)
      : Error(ErrorKind::NumericDomain, message) {}
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, double residual)
      : Error(ErrorKind::Convergence, message), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class ResourceError : public Error {
 public:
  explicit ResourceError(const std::string& message)
      : Error(ErrorKind::Resource, message) {}
};

class ContractionViolation : public Error {
 public:
  explicit ContractionViolation(const std::string& message)
      : Error(ErrorKind::ContractionViolation, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorKind::Io, message) {}
};

}  // namespace mlmcq
