#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rclab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset` is the byte offset into the source.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Arithmetic outside a function's domain (log of non-positive, division by zero, ...).
class DomainError : public Error {
 public:
  DomainError(const std::string& what, std::size_t offset)
      : Error(what + " (expression offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// A system definition violates a structural requirement.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A linear system or two-form is singular where invertibility was required.
class SingularError : public Error {
 public:
  using Error::Error;
};

/// An iterative solve did not reach its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what + " (last residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Requested construction exists mathematically but is not provided by this library.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// A reduction precondition failed (level set not preserved, empty control slice, ...).
class IrreducibleError : public Error {
 public:
  using Error::Error;
};

/// A check suite does not apply to the given system (e.g. reduction without symmetry).
class InapplicableError : public Error {
 public:
  using Error::Error;
};

}  // namespace rclab
