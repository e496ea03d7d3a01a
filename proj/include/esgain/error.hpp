#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace esgain {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset()` is the byte offset of the problem.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// A numeric evaluation produced inf or nan.
class OverflowError : public Error {
 public:
  using Error::Error;
};

/// Arguments violate a precondition (dimension mismatch, bad domain, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A tuning problem has no feasible point.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// The averaging engine exceeded a configured size limit.
class CapacityError : public Error {
 public:
  using Error::Error;
};

}  // namespace esgain
