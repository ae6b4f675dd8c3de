#pragma once

#include <stdexcept>
#include <string>

namespace syncforge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A point mapped to (or near) the line at infinity.
class DegeneratePoint : public Error {
 public:
  using Error::Error;
};

/// Singular homography, collinear corner quad, or singular linear system.
class SingularMatrix : public Error {
 public:
  using Error::Error;
};

class InvalidTransform : public Error {
 public:
  using Error::Error;
};

/// Raised by a graph operator whose output contains NaN or Inf.
class NonFinite : public Error {
 public:
  NonFinite(std::string op, const std::string& what)
      : Error(what), op_(std::move(op)) {}
  const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace syncforge
