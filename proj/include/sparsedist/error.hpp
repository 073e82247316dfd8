#pragma once

#include <stdexcept>
#include <string>

namespace sparsedist {

// Base of every error raised by the library. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error("dimension error: " + what) {}
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& what) : Error("parameter error: " + what) {}
};

class DegenerateInputError : public Error {
 public:
  explicit DegenerateInputError(const std::string& what) : Error("degenerate input: " + what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error("numeric error: " + what) {}
};

class LookupError : public Error {
 public:
  explicit LookupError(const std::string& what) : Error("lookup error: " + what) {}
};

class BackendError : public Error {
 public:
  explicit BackendError(const std::string& what) : Error("backend error: " + what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io error: " + what) {}
};

}  // namespace sparsedist
