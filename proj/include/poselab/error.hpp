#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace poselab {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix dimensions do not match what an operation expects.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent or out-of-range configuration (bad bin count, head mismatch...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// backward() was handed a cache that does not belong to the current weights/input.
class StaleActivationError : public Error {
 public:
  using Error::Error;
};

/// A non-finite gradient or loss appeared during optimization.
class DivergedError : public Error {
 public:
  DivergedError(const std::string& what, std::size_t parameter_index)
      : Error(what), parameter_index_(parameter_index) {}

  std::size_t parameter_index() const noexcept { return parameter_index_; }

 private:
  std::size_t parameter_index_;
};

/// Malformed input file. `line` is 1-based, `record` is the 0-based data record.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t record)
      : Error(what), line_(line), record_(record) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t record() const noexcept { return record_; }

 private:
  std::size_t line_;
  std::size_t record_;
};

}  // namespace poselab
