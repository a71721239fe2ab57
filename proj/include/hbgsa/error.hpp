//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <stdexcept>
#include <string>

namespace hbgsa {

// Every error raised by the library derives from Error. The kind decides the
// CLI exit code: usage/config problems, bad input data, or numeric failure.
enum class ErrorKind {
  kConfig,
  kData,
  kNumeric,
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) { }

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string &what)
      : Error(ErrorKind::kConfig, what) { }
};

class ShapeError : public Error {
public:
  explicit ShapeError(const std::string &what)
      : Error(ErrorKind::kConfig, what) { }
};

class DataError : public Error {
public:
  explicit DataError(const std::string &what)
      : Error(ErrorKind::kData, what) { }
};

class ParseError : public DataError {
public:
  ParseError(const std::string &what, int line)
      : DataError(line > 0 ? "line " + std::to_string(line) + ": " + what
                           : what),
        line_(line) { }

  int line() const noexcept { return line_; }

private:
  int line_;
};

class NotFoundError : public DataError {
public:
  using DataError::DataError;
};

class NumericError : public Error {
public:
  explicit NumericError(const std::string &what)
      : Error(ErrorKind::kNumeric, what) { }
};

}  // namespace hbgsa
