#ifndef QUALGATE_ERRORS_HPP_
#define QUALGATE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace qualgate {

/// Base of every error thrown by the library. The CLI maps these to exit 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Bad input records; carries the 1-based line number when one applies.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Numerical failure: rank deficiency, non-convergence, non-finite values.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ModelFormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace qualgate

#endif  // QUALGATE_ERRORS_HPP_
