#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lipgraph {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an input (instance, parameter, perturbation) failed.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Malformed instance or report text; carries the 1-based line number.
class ParseError : public ValidationError {
public:
  ParseError(std::size_t line, const std::string &what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// An iterative method hit its iteration cap. The last iterate is kept for
/// diagnostics.
class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string &what, std::vector<double> last_iterate = {})
      : Error(what), last_(std::move(last_iterate)) {}
  [[nodiscard]] const std::vector<double> &last_iterate() const noexcept { return last_; }

private:
  std::vector<double> last_;
};

/// NaN or infinity showed up in a callback.
class NumericError : public Error {
public:
  using Error::Error;
};

inline void require(bool cond, const std::string &msg) {
  if (!cond) throw ValidationError(msg);
}

} // namespace lipgraph
