#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mcghd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of a function (x <= 0, NaN, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed user input: dimensions, labels, files.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A non-finite intermediate appeared during evaluation or fitting.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// The fit collapsed (starved component, persistent non-finite likelihood).
/// Carries the log-likelihood trace recorded up to the failure.
class DegenerateFitError : public Error {
 public:
  DegenerateFitError(const std::string& what, std::vector<double> partial_trace)
      : Error(what), partial_trace_(std::move(partial_trace)) {}

  const std::vector<double>& partial_trace() const noexcept { return partial_trace_; }

 private:
  std::vector<double> partial_trace_;
};

}  // namespace mcghd
