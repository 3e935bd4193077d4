#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gradvi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument, precondition violation or dimension mismatch.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative routine could not bracket or reach its target.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::size_t index)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Non-finite objective or gradient at an accepted point.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::vector<double> iterate)
      : Error(what), iterate_(std::move(iterate)) {}
  const std::vector<double>& iterate() const noexcept { return iterate_; }

 private:
  std::vector<double> iterate_;
};

/// A query fell outside the range a tabulated approximation covers.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Broken internal invariant (e.g. a non-monotone shrinkage operator).
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace gradvi
