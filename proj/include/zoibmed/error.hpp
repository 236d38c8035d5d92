#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace zoibmed {

/// Argument outside the support of a distribution or function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Iterative routine ran out of iterations.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double lo = 0.0, double hi = 0.0)
      : std::runtime_error(what), lo_(lo), hi_(hi) {}
  double bracket_lo() const noexcept { return lo_; }
  double bracket_hi() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

/// Logistic fit diverging because the classes are (quasi-)separated.
class SeparationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input data. `row()` is the 0-based data row, or npos when the
/// problem is not tied to a single row.
class DataError : public std::runtime_error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  explicit DataError(const std::string& what, std::size_t row = npos)
      : std::runtime_error(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace zoibmed
