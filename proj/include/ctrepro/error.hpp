#pragma once

#include <stdexcept>
#include <string>

namespace ctrepro {

// Invalid argument or precondition violated (negative sd, empty set, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid user-supplied configuration (schedule ranges, grids, labels).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation whose inputs carry no information for it: zero-variance
// test statistics, regressions on a single x value, fusing two point masses.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bisection target outside what the bracket can reach.
class BracketError : public std::runtime_error {
 public:
  BracketError(const std::string& what, double lo_value, double hi_value)
      : std::runtime_error(what), lo_value_(lo_value), hi_value_(hi_value) {}

  // Achievable range of the searched function over the bracket.
  double lo_value() const noexcept { return lo_value_; }
  double hi_value() const noexcept { return hi_value_; }

 private:
  double lo_value_;
  double hi_value_;
};

// Malformed CSV input. Row numbers are 1-based and count the header as row 1.
class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ctrepro
