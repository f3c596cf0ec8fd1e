#pragma once

#include <stdexcept>
#include <string>

namespace mhmm {

// Dataset/parameter shape incompatibility (covariate length vs beta, borrower
// counts, empty series, out-of-range borrower index).
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Mathematically invalid input: non-positive rates or scales, degenerate chains.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Non-finite intermediate in a recursion; carries the step index that produced it.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, long step)
      : std::runtime_error(what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

// Malformed user input: bad files, bad state values, inconsistent configuration.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Sampler could not start (e.g. non-finite log-posterior at the initial point).
struct InitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem failures.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mhmm
