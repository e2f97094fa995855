#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace maglab {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A point left the open unit disk, or an argument is outside its domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Fundamental-domain reduction did not terminate within the word budget.
class OutOfReachError : public Error {
 public:
  using Error::Error;
};

// Integration or linearization failed (step underflow, overflow).
class IntegrationError : public Error {
 public:
  using Error::Error;
};

// Iterative procedure did not converge. Carries the last iterates.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last)
      : Error(what), last_iterates(std::move(last)) {}
  std::vector<double> last_iterates;
};

// A hypothesis of the experiment (curvature / magnetic margin) is violated.
class HypothesisViolation : public Error {
 public:
  HypothesisViolation(const std::string& hypothesis, const std::string& detail)
      : Error("hypothesis violated: " + hypothesis + " (" + detail + ")"),
        hypothesis(hypothesis) {}
  std::string hypothesis;
};

// Finite-difference sample dominated by round-off.
class UnreliableSample : public Error {
 public:
  UnreliableSample(const std::string& what, double coarse, double fine)
      : Error(what), coarse_value(coarse), fine_value(fine) {}
  double coarse_value;
  double fine_value;
};

// Transversals of an adapted chart do not intersect within the time cap.
class ChartMismatch : public Error {
 public:
  using Error::Error;
};

// Mode content reached the top of the fiber band.
class BandOverflow : public Error {
 public:
  using Error::Error;
};

}  // namespace maglab
