#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lcgmm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input: bad files, non-finite points,
/// invalid configuration values.
class InputError : public Error {
 public:
  using Error::Error;
};

/// The numerics broke down: posterior collapse, degenerate rotation, a
/// vanishing weight sum.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Every scanned point was assigned to the uniform outlier component, so
/// the M-step has no weight to work with.
class PosteriorCollapse : public NumericalError {
 public:
  PosteriorCollapse(double outlier_weight, std::size_t iteration)
      : NumericalError("posterior collapse onto the outlier component (omega = " +
                       std::to_string(outlier_weight) + ", iteration " +
                       std::to_string(iteration) + ")"),
        outlier_weight_(outlier_weight),
        iteration_(iteration) {}

  double outlier_weight() const noexcept { return outlier_weight_; }
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  double outlier_weight_;
  std::size_t iteration_;
};

/// The rotation cross-covariance vanished numerically.
class DegenerateRotation : public NumericalError {
 public:
  explicit DegenerateRotation(std::size_t iteration)
      : NumericalError("rotation cross-covariance is numerically zero at iteration " +
                       std::to_string(iteration)),
        iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace lcgmm
