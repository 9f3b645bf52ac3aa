#pragma once

#include <span>

namespace ctrepro {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  // 0 when the responses have no variance to explain.
  double r_squared = 0.0;
};

// Ordinary least squares of y on x using centred sums. Shared by the model
// and the empirical pipeline so both compute the regression index with the
// same estimator. Throws DomainError on size mismatch or < 2 points and
// DegenerateError when all x are equal.
LinearFit ols_fit(std::span<const double> x, std::span<const double> y);

}  // namespace ctrepro
