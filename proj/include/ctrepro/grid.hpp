#pragma once

#include <vector>

namespace ctrepro {

// Inclusive range lo, lo+step, ... <= hi (with 1e-9 step slack at the top).
// Point i is computed as lo + i*step, so halving the step reproduces every
// original point exactly. Throws ConfigError on step <= 0 or hi < lo.
std::vector<double> linear_grid(double lo, double hi, double step);

struct GridSpec {
  double min = 0.0;
  double max = 0.0;
  double step = 1.0;

  std::vector<double> values() const { return linear_grid(min, max, step); }
};

}  // namespace ctrepro
