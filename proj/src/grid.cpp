#include "ctrepro/grid.hpp"

#include <cmath>
#include <cstddef>

#include "ctrepro/error.hpp"

namespace ctrepro {

std::vector<double> linear_grid(double lo, double hi, double step) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(step)) {
    throw ConfigError("grid bounds must be finite");
  }
  if (!(step > 0.0)) throw ConfigError("grid step must be > 0");
  if (hi < lo) throw ConfigError("grid max must be >= grid min");

  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(lo + static_cast<double>(i) * step);
  }
  return out;
}

}  // namespace ctrepro
