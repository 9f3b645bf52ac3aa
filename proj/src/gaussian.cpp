#include "ctrepro/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ctrepro/error.hpp"

namespace ctrepro {

void GaussianBelief::validate() const {
  if (!std::isfinite(mean)) {
    throw DomainError("gaussian mean must be finite");
  }
  if (!(sd >= 0.0) || !std::isfinite(sd)) {
    throw DomainError("gaussian sd must be finite and >= 0, got " + std::to_string(sd));
  }
}

GaussianBelief fuse_gaussians(const GaussianBelief& likelihood, const GaussianBelief& prior) {
  likelihood.validate();
  prior.validate();

  if (likelihood.sd == 0.0 && prior.sd == 0.0) {
    if (likelihood.mean != prior.mean) {
      throw DegenerateError("cannot fuse two zero-width gaussians with different means");
    }
    return likelihood;
  }
  if (likelihood.sd == 0.0) return likelihood;
  if (prior.sd == 0.0) return prior;

  const double var_l = likelihood.sd * likelihood.sd;
  const double var_p = prior.sd * prior.sd;
  const double total = var_l + var_p;
  // Symmetric in its arguments bit for bit; the clamps absorb rounding so the
  // shrinkage bounds hold exactly.
  GaussianBelief out;
  out.mean = (var_p * likelihood.mean + var_l * prior.mean) / total;
  out.mean = std::clamp(out.mean, std::min(likelihood.mean, prior.mean),
                        std::max(likelihood.mean, prior.mean));
  out.sd = std::min(std::sqrt(var_l * var_p / total), std::min(likelihood.sd, prior.sd));
  return out;
}

}  // namespace ctrepro
