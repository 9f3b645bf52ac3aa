#pragma once

namespace ctrepro {

// One-dimensional Gaussian over a length, in cm. Used for the sensory
// likelihood, the prior over the stimulus range, and the posterior percept.
struct GaussianBelief {
  double mean = 0.0;
  double sd = 0.0;

  // Throws DomainError when mean is not finite or sd is negative / NaN.
  void validate() const;
};

// Precision-weighted product of two Gaussians:
//   mean = (sd_p^2 * mean_l + sd_l^2 * mean_p) / (sd_l^2 + sd_p^2)
//   var  = sd_l^2 * sd_p^2 / (sd_l^2 + sd_p^2)
// A zero-sd argument is a point mass and wins outright. Two point masses
// at different means throw DegenerateError.
GaussianBelief fuse_gaussians(const GaussianBelief& likelihood, const GaussianBelief& prior);

}  // namespace ctrepro
