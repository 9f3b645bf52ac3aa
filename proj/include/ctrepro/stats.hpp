#pragma once

#include <span>

namespace ctrepro {

double mean_of(std::span<const double> values);
// Divides by N.
double population_sd(std::span<const double> values);
// Divides by N - 1; needs at least 2 values.
double sample_sd(std::span<const double> values);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p_two_sided = 1.0;
};

// Two-sided p-value of a Student t statistic: 2 * F(-|t|; df), with F the
// t CDF as evaluated by Boost.Math (regularised incomplete beta).
double student_t_two_sided_p(double t, double df);

// t = (mean - mu0) / (sd / sqrt(n)), sd the sample sd, df = n - 1.
// Throw DomainError for n < 2 and DegenerateError for zero sd.
TTestResult one_sample_t(std::span<const double> values, double mu0);
// One-sample test of a - b against 0. DomainError on length mismatch.
TTestResult paired_t(std::span<const double> a, std::span<const double> b);

// (mean - mu0) / sd and mean(a - b) / sd(a - b), sample sds.
double cohens_d_one_sample(std::span<const double> values, double mu0);
double cohens_d_paired(std::span<const double> a, std::span<const double> b);

}  // namespace ctrepro
