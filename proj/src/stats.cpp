#include "ctrepro/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ctrepro/error.hpp"

namespace ctrepro {

double mean_of(std::span<const double> values) {
  if (values.empty()) throw DomainError("mean of an empty sample");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

namespace {

double sum_sq_dev(std::span<const double> values) {
  const double m = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return ss;
}

std::vector<double> differences(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("paired samples differ in length");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

void check_testable(std::span<const double> values, double sd) {
  if (values.size() < 2) throw DomainError("t-test needs at least 2 values");
  if (sd == 0.0) throw DegenerateError("t-test on a zero-variance sample");
}

}  // namespace

double population_sd(std::span<const double> values) {
  return std::sqrt(sum_sq_dev(values) / static_cast<double>(values.size()));
}

double sample_sd(std::span<const double> values) {
  if (values.size() < 2) throw DomainError("sample sd needs at least 2 values");
  return std::sqrt(sum_sq_dev(values) / static_cast<double>(values.size() - 1));
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw DomainError("t distribution needs df > 0");
  if (std::isnan(t)) throw DomainError("t statistic is NaN");
  if (std::isinf(t)) return 0.0;
  const boost::math::students_t_distribution<double> dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(dist, -std::abs(t)));
}

TTestResult one_sample_t(std::span<const double> values, double mu0) {
  if (values.size() < 2) throw DomainError("t-test needs at least 2 values");
  const double sd = sample_sd(values);
  check_testable(values, sd);
  const auto n = static_cast<double>(values.size());
  TTestResult r;
  r.t = (mean_of(values) - mu0) / (sd / std::sqrt(n));
  r.df = n - 1.0;
  r.p_two_sided = student_t_two_sided_p(r.t, r.df);
  return r;
}

TTestResult paired_t(std::span<const double> a, std::span<const double> b) {
  const auto d = differences(a, b);
  return one_sample_t(d, 0.0);
}

double cohens_d_one_sample(std::span<const double> values, double mu0) {
  if (values.size() < 2) throw DomainError("effect size needs at least 2 values");
  const double sd = sample_sd(values);
  check_testable(values, sd);
  return (mean_of(values) - mu0) / sd;
}

double cohens_d_paired(std::span<const double> a, std::span<const double> b) {
  const auto d = differences(a, b);
  return cohens_d_one_sample(d, 0.0);
}

}  // namespace ctrepro
