#include "ctrepro/observer_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ctrepro/error.hpp"
#include "ctrepro/ols.hpp"
#include "ctrepro/parallel.hpp"

namespace ctrepro {

void NoiseModel::validate() const {
  if (!(magnitude >= 0.0) || !std::isfinite(magnitude)) {
    throw DomainError("noise magnitude must be finite and >= 0");
  }
}

double sigma_l_at(const NoiseModel& noise, double stimulus) {
  noise.validate();
  if (!(stimulus > 0.0)) {
    throw DomainError("stimulus must be > 0, got " + std::to_string(stimulus));
  }
  return noise.mode == NoiseMode::Weber ? noise.magnitude * stimulus : noise.magnitude;
}

StimulusSet::StimulusSet(std::vector<double> lengths) : lengths_(std::move(lengths)) {
  if (lengths_.empty()) throw DomainError("stimulus set is empty");
  // Compensated (Neumaier) sum, so that e.g. 6, 6.8, ..., 14 averages to
  // exactly 10.
  double sum = 0.0;
  double carry = 0.0;
  for (double s : lengths_) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw DomainError("stimulus lengths must be finite and > 0");
    }
    const double t = sum + s;
    carry += std::abs(sum) >= std::abs(s) ? (sum - t) + s : (s - t) + sum;
    sum = t;
  }
  mean_ = (sum + carry) / static_cast<double>(lengths_.size());
}

StimulusSet StimulusSet::evenly_spaced(std::size_t n, double min_length, double step) {
  if (n == 0) throw DomainError("stimulus set is empty");
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(min_length + static_cast<double>(i) * step);
  }
  return StimulusSet(std::move(out));
}

StimulusSet StimulusSet::standard() { return evenly_spaced(11, 6.0, 0.8); }

bool StimulusSet::has_distinct_values() const {
  return std::any_of(lengths_.begin(), lengths_.end(),
                     [&](double s) { return s != lengths_.front(); });
}

void MotorNoiseSpec::validate() const {
  if (!(sd_cm >= 0.0) || !std::isfinite(sd_cm)) {
    throw DomainError("motor noise sd must be finite and >= 0");
  }
}

namespace {

// Weight on the sensory evidence.
double likelihood_weight(double sd_l, double sd_p) {
  if (sd_l == 0.0) return 1.0;
  const double var_p = sd_p * sd_p;
  return var_p / (var_p + sd_l * sd_l);
}

void check_model_inputs(const NoiseModel& noise, const GaussianBelief& prior) {
  noise.validate();
  prior.validate();
  if (prior.sd == 0.0 && !noise.is_zero()) {
    throw DomainError("prior sd must be > 0 when sensory noise is nonzero");
  }
}

}  // namespace

std::vector<StimulusPrediction> predict_per_stimulus(const NoiseModel& noise,
                                                     const GaussianBelief& prior,
                                                     const StimulusSet& stimuli,
                                                     const MotorNoiseSpec& motor) {
  check_model_inputs(noise, prior);
  motor.validate();

  std::vector<StimulusPrediction> out;
  out.reserve(stimuli.size());
  for (double s : stimuli.lengths()) {
    const double sd_l = sigma_l_at(noise, s);
    const double w = likelihood_weight(sd_l, prior.sd);
    StimulusPrediction p;
    p.stimulus = s;
    p.mean_response = w * s + (1.0 - w) * prior.mean;
    const double sensory_sd = w * sd_l;
    p.response_sd = motor.combination == MotorCombination::Quadrature
                        ? std::sqrt(sensory_sd * sensory_sd + motor.sd_cm * motor.sd_cm)
                        : sensory_sd;
    out.push_back(p);
  }
  return out;
}

namespace {

double regression_index_of(std::span<const StimulusPrediction> per_stimulus) {
  std::vector<double> x;
  std::vector<double> y;
  x.reserve(per_stimulus.size());
  y.reserve(per_stimulus.size());
  for (const auto& p : per_stimulus) {
    x.push_back(p.stimulus);
    y.push_back(p.mean_response);
  }
  return 1.0 - ols_fit(x, y).slope;
}

ErrorPrediction errors_of(std::span<const StimulusPrediction> per_stimulus,
                          double mean_stimulus, const MotorNoiseSpec& motor) {
  double bias = 0.0;
  double cv = 0.0;
  for (const auto& p : per_stimulus) {
    bias += std::abs(p.mean_response - p.stimulus) / mean_stimulus;
    cv += p.response_sd / mean_stimulus;
  }
  const auto n = static_cast<double>(per_stimulus.size());
  ErrorPrediction e;
  e.bias = bias / n;
  e.cv = cv / n;
  if (motor.combination == MotorCombination::LinearCV) {
    e.cv += motor.sd_cm / mean_stimulus;
  }
  e.rmse = std::hypot(e.bias, e.cv);
  return e;
}

}  // namespace

double predict_regression_index(const NoiseModel& noise, const GaussianBelief& prior,
                                const StimulusSet& stimuli) {
  if (!stimuli.has_distinct_values()) {
    throw DomainError("regression index needs at least 2 distinct stimuli");
  }
  const auto per = predict_per_stimulus(noise, prior, stimuli, MotorNoiseSpec{});
  return regression_index_of(per);
}

ErrorPrediction predict_errors(const NoiseModel& noise, const GaussianBelief& prior,
                               const StimulusSet& stimuli, const MotorNoiseSpec& motor) {
  const auto per = predict_per_stimulus(noise, prior, stimuli, motor);
  return errors_of(per, stimuli.mean(), motor);
}

ModelPrediction predict(const NoiseModel& noise, const GaussianBelief& prior,
                        const StimulusSet& stimuli, const MotorNoiseSpec& motor) {
  ModelPrediction out;
  out.per_stimulus = predict_per_stimulus(noise, prior, stimuli, motor);
  if (stimuli.has_distinct_values()) {
    out.regression_index = regression_index_of(out.per_stimulus);
  }
  const auto e = errors_of(out.per_stimulus, stimuli.mean(), motor);
  out.bias_norm = e.bias;
  out.cv_norm = e.cv;
  out.rmse_norm = e.rmse;
  return out;
}

namespace {

// E|X| for X ~ N(mu, sd^2).
double folded_normal_mean(double mu, double sd) {
  if (sd == 0.0) return std::abs(mu);
  const double z = mu / sd;
  return sd * std::sqrt(2.0 / M_PI) * std::exp(-0.5 * z * z) + mu * std::erf(z / std::sqrt(2.0));
}

// E[population sd] / sigma for n normal draws.
double population_sd_factor(std::size_t n) {
  if (n < 2) return 0.0;
  const double m = static_cast<double>(n);
  const double c4 = std::sqrt(2.0 / (m - 1.0)) * std::exp(std::lgamma(m / 2.0) - std::lgamma((m - 1.0) / 2.0));
  return std::sqrt((m - 1.0) / m) * c4;
}

}  // namespace

ErrorPrediction expected_session_errors(const NoiseModel& noise, const GaussianBelief& prior,
                                        const StimulusSet& stimuli, const MotorNoiseSpec& motor,
                                        std::size_t trials_per_stimulus) {
  if (trials_per_stimulus == 0) throw DomainError("trials per stimulus must be >= 1");
  const auto per = predict_per_stimulus(noise, prior, stimuli, motor);
  const double n = static_cast<double>(trials_per_stimulus);
  const double k = static_cast<double>(per.size());
  const double mean_stimulus = stimuli.mean();

  std::vector<double> sd(per.size());
  double centre = 0.0;
  double mean_var = 0.0;  // mean over stimuli of Var(group mean)
  for (std::size_t i = 0; i < per.size(); ++i) {
    sd[i] = motor.combination == MotorCombination::LinearCV ? per[i].response_sd + motor.sd_cm : per[i].response_sd;
    centre += (per[i].mean_response - per[i].stimulus) / k;
    mean_var += sd[i] * sd[i] / n / k;
  }
  const double sd_factor = population_sd_factor(trials_per_stimulus);

  ErrorPrediction e;
  for (std::size_t i = 0; i < per.size(); ++i) {
    const auto& p = per[i];
    // Group mean minus the session mean: Var = v_i (1 - 2/k) + mean(v) / k.
    const double v = sd[i] * sd[i] / n;
    const double spread = std::sqrt(std::max(0.0, v * (1.0 - 2.0 / k) + mean_var / k));
    const double bias = folded_normal_mean(p.mean_response - p.stimulus - centre, spread) / mean_stimulus;
    const double cv = sd[i] * sd_factor / mean_stimulus;
    e.bias += bias / k;
    e.cv += cv / k;
    e.rmse += std::hypot(bias, cv) / k;
  }
  return e;
}

// ---------------------------------------------------------------------------

namespace {

void check_wf_grid(std::span<const double> wf_grid) {
  if (wf_grid.empty()) throw DomainError("wf grid is empty");
  for (double wf : wf_grid) {
    if (!(wf >= 0.0) || !std::isfinite(wf)) {
      throw DomainError("wf grid values must be finite and >= 0");
    }
  }
}

}  // namespace

std::vector<ErrorCurvePoint> error_curve(double prior_sd, std::span<const double> wf_grid,
                                         const StimulusSet& stimuli,
                                         const MotorNoiseSpec& motor) {
  check_wf_grid(wf_grid);
  const GaussianBelief prior{stimuli.mean(), prior_sd};
  std::vector<ErrorCurvePoint> out;
  out.reserve(wf_grid.size());
  for (double wf : wf_grid) {
    const auto e = predict_errors(NoiseModel::weber(wf), prior, stimuli, motor);
    out.push_back({wf, e.bias, e.cv});
  }
  return out;
}

std::vector<RiCurvePoint> ri_curve(double prior_sd, std::span<const double> wf_grid,
                                   const StimulusSet& stimuli) {
  check_wf_grid(wf_grid);
  const GaussianBelief prior{stimuli.mean(), prior_sd};
  std::vector<RiCurvePoint> out;
  out.reserve(wf_grid.size());
  for (double wf : wf_grid) {
    out.push_back({wf, predict_regression_index(NoiseModel::weber(wf), prior, stimuli)});
  }
  return out;
}

namespace {

constexpr int kMaxBisections = 400;

}  // namespace

double wf_from_ri(double target_ri, double prior_sd, const StimulusSet& stimuli,
                  double wf_max) {
  if (!(target_ri >= 0.0 && target_ri < 1.0)) {
    throw DomainError("target regression index must lie in [0, 1)");
  }
  if (!(prior_sd > 0.0) || !std::isfinite(prior_sd)) {
    throw DomainError("prior sd must be > 0");
  }
  if (!(wf_max > 0.0) || !std::isfinite(wf_max)) {
    throw DomainError("wf search bracket must be > 0");
  }
  if (target_ri == 0.0) return 0.0;

  const GaussianBelief prior{stimuli.mean(), prior_sd};
  auto ri_at = [&](double wf) {
    return predict_regression_index(NoiseModel::weber(wf), prior, stimuli);
  };

  const double ri_hi = ri_at(wf_max);
  if (target_ri > ri_hi) {
    throw BracketError("target regression index " + std::to_string(target_ri) +
                           " not reachable for wf in [0, " + std::to_string(wf_max) +
                           "]; achievable range [0, " + std::to_string(ri_hi) + "]",
                       0.0, ri_hi);
  }

  // Invariant: ri(lo) < target <= ri(hi).
  double lo = 0.0;
  double hi = wf_max;
  for (int i = 0; i < kMaxBisections; ++i) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (ri_at(mid) < target_ri) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::abs(ri_at(lo) - target_ri) < std::abs(ri_at(hi) - target_ri) ? lo : hi;
}

std::optional<double> prior_sd_from_ri(double target_ri, double wf, double prior_mean,
                                       const StimulusSet& stimuli) {
  if (!std::isfinite(target_ri)) return std::nullopt;
  const auto noise = NoiseModel::weber(wf);
  auto ri_at_log = [&](double log_sd) {
    return predict_regression_index(noise, GaussianBelief{prior_mean, std::exp(log_sd)},
                                    stimuli);
  };

  // Regression index decreases as the prior widens.
  double lo = std::log(kPriorSdSearchMin);
  double hi = std::log(kPriorSdSearchMax);
  const double ri_narrow = ri_at_log(lo);
  const double ri_wide = ri_at_log(hi);
  if (target_ri > ri_narrow || target_ri < ri_wide) return std::nullopt;

  for (int i = 0; i < kMaxBisections; ++i) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (ri_at_log(mid) > target_ri) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::exp(lo + 0.5 * (hi - lo));
}

RmseSurface rmse_surface(std::span<const double> wf_grid, std::span<const double> ri_grid,
                         const StimulusSet& stimuli, const MotorNoiseSpec& motor,
                         double prior_mean, unsigned threads) {
  check_wf_grid(wf_grid);
  if (ri_grid.empty()) throw DomainError("ri grid is empty");
  for (double ri : ri_grid) {
    if (!(ri >= 0.0 && ri < 1.0)) throw DomainError("ri grid values must lie in [0, 1)");
  }
  if (!stimuli.has_distinct_values()) {
    throw DomainError("rmse surface needs at least 2 distinct stimuli");
  }
  motor.validate();

  RmseSurface out;
  out.wf.assign(wf_grid.begin(), wf_grid.end());
  out.ri.assign(ri_grid.begin(), ri_grid.end());
  out.cells.resize(out.wf.size() * out.ri.size());

  const std::size_t n_ri = out.ri.size();
  parallel_for(out.wf.size(), threads, [&](std::size_t i) {
    const double wf = out.wf[i];
    double column_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n_ri; ++j) {
      const auto sd_p = prior_sd_from_ri(out.ri[j], wf, prior_mean, stimuli);
      if (!sd_p) continue;
      const double rmse =
          predict_errors(NoiseModel::weber(wf), GaussianBelief{prior_mean, *sd_p}, stimuli,
                         motor)
              .rmse;
      out.cells[i * n_ri + j] = rmse;
      column_min = std::min(column_min, rmse);
    }
    for (std::size_t j = 0; j < n_ri; ++j) {
      auto& cell = out.cells[i * n_ri + j];
      if (!cell) continue;
      // A zero-error column (no sensory or motor noise) is flat at 1.
      cell = column_min > 0.0 ? *cell / column_min : 1.0;
    }
  });
  return out;
}

}  // namespace ctrepro
