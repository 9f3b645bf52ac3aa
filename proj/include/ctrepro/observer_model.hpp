#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ctrepro/gaussian.hpp"

namespace ctrepro {

// Closed-form Bayesian observer for length reproduction. The observer fuses
// a Gaussian sensory likelihood centred on the stimulus with a Gaussian
// prior over the stimulus range; the response is the posterior mean plus
// optional non-sensory motor noise. All functions here are pure.

enum class NoiseMode { Weber, Constant };

// Sensory noise. Weber: sd = magnitude * stimulus (magnitude is the Weber
// fraction). Constant: sd = magnitude cm regardless of stimulus.
struct NoiseModel {
  NoiseMode mode = NoiseMode::Weber;
  double magnitude = 0.0;

  static NoiseModel weber(double fraction) { return {NoiseMode::Weber, fraction}; }
  static NoiseModel constant(double sd_cm) { return {NoiseMode::Constant, sd_cm}; }

  void validate() const;
  bool is_zero() const { return magnitude == 0.0; }
  // Weber fractions above 0.6 are legal but outside the range the reference
  // curves sweep.
  bool outside_reference_range() const { return mode == NoiseMode::Weber && magnitude > 0.6; }
};

// Sensory sd at a given stimulus length. Throws DomainError for stimulus <= 0.
double sigma_l_at(const NoiseModel& noise, double stimulus);

// Ordered stimulus lengths (cm) of one session and their arithmetic mean.
// A single length is accepted; operations that regress on the stimuli
// require at least two distinct values and check it themselves.
class StimulusSet {
 public:
  explicit StimulusSet(std::vector<double> lengths);

  // n lengths min, min+step, ...
  static StimulusSet evenly_spaced(std::size_t n, double min_length, double step);
  // 11 lengths from 6 to 14 cm in 0.8 cm steps; mean 10 cm.
  static StimulusSet standard();

  std::span<const double> lengths() const { return lengths_; }
  double mean() const { return mean_; }
  std::size_t size() const { return lengths_.size(); }
  bool has_distinct_values() const;

 private:
  std::vector<double> lengths_;
  double mean_ = 0.0;
};

enum class MotorCombination {
  // Motor variance adds to the sensory response variance per stimulus.
  Quadrature,
  // sd / mean_stimulus is added to the averaged normalised CV.
  LinearCV,
};

// Stimulus-independent response noise.
struct MotorNoiseSpec {
  double sd_cm = 0.0;
  MotorCombination combination = MotorCombination::LinearCV;

  void validate() const;
};

// Non-sensory motor noise used by the reference model curves, in cm. On a
// 10 cm mean stimulus this is 0.12 of normalised CV.
inline constexpr double kReferenceMotorNoiseCm = 1.2;

struct StimulusPrediction {
  double stimulus = 0.0;
  double mean_response = 0.0;
  // Under LinearCV this is the sensory part only; motor noise is added to
  // the aggregate CV by predict_errors.
  double response_sd = 0.0;
};

struct ErrorPrediction {
  double bias = 0.0;
  double cv = 0.0;
  double rmse = 0.0;
};

struct ModelPrediction {
  std::vector<StimulusPrediction> per_stimulus;
  // Absent when the stimulus set has a single distinct value.
  std::optional<double> regression_index;
  double bias_norm = 0.0;
  double cv_norm = 0.0;
  double rmse_norm = 0.0;
};

// Per stimulus s, with w = sd_p^2 / (sd_p^2 + sd_l(s)^2):
//   mean_response = w*s + (1-w)*prior.mean
//   response_sd   = sqrt(w^2 sd_l(s)^2 + motor^2)   (Quadrature)
//                 = w * sd_l(s)                      (LinearCV)
// The fusion weight uses sd_l at the true stimulus, not at the measurement.
std::vector<StimulusPrediction> predict_per_stimulus(const NoiseModel& noise,
                                                     const GaussianBelief& prior,
                                                     const StimulusSet& stimuli,
                                                     const MotorNoiseSpec& motor);

// 1 - OLS slope of the predicted mean responses on the stimuli.
double predict_regression_index(const NoiseModel& noise, const GaussianBelief& prior,
                                const StimulusSet& stimuli);

// Normalised bias and CV averaged uniformly over stimuli, and their
// root-sum-square.
ErrorPrediction predict_errors(const NoiseModel& noise, const GaussianBelief& prior,
                               const StimulusSet& stimuli, const MotorNoiseSpec& motor);

ModelPrediction predict(const NoiseModel& noise, const GaussianBelief& prior,
                        const StimulusSet& stimuli, const MotorNoiseSpec& motor);

// What the empirical pipeline is expected to report for a balanced session
// with n trials per stimulus, rather than the population values above:
// per-stimulus offsets are centred as the debias step does, bias_i is the
// folded-normal mean of the centred group mean's offset (its variance
// including the noise of the session mean), and cv_i the expected divide-by-N
// sd, sd * sqrt((n-1)/n) * c4(n). Under LinearCV the motor noise adds to each
// stimulus's sd linearly. rmse is the mean of the per-stimulus
// root-sum-squares of those expectations.
// Throws DomainError for n == 0.
ErrorPrediction expected_session_errors(const NoiseModel& noise, const GaussianBelief& prior,
                                        const StimulusSet& stimuli, const MotorNoiseSpec& motor,
                                        std::size_t trials_per_stimulus);

// ---------------------------------------------------------------------------
// Curves and surfaces over the Weber fraction. The prior is centred on the
// stimulus mean unless stated otherwise.

inline constexpr double kReferencePriorSds[] = {0.5, 1.5, 2.5, 3.5};
inline constexpr double kReferenceWfMax = 0.6;
inline constexpr double kReferenceWfStep = 0.005;

struct ErrorCurvePoint {
  double wf = 0.0;
  double bias = 0.0;
  double cv = 0.0;
};

struct RiCurvePoint {
  double wf = 0.0;
  double ri = 0.0;
};

std::vector<ErrorCurvePoint> error_curve(double prior_sd, std::span<const double> wf_grid,
                                         const StimulusSet& stimuli, const MotorNoiseSpec& motor);

std::vector<RiCurvePoint> ri_curve(double prior_sd, std::span<const double> wf_grid,
                                   const StimulusSet& stimuli);

// Weber fraction whose predicted regression index equals target_ri, by
// bisection over [0, wf_max]. The result reproduces the target to 1e-9.
// Throws DomainError unless 0 <= target_ri < 1 and prior_sd > 0, and
// BracketError when the target exceeds the index reachable at wf_max.
double wf_from_ri(double target_ri, double prior_sd, const StimulusSet& stimuli,
                  double wf_max = 10.0);

inline constexpr double kPriorSdSearchMin = 1e-3;
inline constexpr double kPriorSdSearchMax = 1e3;

// Prior width giving regression index target_ri at a fixed Weber fraction,
// by bisection on log(sd_p) over [kPriorSdSearchMin, kPriorSdSearchMax].
// nullopt when the target is not reachable on that bracket.
std::optional<double> prior_sd_from_ri(double target_ri, double wf, double prior_mean,
                                       const StimulusSet& stimuli);

// RMSE over a (wf, ri) grid. For every cell the prior width is solved from
// ri, the model RMSE is evaluated, and each wf column is divided by its
// smallest defined value. Unreachable cells stay empty.
struct RmseSurface {
  std::vector<double> wf;
  std::vector<double> ri;
  // Row-major: cells[i_wf * ri.size() + j_ri].
  std::vector<std::optional<double>> cells;

  const std::optional<double>& at(std::size_t i_wf, std::size_t j_ri) const {
    return cells[i_wf * ri.size() + j_ri];
  }
};

RmseSurface rmse_surface(std::span<const double> wf_grid, std::span<const double> ri_grid,
                         const StimulusSet& stimuli, const MotorNoiseSpec& motor,
                         double prior_mean, unsigned threads = 1);

}  // namespace ctrepro
