#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctrepro/grid.hpp"
#include "ctrepro/observer_model.hpp"

namespace ctrepro {

// Grid-search recovery of a prior width shared by all conditions plus one
// Weber fraction per condition from observed error summaries.

enum class FitObjective {
  BiasCV,  // (bias - bias_hat)^2 + (cv - cv_hat)^2
  RI,      // (ri - ri_hat)^2
};

struct FitConfig {
  GridSpec sigma_p{0.1, 5.0, 0.05};
  GridSpec wf{0.0, 0.6, 0.005};
  MotorNoiseSpec motor{kReferenceMotorNoiseCm, MotorCombination::LinearCV};
  FitObjective objective = FitObjective::BiasCV;
  // Prior centre; defaults to the stimulus mean.
  std::optional<double> prior_mean;
  // Conditions forced to share a single Weber fraction. Empty: all free.
  std::vector<std::string> tied;
  // Summed residuals closer than this count as equal, and the smaller prior
  // width wins.
  double tie_tolerance = 1e-12;
  // BiasCV only: compare against the values the empirical pipeline is
  // expected to report with this many trials per stimulus
  // (expected_session_errors) instead of the population values.
  std::optional<std::size_t> trials_per_stimulus;
  unsigned threads = 1;

  // Throws ConfigError.
  void validate() const;
};

// One observed point. Group-mean fits pass one per condition; pooled fits
// pass one per participant session.
struct Observation {
  std::string condition;
  double bias = 0.0;
  double cv = 0.0;
  std::optional<double> ri;
};

struct ConditionFit {
  double wf = 0.0;
  double residual = 0.0;
  std::size_t n_points = 0;
  double predicted_bias = 0.0;
  double predicted_cv = 0.0;
  double predicted_ri = 0.0;
};

struct FitResult {
  double shared_sigma_p = 0.0;
  std::map<std::string, ConditionFit> per_condition;
  double residual = 0.0;
};

// Best total residual and per-condition choice at each prior width.
struct LandscapeRow {
  double sigma_p = 0.0;
  double total_residual = 0.0;
  std::map<std::string, ConditionFit> per_condition;
};

struct FitOutcome {
  FitResult result;
  std::vector<LandscapeRow> landscape;
};

// Exhaustive search: for each prior width, each condition (or tied group)
// takes the grid Weber fraction minimising its own residual, the first one
// on ties; the prior width with the smallest summed residual wins, the
// smallest on ties. Deterministic for any thread count. Throws DomainError
// on empty or non-finite observations, or RI objective without ri values.
FitOutcome fit_shared_prior_landscape(std::span<const Observation> observations,
                                      const StimulusSet& stimuli, const FitConfig& cfg);
FitResult fit_shared_prior(std::span<const Observation> observations, const StimulusSet& stimuli,
                           const FitConfig& cfg);

// Weber fraction per condition reproducing each observed regression index
// at a fixed prior width (wf_from_ri applied label by label).
std::map<std::string, double> wf_for_observed_ri(const std::map<std::string, double>& ri_by_condition,
                                                 double sigma_p, const StimulusSet& stimuli);

struct GoodnessOfFit {
  std::map<std::string, double> per_condition_residual;
  double total_residual = 0.0;
  // Refit with the `constrained_labels` sharing one Weber fraction.
  std::vector<std::string> constrained_labels;
  std::optional<FitResult> constrained;
  // constrained residual - unconstrained residual.
  std::optional<double> constraint_penalty;
};

// Residuals of `fit` against the observations, and the equal-Weber-fraction
// comparison for `tie` (skipped when it names fewer than 2 conditions).
// Throws DomainError when observation labels and fit labels differ.
GoodnessOfFit goodness_of_fit(const FitResult& fit, std::span<const Observation> observations,
                              const StimulusSet& stimuli, const FitConfig& cfg,
                              std::span<const std::string> tie);

// Reads observations from a CSV with a `condition` column and bias/cv (or
// bias_mean/cv_mean) columns; ri, ri_mean or regression_index is optional.
// Rows with excluded=1 are skipped.
std::vector<Observation> read_observations_csv(std::istream& in);
std::vector<Observation> read_observations_file(const std::filesystem::path& path);

void write_fit_report(std::ostream& out, const FitResult& fit, const FitConfig& cfg,
                      const GoodnessOfFit* gof);
// Wide table: sigma_p,total_residual,<label>_wf,<label>_residual,...
void write_landscape_csv(std::ostream& out, std::span<const LandscapeRow> landscape);

}  // namespace ctrepro
