#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctrepro/stats.hpp"
#include "ctrepro/trial_record.hpp"

namespace ctrepro {

// ---------------------------------------------------------------------------
// Per-session error decomposition

// Removes a constant response offset: response' = response - mean(response)
// + mean(actual_length). Throws DomainError on an empty session.
std::vector<TrialRecord> debias_session(std::span<const TrialRecord> session);

struct StimulusError {
  double nominal = 0.0;
  double mean_stimulus = 0.0;  // mean actual length of the group
  double mean_response = 0.0;
  std::size_t n = 0;
  double bias = 0.0;  // |mean_response - mean_stimulus| / session mean stimulus
  double cv = 0.0;    // population sd of responses / session mean stimulus
  double rmse = 0.0;  // sqrt(bias^2 + cv^2)
  // Single-trial group: cv forced to 0.
  bool single_trial = false;
};

struct ErrorDecomposition {
  std::vector<StimulusError> per_stimulus;  // ascending nominal length
  double session_bias = 0.0;  // unweighted means over stimulus groups
  double session_cv = 0.0;
  double session_rmse = 0.0;
  double mean_stimulus = 0.0;  // mean actual length over the session
};

// Groups a (debiased) session by nominal length. Throws DomainError on an
// empty session.
ErrorDecomposition per_stimulus_errors(std::span<const TrialRecord> session);

enum class RegressionPoints {
  Trials,      // one point per trial: (actual length, response)
  GroupMeans,  // one point per nominal group: (mean actual, mean response)
};

struct RegressionFit {
  double slope = 0.0;
  double intercept = 0.0;
  double regression_index = 0.0;  // 1 - slope
  double r_squared = 0.0;
};

// OLS of responses on actual stimulus lengths. Throws DegenerateError when
// all stimuli are equal.
RegressionFit fit_regression_index(std::span<const TrialRecord> session,
                                   RegressionPoints points = RegressionPoints::Trials);

// ---------------------------------------------------------------------------
// Cohort screening and summaries

struct ParticipantMetric {
  std::string participant_id;
  double value = 0.0;
};

struct Exclusion {
  std::string participant_id;
  double value = 0.0;
  double threshold = 0.0;
  std::string reason;
};

struct ScreeningResult {
  std::vector<std::string> kept;
  std::vector<Exclusion> excluded;
  double mean = 0.0;
  double sd = 0.0;  // sample sd
  double threshold = 0.0;
};

// One pass: participant p is excluded iff value(p) > mean + k * sd, with the
// sample sd over all participants. Throws DomainError with fewer than 2.
ScreeningResult screen_outliers(std::span<const ParticipantMetric> metrics, double k = 2.5);

struct SessionSummary {
  std::string participant_id;
  std::string condition;
  std::size_t n_trials = 0;
  RegressionFit fit;
  ErrorDecomposition errors;
  bool excluded = false;
};

enum class SummaryMetric { RegressionIndex, Bias, CV, RMSE };
inline constexpr SummaryMetric kSummaryMetrics[] = {SummaryMetric::RegressionIndex,
                                                    SummaryMetric::Bias, SummaryMetric::CV,
                                                    SummaryMetric::RMSE};
const char* metric_name(SummaryMetric m);
double metric_of(const SessionSummary& s, SummaryMetric m);

struct MetricStats {
  double mean = 0.0;
  // Sample sd; NaN with a single participant.
  double sd = std::numeric_limits<double>::quiet_NaN();
};

struct ConditionSummary {
  std::string condition;
  std::size_t n = 0;  // non-excluded participants
  MetricStats ri;
  MetricStats bias;
  MetricStats cv;
  MetricStats rmse;
};

// Paired comparison of one metric between two conditions over participants
// who completed both and were not excluded. test/effect_size are empty when
// fewer than 2 pairs exist or the differences have zero variance.
struct Contrast {
  std::string condition_a;
  std::string condition_b;
  SummaryMetric metric = SummaryMetric::RegressionIndex;
  std::size_t n_pairs = 0;
  double mean_difference = 0.0;  // a - b
  std::optional<TTestResult> test;
  std::optional<double> effect_size;  // paired Cohen's d
  std::string note;
};

struct SummaryOptions {
  double outlier_k = 2.5;
  RegressionPoints points = RegressionPoints::Trials;
};

struct CohortSummary {
  std::vector<SessionSummary> sessions;  // sorted by (participant, condition)
  std::vector<Exclusion> excluded;
  std::optional<ScreeningResult> screening;  // empty with < 2 participants
  std::vector<ConditionSummary> conditions;  // in order of first appearance
  std::vector<Contrast> contrasts;           // every condition pair x metric
  std::vector<std::string> warnings;
};

// Debias -> per-stimulus errors -> regression fit for every session, then
// screening on each participant's session RMSE averaged over conditions,
// then condition statistics and paired contrasts over kept participants.
CohortSummary summarize_cohort(std::span<const TrialRecord> records,
                               const SummaryOptions& options = {});

// Output tables. All floats fixed at 6 decimals, LF line endings.
void write_sessions_csv(std::ostream& out, const CohortSummary& summary);
void write_conditions_csv(std::ostream& out, const CohortSummary& summary);
// Flat "key = value" report; keys appear in a fixed order.
void write_summary_report(std::ostream& out, const CohortSummary& summary);

}  // namespace ctrepro
