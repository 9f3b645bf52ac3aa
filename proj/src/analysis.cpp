#include "ctrepro/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <utility>

#include "ctrepro/csv.hpp"
#include "ctrepro/error.hpp"
#include "ctrepro/ols.hpp"

namespace ctrepro {

std::vector<TrialRecord> debias_session(std::span<const TrialRecord> session) {
  if (session.empty()) throw DomainError("cannot debias an empty session");
  double mean_response = 0.0;
  double mean_stimulus = 0.0;
  for (const auto& r : session) {
    mean_response += r.response;
    mean_stimulus += r.actual_length;
  }
  const auto n = static_cast<double>(session.size());
  mean_response /= n;
  mean_stimulus /= n;

  const double shift = mean_stimulus - mean_response;
  std::vector<TrialRecord> out(session.begin(), session.end());
  for (auto& r : out) r.response += shift;
  return out;
}

ErrorDecomposition per_stimulus_errors(std::span<const TrialRecord> session) {
  if (session.empty()) throw DomainError("cannot decompose an empty session");

  std::map<double, std::vector<const TrialRecord*>> groups;
  double session_stimulus = 0.0;
  for (const auto& r : session) {
    groups[r.nominal_length].push_back(&r);
    session_stimulus += r.actual_length;
  }
  session_stimulus /= static_cast<double>(session.size());

  ErrorDecomposition out;
  out.mean_stimulus = session_stimulus;
  std::vector<double> responses;
  for (const auto& [nominal, members] : groups) {
    StimulusError e;
    e.nominal = nominal;
    e.n = members.size();
    responses.clear();
    for (const auto* r : members) {
      e.mean_stimulus += r->actual_length;
      responses.push_back(r->response);
    }
    e.mean_stimulus /= static_cast<double>(e.n);
    e.mean_response = mean_of(responses);
    e.bias = std::abs(e.mean_response - e.mean_stimulus) / session_stimulus;
    e.single_trial = e.n == 1;
    e.cv = e.single_trial ? 0.0 : population_sd(responses) / session_stimulus;
    e.rmse = std::hypot(e.bias, e.cv);
    out.per_stimulus.push_back(e);
  }

  const auto k = static_cast<double>(out.per_stimulus.size());
  for (const auto& e : out.per_stimulus) {
    out.session_bias += e.bias;
    out.session_cv += e.cv;
    out.session_rmse += e.rmse;
  }
  out.session_bias /= k;
  out.session_cv /= k;
  out.session_rmse /= k;
  return out;
}

RegressionFit fit_regression_index(std::span<const TrialRecord> session, RegressionPoints points) {
  std::vector<double> x;
  std::vector<double> y;
  if (points == RegressionPoints::Trials) {
    for (const auto& r : session) {
      x.push_back(r.actual_length);
      y.push_back(r.response);
    }
  } else {
    for (const auto& e : per_stimulus_errors(session).per_stimulus) {
      x.push_back(e.mean_stimulus);
      y.push_back(e.mean_response);
    }
  }
  if (x.size() < 2) throw DegenerateError("regression needs at least 2 distinct stimuli");
  const auto fit = ols_fit(x, y);
  RegressionFit out;
  out.slope = fit.slope;
  out.intercept = fit.intercept;
  out.regression_index = 1.0 - fit.slope;
  out.r_squared = fit.r_squared;
  return out;
}

ScreeningResult screen_outliers(std::span<const ParticipantMetric> metrics, double k) {
  if (metrics.size() < 2) throw DomainError("screening needs at least 2 participants");
  if (!(k >= 0.0)) throw DomainError("screening multiplier must be >= 0");

  std::vector<double> values;
  values.reserve(metrics.size());
  for (const auto& m : metrics) values.push_back(m.value);

  ScreeningResult out;
  out.mean = mean_of(values);
  out.sd = sample_sd(values);
  // With zero spread nobody can exceed the mean; k = inf would give inf * 0.
  out.threshold = out.sd > 0.0 ? out.mean + k * out.sd : std::numeric_limits<double>::infinity();
  for (const auto& m : metrics) {
    if (m.value > out.threshold) {
      out.excluded.push_back({m.participant_id, m.value, out.threshold,
                              "session_rmse " + fixed6(m.value) + " > mean + " + fixed6(k) +
                                  " sd = " + fixed6(out.threshold)});
    } else {
      out.kept.push_back(m.participant_id);
    }
  }
  return out;
}

const char* metric_name(SummaryMetric m) {
  switch (m) {
    case SummaryMetric::RegressionIndex:
      return "ri";
    case SummaryMetric::Bias:
      return "bias";
    case SummaryMetric::CV:
      return "cv";
    case SummaryMetric::RMSE:
      return "rmse";
  }
  return "?";
}

double metric_of(const SessionSummary& s, SummaryMetric m) {
  switch (m) {
    case SummaryMetric::RegressionIndex:
      return s.fit.regression_index;
    case SummaryMetric::Bias:
      return s.errors.session_bias;
    case SummaryMetric::CV:
      return s.errors.session_cv;
    case SummaryMetric::RMSE:
      return s.errors.session_rmse;
  }
  return 0.0;
}

namespace {

MetricStats stats_of(std::span<const double> values) {
  MetricStats s;
  if (values.empty()) {
    s.mean = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  s.mean = mean_of(values);
  if (values.size() >= 2) s.sd = sample_sd(values);
  return s;
}

Contrast make_contrast(const std::string& a, const std::string& b, SummaryMetric metric,
                       const std::map<std::pair<std::string, std::string>, const SessionSummary*>& index,
                       std::span<const std::string> participants) {
  Contrast c;
  c.condition_a = a;
  c.condition_b = b;
  c.metric = metric;
  std::vector<double> va;
  std::vector<double> vb;
  for (const auto& pid : participants) {
    const auto ia = index.find({pid, a});
    const auto ib = index.find({pid, b});
    if (ia == index.end() || ib == index.end()) continue;
    va.push_back(metric_of(*ia->second, metric));
    vb.push_back(metric_of(*ib->second, metric));
  }
  c.n_pairs = va.size();
  if (va.empty()) {
    c.mean_difference = std::numeric_limits<double>::quiet_NaN();
    c.note = "no paired participants";
    return c;
  }
  c.mean_difference = mean_of(va) - mean_of(vb);
  if (va.size() < 2) {
    c.note = "fewer than 2 pairs";
    return c;
  }
  try {
    c.test = paired_t(va, vb);
    c.effect_size = cohens_d_paired(va, vb);
  } catch (const DegenerateError&) {
    c.note = "zero-variance differences";
  }
  return c;
}

}  // namespace

CohortSummary summarize_cohort(std::span<const TrialRecord> records, const SummaryOptions& options) {
  if (records.empty()) throw DomainError("cohort has no records");

  std::map<std::pair<std::string, std::string>, std::vector<TrialRecord>> by_session;
  std::vector<std::string> condition_order;
  for (const auto& r : records) {
    by_session[{r.participant_id, r.condition}].push_back(r);
    if (std::find(condition_order.begin(), condition_order.end(), r.condition) ==
        condition_order.end()) {
      condition_order.push_back(r.condition);
    }
  }

  CohortSummary out;
  for (const auto& [key, session] : by_session) {
    const auto adjusted = debias_session(session);
    SessionSummary s;
    s.participant_id = key.first;
    s.condition = key.second;
    s.n_trials = session.size();
    s.errors = per_stimulus_errors(adjusted);
    s.fit = fit_regression_index(adjusted, options.points);
    for (const auto& e : s.errors.per_stimulus) {
      if (e.single_trial) {
        out.warnings.push_back(s.participant_id + "/" + s.condition + ": nominal " +
                               fixed6(e.nominal) + " has a single trial; cv set to 0");
      }
    }
    out.sessions.push_back(std::move(s));
  }

  // Participant metric: session RMSE averaged over that participant's
  // conditions. Sessions are sorted, so participants come out in id order.
  std::vector<ParticipantMetric> metrics;
  for (const auto& s : out.sessions) {
    if (metrics.empty() || metrics.back().participant_id != s.participant_id) {
      metrics.push_back({s.participant_id, 0.0});
    }
  }
  for (auto& m : metrics) {
    std::vector<double> rmse;
    for (const auto& s : out.sessions) {
      if (s.participant_id == m.participant_id) rmse.push_back(s.errors.session_rmse);
    }
    m.value = mean_of(rmse);
  }

  std::set<std::string> excluded_ids;
  if (metrics.size() >= 2) {
    out.screening = screen_outliers(metrics, options.outlier_k);
    out.excluded = out.screening->excluded;
    for (const auto& e : out.excluded) excluded_ids.insert(e.participant_id);
  }
  std::vector<std::string> kept;
  for (const auto& m : metrics) {
    if (!excluded_ids.count(m.participant_id)) kept.push_back(m.participant_id);
  }

  std::map<std::pair<std::string, std::string>, const SessionSummary*> index;
  for (auto& s : out.sessions) {
    s.excluded = excluded_ids.count(s.participant_id) > 0;
    if (!s.excluded) index[{s.participant_id, s.condition}] = &s;
  }

  for (const auto& label : condition_order) {
    ConditionSummary c;
    c.condition = label;
    std::vector<double> ri, bias, cv, rmse;
    for (const auto& s : out.sessions) {
      if (s.excluded || s.condition != label) continue;
      ri.push_back(s.fit.regression_index);
      bias.push_back(s.errors.session_bias);
      cv.push_back(s.errors.session_cv);
      rmse.push_back(s.errors.session_rmse);
    }
    c.n = ri.size();
    c.ri = stats_of(ri);
    c.bias = stats_of(bias);
    c.cv = stats_of(cv);
    c.rmse = stats_of(rmse);
    out.conditions.push_back(std::move(c));
  }

  for (std::size_t i = 0; i < condition_order.size(); ++i) {
    for (std::size_t j = i + 1; j < condition_order.size(); ++j) {
      for (auto metric : kSummaryMetrics) {
        out.contrasts.push_back(
            make_contrast(condition_order[i], condition_order[j], metric, index, kept));
      }
    }
  }
  return out;
}

void write_sessions_csv(std::ostream& out, const CohortSummary& summary) {
  out << "participant_id,condition,n_trials,slope,intercept,regression_index,r_squared,"
         "bias,cv,rmse,excluded\n";
  for (const auto& s : summary.sessions) {
    out << s.participant_id << ',' << s.condition << ',' << s.n_trials << ','
        << fixed6(s.fit.slope) << ',' << fixed6(s.fit.intercept) << ','
        << fixed6(s.fit.regression_index) << ',' << fixed6(s.fit.r_squared) << ','
        << fixed6(s.errors.session_bias) << ',' << fixed6(s.errors.session_cv) << ','
        << fixed6(s.errors.session_rmse) << ',' << (s.excluded ? 1 : 0) << '\n';
  }
}

void write_conditions_csv(std::ostream& out, const CohortSummary& summary) {
  out << "condition,n,ri_mean,ri_sd,bias_mean,bias_sd,cv_mean,cv_sd,rmse_mean,rmse_sd\n";
  for (const auto& c : summary.conditions) {
    out << c.condition << ',' << c.n;
    for (const auto* m : {&c.ri, &c.bias, &c.cv, &c.rmse}) {
      out << ',' << fixed6(m->mean) << ',' << fixed6(m->sd);
    }
    out << '\n';
  }
}

void write_summary_report(std::ostream& out, const CohortSummary& summary) {
  std::set<std::string> participants;
  for (const auto& s : summary.sessions) participants.insert(s.participant_id);

  out << "participants = " << participants.size() << '\n';
  out << "sessions = " << summary.sessions.size() << '\n';
  out << "excluded_count = " << summary.excluded.size() << '\n';
  if (summary.screening) {
    out << "screening.metric = session_rmse\n";
    out << "screening.mean = " << fixed6(summary.screening->mean) << '\n';
    out << "screening.sd = " << fixed6(summary.screening->sd) << '\n';
    out << "screening.threshold = " << fixed6(summary.screening->threshold) << '\n';
  }
  for (const auto& e : summary.excluded) {
    out << "excluded." << e.participant_id << " = " << e.reason << '\n';
  }
  for (const auto& c : summary.conditions) {
    const std::string p = "condition." + c.condition + ".";
    out << p << "n = " << c.n << '\n';
    out << p << "ri_mean = " << fixed6(c.ri.mean) << '\n';
    out << p << "ri_sd = " << fixed6(c.ri.sd) << '\n';
    out << p << "bias_mean = " << fixed6(c.bias.mean) << '\n';
    out << p << "bias_sd = " << fixed6(c.bias.sd) << '\n';
    out << p << "cv_mean = " << fixed6(c.cv.mean) << '\n';
    out << p << "cv_sd = " << fixed6(c.cv.sd) << '\n';
    out << p << "rmse_mean = " << fixed6(c.rmse.mean) << '\n';
    out << p << "rmse_sd = " << fixed6(c.rmse.sd) << '\n';
  }
  for (const auto& c : summary.contrasts) {
    const std::string p =
        "contrast." + c.condition_a + "-" + c.condition_b + "." + metric_name(c.metric) + ".";
    out << p << "n_pairs = " << c.n_pairs << '\n';
    out << p << "mean_difference = " << fixed6(c.mean_difference) << '\n';
    if (c.test) {
      out << p << "t = " << fixed6(c.test->t) << '\n';
      out << p << "df = " << fixed6(c.test->df) << '\n';
      out << p << "p = " << fixed6(c.test->p_two_sided) << '\n';
    }
    if (c.effect_size) out << p << "cohens_d = " << fixed6(*c.effect_size) << '\n';
    if (!c.note.empty()) out << p << "note = " << c.note << '\n';
  }
  for (std::size_t i = 0; i < summary.warnings.size(); ++i) {
    out << "warning." << i << " = " << summary.warnings[i] << '\n';
  }
}

}  // namespace ctrepro
