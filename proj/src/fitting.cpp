#include "ctrepro/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>

#include "ctrepro/csv.hpp"
#include "ctrepro/error.hpp"
#include "ctrepro/parallel.hpp"

namespace ctrepro {

void FitConfig::validate() const {
  for (const auto* g : {&sigma_p, &wf}) {
    if (g->values().empty()) throw ConfigError("fit grid is empty");
  }
  if (!(sigma_p.min > 0.0)) throw ConfigError("sigma_p grid must start above 0");
  if (!(wf.min >= 0.0)) throw ConfigError("wf grid must start at or above 0");
  if (!(tie_tolerance >= 0.0)) throw ConfigError("tie tolerance must be >= 0");
  if (trials_per_stimulus && *trials_per_stimulus == 0) {
    throw ConfigError("trials per stimulus must be >= 1");
  }
  try {
    motor.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

namespace {

struct Prediction {
  double bias = 0.0;
  double cv = 0.0;
  double ri = 0.0;
};

double point_residual(const Observation& o, const Prediction& p, FitObjective objective) {
  if (objective == FitObjective::RI) {
    const double d = *o.ri - p.ri;
    return d * d;
  }
  const double db = o.bias - p.bias;
  const double dc = o.cv - p.cv;
  return db * db + dc * dc;
}

// A set of conditions that share one Weber fraction; untied conditions are
// singleton groups.
struct Group {
  std::vector<std::string> labels;
};

std::vector<Group> make_groups(const std::set<std::string>& labels,
                               std::span<const std::string> tied) {
  std::set<std::string> tied_set(tied.begin(), tied.end());
  for (const auto& t : tied_set) {
    if (!labels.count(t)) throw ConfigError("tied condition '" + t + "' has no observations");
  }
  std::vector<Group> groups;
  if (!tied_set.empty()) groups.push_back({{tied_set.begin(), tied_set.end()}});
  for (const auto& l : labels) {
    if (!tied_set.count(l)) groups.push_back({{l}});
  }
  return groups;
}

ErrorPrediction model_errors(const NoiseModel& noise, const GaussianBelief& prior, const StimulusSet& stimuli,
                             const FitConfig& cfg) {
  if (cfg.trials_per_stimulus) {
    return expected_session_errors(noise, prior, stimuli, cfg.motor, *cfg.trials_per_stimulus);
  }
  return predict_errors(noise, prior, stimuli, cfg.motor);
}

void check_observations(std::span<const Observation> observations, FitObjective objective) {
  if (observations.empty()) throw DomainError("no observations to fit");
  for (const auto& o : observations) {
    if (o.condition.empty()) throw DomainError("observation without a condition label");
    if (!std::isfinite(o.bias) || !std::isfinite(o.cv)) {
      throw DomainError("observation for '" + o.condition + "' is not finite");
    }
    if (objective == FitObjective::RI && (!o.ri || !std::isfinite(*o.ri))) {
      throw DomainError("RI objective needs a finite ri for '" + o.condition + "'");
    }
  }
}

}  // namespace

FitOutcome fit_shared_prior_landscape(std::span<const Observation> observations,
                                      const StimulusSet& stimuli, const FitConfig& cfg) {
  cfg.validate();
  check_observations(observations, cfg.objective);

  std::set<std::string> labels;
  for (const auto& o : observations) labels.insert(o.condition);
  const auto groups = make_groups(labels, cfg.tied);

  const auto sigma_grid = cfg.sigma_p.values();
  const auto wf_grid = cfg.wf.values();
  const double prior_mean = cfg.prior_mean.value_or(stimuli.mean());
  const bool has_ri = stimuli.has_distinct_values();
  if (cfg.objective == FitObjective::RI && !has_ri) {
    throw DomainError("RI objective needs at least 2 distinct stimuli");
  }

  std::vector<LandscapeRow> rows(sigma_grid.size());
  parallel_for(sigma_grid.size(), cfg.threads, [&](std::size_t i) {
    const GaussianBelief prior{prior_mean, sigma_grid[i]};
    std::vector<Prediction> preds(wf_grid.size());
    for (std::size_t j = 0; j < wf_grid.size(); ++j) {
      const auto noise = NoiseModel::weber(wf_grid[j]);
      const auto e = model_errors(noise, prior, stimuli, cfg);
      preds[j].bias = e.bias;
      preds[j].cv = e.cv;
      preds[j].ri = has_ri ? predict_regression_index(noise, prior, stimuli)
                           : std::numeric_limits<double>::quiet_NaN();
    }

    LandscapeRow row;
    row.sigma_p = sigma_grid[i];
    for (const auto& g : groups) {
      std::size_t best_j = 0;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < wf_grid.size(); ++j) {
        double r = 0.0;
        for (const auto& o : observations) {
          if (std::find(g.labels.begin(), g.labels.end(), o.condition) != g.labels.end()) {
            r += point_residual(o, preds[j], cfg.objective);
          }
        }
        if (r < best) {
          best = r;
          best_j = j;
        }
      }
      for (const auto& label : g.labels) {
        ConditionFit cf;
        cf.wf = wf_grid[best_j];
        cf.predicted_bias = preds[best_j].bias;
        cf.predicted_cv = preds[best_j].cv;
        cf.predicted_ri = preds[best_j].ri;
        for (const auto& o : observations) {
          if (o.condition != label) continue;
          cf.residual += point_residual(o, preds[best_j], cfg.objective);
          ++cf.n_points;
        }
        row.per_condition[label] = cf;
      }
      row.total_residual += best;
    }
    rows[i] = std::move(row);
  });

  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) lowest = std::min(lowest, r.total_residual);
  std::size_t best_i = 0;
  while (rows[best_i].total_residual > lowest + cfg.tie_tolerance) ++best_i;

  FitOutcome out;
  out.result.shared_sigma_p = rows[best_i].sigma_p;
  out.result.per_condition = rows[best_i].per_condition;
  out.result.residual = rows[best_i].total_residual;
  out.landscape = std::move(rows);
  return out;
}

FitResult fit_shared_prior(std::span<const Observation> observations, const StimulusSet& stimuli,
                           const FitConfig& cfg) {
  return fit_shared_prior_landscape(observations, stimuli, cfg).result;
}

std::map<std::string, double> wf_for_observed_ri(const std::map<std::string, double>& ri_by_condition,
                                                 double sigma_p, const StimulusSet& stimuli) {
  std::map<std::string, double> out;
  for (const auto& [label, ri] : ri_by_condition) out[label] = wf_from_ri(ri, sigma_p, stimuli);
  return out;
}

GoodnessOfFit goodness_of_fit(const FitResult& fit, std::span<const Observation> observations,
                              const StimulusSet& stimuli, const FitConfig& cfg,
                              std::span<const std::string> tie) {
  check_observations(observations, cfg.objective);
  std::set<std::string> labels;
  for (const auto& o : observations) labels.insert(o.condition);
  std::set<std::string> fit_labels;
  for (const auto& [label, _] : fit.per_condition) fit_labels.insert(label);
  if (labels != fit_labels) {
    throw DomainError("observation conditions do not match the fitted conditions");
  }

  GoodnessOfFit out;
  const GaussianBelief prior{cfg.prior_mean.value_or(stimuli.mean()), fit.shared_sigma_p};
  for (const auto& [label, cf] : fit.per_condition) {
    const auto noise = NoiseModel::weber(cf.wf);
    const auto e = model_errors(noise, prior, stimuli, cfg);
    Prediction p{e.bias, e.cv, 0.0};
    if (cfg.objective == FitObjective::RI) p.ri = predict_regression_index(noise, prior, stimuli);
    double r = 0.0;
    for (const auto& o : observations) {
      if (o.condition == label) r += point_residual(o, p, cfg.objective);
    }
    out.per_condition_residual[label] = r;
    out.total_residual += r;
  }

  std::set<std::string> tie_set(tie.begin(), tie.end());
  if (tie_set.size() >= 2) {
    out.constrained_labels.assign(tie_set.begin(), tie_set.end());
    FitConfig constrained_cfg = cfg;
    constrained_cfg.tied = out.constrained_labels;
    out.constrained = fit_shared_prior(observations, stimuli, constrained_cfg);
    out.constraint_penalty = out.constrained->residual - out.total_residual;
  }
  return out;
}

std::vector<Observation> read_observations_csv(std::istream& in) {
  const CsvTable table = read_csv(in);
  auto pick = [&](std::initializer_list<const char*> names) -> std::optional<std::size_t> {
    for (const char* n : names) {
      if (auto c = table.column(n)) return c;
    }
    return std::nullopt;
  };
  const auto c_cond = table.require_column("condition");
  const auto c_bias = pick({"bias", "bias_mean"});
  const auto c_cv = pick({"cv", "cv_mean"});
  if (!c_bias) throw IngestError("missing column bias");
  if (!c_cv) throw IngestError("missing column cv");
  const auto c_ri = pick({"ri", "ri_mean", "regression_index"});
  const auto c_excluded = table.column("excluded");

  std::vector<Observation> out;
  for (const auto& row : table.rows) {
    if (c_excluded && parse_bool_cell(row, *c_excluded, "excluded")) continue;
    Observation o;
    o.condition = row.cells[c_cond];
    if (o.condition.empty()) {
      throw IngestError("row " + std::to_string(row.line) + ": empty condition");
    }
    o.bias = parse_double_cell(row, *c_bias, table.header[*c_bias]);
    o.cv = parse_double_cell(row, *c_cv, table.header[*c_cv]);
    if (c_ri) o.ri = parse_double_cell(row, *c_ri, table.header[*c_ri]);
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<Observation> read_observations_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path.string());
  return read_observations_csv(in);
}

namespace {

std::string grid_text(const GridSpec& g) {
  return fixed6(g.min) + ":" + fixed6(g.max) + ":" + fixed6(g.step);
}

std::string join(std::span<const std::string> items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ',';
    out += s;
  }
  return out;
}

}  // namespace

void write_fit_report(std::ostream& out, const FitResult& fit, const FitConfig& cfg,
                      const GoodnessOfFit* gof) {
  out << "objective = " << (cfg.objective == FitObjective::RI ? "ri" : "biascv") << '\n';
  out << "motor.sd_cm = " << fixed6(cfg.motor.sd_cm) << '\n';
  out << "motor.combination = "
      << (cfg.motor.combination == MotorCombination::Quadrature ? "quadrature" : "linear") << '\n';
  if (cfg.trials_per_stimulus) out << "trials_per_stimulus = " << *cfg.trials_per_stimulus << '\n';
  out << "grid.sigma_p = " << grid_text(cfg.sigma_p) << '\n';
  out << "grid.wf = " << grid_text(cfg.wf) << '\n';
  out << "shared_sigma_p = " << fixed6(fit.shared_sigma_p) << '\n';
  out << "residual = " << fixed6(fit.residual) << '\n';
  for (const auto& [label, cf] : fit.per_condition) {
    const std::string p = "condition." + label + ".";
    out << p << "wf = " << fixed6(cf.wf) << '\n';
    out << p << "residual = " << fixed6(cf.residual) << '\n';
    out << p << "n_points = " << cf.n_points << '\n';
    out << p << "predicted_bias = " << fixed6(cf.predicted_bias) << '\n';
    out << p << "predicted_cv = " << fixed6(cf.predicted_cv) << '\n';
    out << p << "predicted_ri = " << fixed6(cf.predicted_ri) << '\n';
  }
  if (gof && gof->constrained) {
    out << "constrained.labels = " << join(gof->constrained_labels) << '\n';
    out << "constrained.sigma_p = " << fixed6(gof->constrained->shared_sigma_p) << '\n';
    out << "constrained.wf = "
        << fixed6(gof->constrained->per_condition.at(gof->constrained_labels.front()).wf) << '\n';
    out << "constrained.residual = " << fixed6(gof->constrained->residual) << '\n';
    out << "constrained.penalty = " << fixed6(*gof->constraint_penalty) << '\n';
  }
}

void write_landscape_csv(std::ostream& out, std::span<const LandscapeRow> landscape) {
  out << "sigma_p,total_residual";
  if (!landscape.empty()) {
    for (const auto& [label, _] : landscape.front().per_condition) {
      out << ',' << label << "_wf," << label << "_residual";
    }
  }
  out << '\n';
  for (const auto& row : landscape) {
    out << fixed6(row.sigma_p) << ',' << fixed6(row.total_residual);
    for (const auto& [label, cf] : row.per_condition) {
      out << ',' << fixed6(cf.wf) << ',' << fixed6(cf.residual);
    }
    out << '\n';
  }
}

}  // namespace ctrepro
