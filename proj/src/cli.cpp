#include "ctrepro/cli.hpp"

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ctrepro/analysis.hpp"
#include "ctrepro/csv.hpp"
#include "ctrepro/error.hpp"
#include "ctrepro/fitting.hpp"
#include "ctrepro/observer_model.hpp"
#include "ctrepro/protocol.hpp"
#include "ctrepro/trial_record.hpp"

namespace ctrepro {

namespace fs = std::filesystem;

namespace {

// Missing or inconsistent arguments found after parsing; exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::string out_dir = ".";
  unsigned threads = 1;
  bool dump_config = false;
};

struct SimulateOptions {
  ScheduleConfig schedule;
  std::size_t participants = 25;
  std::vector<std::string> conditions{"individual:weber:0.15"};
  double prior_mean = 10.0;
  CLI::Option* prior_mean_opt = nullptr;
  double prior_sd = 1.5;
  double motor_sd = kReferenceMotorNoiseCm;
  double demo_sd = 0.0;
  double response_floor = 0.0;
};

struct AnalyzeOptions {
  std::string input;
  double outlier_k = 2.5;
  std::string ri_points = "trials";
};

struct StimulusOptions {
  std::size_t num_lengths = 11;
  double min_length = 6.0;
  double step = 0.8;

  StimulusSet stimuli() const {
    if (num_lengths < 1) throw ConfigError("num-lengths must be >= 1");
    if (!(step > 0.0) || !(min_length > 0.0)) throw ConfigError("stimulus lengths must be > 0");
    return StimulusSet::evenly_spaced(num_lengths, min_length, step);
  }
};

struct MotorOptions {
  double sd = kReferenceMotorNoiseCm;
  std::string mode = "linear";

  MotorNoiseSpec spec() const {
    return {sd, mode == "quadrature" ? MotorCombination::Quadrature : MotorCombination::LinearCV};
  }
};

struct FitOptions {
  std::string input;
  std::string objective = "biascv";
  std::size_t trials_per_stimulus = 0;
  FitConfig cfg;
  StimulusOptions stimuli;
  MotorOptions motor;
  double prior_mean = 10.0;
  CLI::Option* prior_mean_opt = nullptr;
  std::vector<std::string> tie;
};

struct CurvesOptions {
  std::vector<double> sigma_p{std::begin(kReferencePriorSds), std::end(kReferencePriorSds)};
  GridSpec wf{0.0, kReferenceWfMax, kReferenceWfStep};
  GridSpec ri{0.0, 0.99, 0.01};
  StimulusOptions stimuli;
  MotorOptions motor;
  // The surface scores the observer's own error, so motor noise is off
  // unless asked for.
  double surface_motor_sd = 0.0;
  double prior_mean = 10.0;
  CLI::Option* prior_mean_opt = nullptr;
};

void add_schedule_options(CLI::App* app, ScheduleConfig& s) {
  app->add_option("--num-lengths", s.num_lengths, "Number of stimulus lengths")->capture_default_str();
  app->add_option("--min-length", s.min_length, "Shortest stimulus (cm)")->capture_default_str();
  app->add_option("--step", s.step, "Spacing between lengths (cm)")->capture_default_str();
  app->add_option("--reps", s.reps, "Presentations per length")->capture_default_str();
  app->add_option("--practice", s.practice, "Practice trials")->capture_default_str();
  app->add_option("--first-dot-min", s.first_dot_min, "First dot offset lower bound (cm)")
      ->capture_default_str();
  app->add_option("--first-dot-max", s.first_dot_max, "First dot offset upper bound (cm)")
      ->capture_default_str();
}

void add_stimulus_options(CLI::App* app, StimulusOptions& s) {
  app->add_option("--num-lengths", s.num_lengths, "Number of stimulus lengths")->capture_default_str();
  app->add_option("--min-length", s.min_length, "Shortest stimulus (cm)")->capture_default_str();
  app->add_option("--step", s.step, "Spacing between lengths (cm)")->capture_default_str();
}

void add_motor_options(CLI::App* app, MotorOptions& m) {
  app->add_option("--motor-sd", m.sd, "Non-sensory motor noise (cm)")->capture_default_str();
  app->add_option("--motor-mode", m.mode, "How motor noise enters the CV")
      ->check(CLI::IsMember({"linear", "quadrature"}))
      ->capture_default_str();
}

void add_grid_options(CLI::App* app, const std::string& name, GridSpec& g) {
  app->add_option("--" + name + "-min", g.min)->capture_default_str();
  app->add_option("--" + name + "-max", g.max)->capture_default_str();
  app->add_option("--" + name + "-step", g.step)->capture_default_str();
}

fs::path output_path(const GlobalOptions& g, const std::string& name) {
  return fs::path(g.out_dir) / name;
}

void ensure_out_dir(const GlobalOptions& g) {
  std::error_code ec;
  fs::create_directories(g.out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + g.out_dir + ": " + ec.message());
}

void check_distinct(const std::string& input, std::initializer_list<fs::path> outputs) {
  const auto in = fs::weakly_canonical(fs::absolute(input));
  for (const auto& o : outputs) {
    if (fs::weakly_canonical(fs::absolute(o)) == in) {
      throw ConfigError("output " + o.string() + " would overwrite the input");
    }
  }
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  writer(f);
  f.flush();
  if (!f) throw ConfigError("failed writing " + path.string());
}

std::uint64_t require_seed(const GlobalOptions& g) {
  if (g.seed_opt->count() == 0) throw UsageError("--seed is required");
  return g.seed;
}

double parse_number(const std::string& text, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid " + what + " '" + text + "'");
  }
}

// label:mode:magnitude[:prior_sd[:motor_sd]]
ConditionSpec parse_condition(const std::string& text, const ObserverParams& defaults) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  if (parts.size() < 3 || parts.size() > 5) {
    throw ConfigError("condition '" + text + "' must be label:mode:magnitude[:prior_sd[:motor_sd]]");
  }
  ConditionSpec c;
  c.label = parts[0];
  c.observer = defaults;
  const double magnitude = parse_number(parts[2], "noise magnitude");
  if (parts[1] == "weber") {
    c.observer.noise = NoiseModel::weber(magnitude);
  } else if (parts[1] == "constant") {
    c.observer.noise = NoiseModel::constant(magnitude);
  } else {
    throw ConfigError("noise mode must be weber or constant, got '" + parts[1] + "'");
  }
  if (parts.size() >= 4) c.observer.prior_sd = parse_number(parts[3], "prior sd");
  if (parts.size() >= 5) c.observer.motor_sd = parse_number(parts[4], "motor sd");
  return c;
}

void cmd_schedule(const GlobalOptions& g, ScheduleConfig cfg, std::ostream& out) {
  cfg.seed = require_seed(g);
  const auto schedule = generate_schedule(cfg);
  ensure_out_dir(g);
  const auto path = output_path(g, "schedule.csv");
  write_file(path, [&](std::ostream& f) { write_schedule_csv(f, schedule); });
  std::size_t practice = 0;
  for (const auto& t : schedule) practice += t.is_practice ? 1 : 0;
  out << "wrote " << path.string() << " (" << schedule.size() << " trials, "
      << schedule.size() - practice << " analysis)\n";
}

void cmd_simulate(const GlobalOptions& g, const SimulateOptions& o, std::ostream& out) {
  const auto seed = require_seed(g);
  o.schedule.validate();
  ObserverParams defaults;
  defaults.prior_mean = o.prior_mean_opt->count() ? o.prior_mean : o.schedule.mean_length();
  defaults.prior_sd = o.prior_sd;
  defaults.motor_sd = o.motor_sd;
  defaults.response_floor = o.response_floor;

  std::vector<ConditionSpec> conditions;
  for (const auto& text : o.conditions) conditions.push_back(parse_condition(text, defaults));
  for (const auto& c : conditions) {
    if (c.observer.noise.outside_reference_range()) {
      out << "note: condition " << c.label << " uses a Weber fraction above 0.6\n";
    }
  }

  const auto sim = simulate_cohort(o.participants, conditions, o.schedule,
                                   DemonstratorNoise{o.demo_sd}, seed, g.threads);
  ensure_out_dir(g);
  const auto path = output_path(g, "trials.csv");
  write_file(path, [&](std::ostream& f) { write_trials_csv(f, sim.records); });
  out << "wrote " << path.string() << " (" << sim.records.size() << " trials)\n";
  if (sim.clamped > 0) out << "note: " << sim.clamped << " responses clamped at the floor\n";
}

void cmd_analyze(const GlobalOptions& g, const AnalyzeOptions& o, std::ostream& out) {
  const auto report = output_path(g, "summary.txt");
  const auto sessions = output_path(g, "sessions.csv");
  const auto conditions = output_path(g, "conditions.csv");
  check_distinct(o.input, {report, sessions, conditions});

  const auto ingest = ingest_trials_file(o.input);
  for (const auto& w : ingest.warnings) out << "warning: " << w << '\n';
  SummaryOptions opts;
  opts.outlier_k = o.outlier_k;
  opts.points = o.ri_points == "groups" ? RegressionPoints::GroupMeans : RegressionPoints::Trials;
  const auto summary = summarize_cohort(ingest.records, opts);

  ensure_out_dir(g);
  write_file(report, [&](std::ostream& f) { write_summary_report(f, summary); });
  write_file(sessions, [&](std::ostream& f) { write_sessions_csv(f, summary); });
  write_file(conditions, [&](std::ostream& f) { write_conditions_csv(f, summary); });
  out << "read " << ingest.records.size() << " trials (" << ingest.rows_read << " rows, "
      << ingest.practice_dropped << " practice dropped)\n";
  for (const auto& c : summary.conditions) {
    out << c.condition << ": n=" << c.n << " RI=" << fixed6(c.ri.mean)
        << " bias=" << fixed6(c.bias.mean) << " cv=" << fixed6(c.cv.mean)
        << " rmse=" << fixed6(c.rmse.mean) << '\n';
  }
  out << "wrote " << report.string() << ", " << sessions.string() << ", " << conditions.string()
      << '\n';
}

void cmd_fit(const GlobalOptions& g, FitOptions o, std::ostream& out) {
  const auto report = output_path(g, "fit.txt");
  const auto landscape = output_path(g, "fit_landscape.csv");
  check_distinct(o.input, {report, landscape});

  o.cfg.objective = o.objective == "ri" ? FitObjective::RI : FitObjective::BiasCV;
  o.cfg.motor = o.motor.spec();
  o.cfg.threads = g.threads;
  if (o.prior_mean_opt->count()) o.cfg.prior_mean = o.prior_mean;
  if (o.trials_per_stimulus > 0) o.cfg.trials_per_stimulus = o.trials_per_stimulus;
  const auto stimuli = o.stimuli.stimuli();
  const auto observations = read_observations_file(o.input);

  const auto outcome = fit_shared_prior_landscape(observations, stimuli, o.cfg);
  const auto gof = goodness_of_fit(outcome.result, observations, stimuli, o.cfg, o.tie);

  ensure_out_dir(g);
  write_file(report, [&](std::ostream& f) { write_fit_report(f, outcome.result, o.cfg, &gof); });
  write_file(landscape, [&](std::ostream& f) { write_landscape_csv(f, outcome.landscape); });
  out << "shared sigma_p=" << fixed6(outcome.result.shared_sigma_p)
      << " residual=" << fixed6(outcome.result.residual) << '\n';
  for (const auto& [label, cf] : outcome.result.per_condition) {
    out << label << ": wf=" << fixed6(cf.wf) << '\n';
  }
  out << "wrote " << report.string() << ", " << landscape.string() << '\n';
}

void cmd_curves(const GlobalOptions& g, const CurvesOptions& o, std::ostream& out) {
  const auto stimuli = o.stimuli.stimuli();
  const auto motor = o.motor.spec();
  const auto wf_grid = o.wf.values();
  const auto ri_grid = o.ri.values();
  const double prior_mean = o.prior_mean_opt->count() ? o.prior_mean : stimuli.mean();
  if (o.sigma_p.empty()) throw ConfigError("need at least one --sigma-p");

  ensure_out_dir(g);
  write_file(output_path(g, "error_curves.csv"), [&](std::ostream& f) {
    f << "sigma_p,wf,bias,cv\n";
    for (double sp : o.sigma_p) {
      for (const auto& p : error_curve(sp, wf_grid, stimuli, motor)) {
        f << fixed6(sp) << ',' << fixed6(p.wf) << ',' << fixed6(p.bias) << ',' << fixed6(p.cv)
          << '\n';
      }
    }
  });
  write_file(output_path(g, "ri_curves.csv"), [&](std::ostream& f) {
    f << "sigma_p,wf,ri\n";
    for (double sp : o.sigma_p) {
      for (const auto& p : ri_curve(sp, wf_grid, stimuli)) {
        f << fixed6(sp) << ',' << fixed6(p.wf) << ',' << fixed6(p.ri) << '\n';
      }
    }
  });
  const MotorNoiseSpec surface_motor{o.surface_motor_sd, motor.combination};
  surface_motor.validate();
  const auto surface = rmse_surface(wf_grid, ri_grid, stimuli, surface_motor, prior_mean, g.threads);
  write_file(output_path(g, "rmse_surface.csv"), [&](std::ostream& f) {
    f << "wf,ri,normalized_rmse\n";
    for (std::size_t i = 0; i < surface.wf.size(); ++i) {
      for (std::size_t j = 0; j < surface.ri.size(); ++j) {
        f << fixed6(surface.wf[i]) << ',' << fixed6(surface.ri[j]) << ',';
        if (const auto& cell = surface.at(i, j)) f << fixed6(*cell);
        f << '\n';
      }
    }
  });
  out << "wrote error_curves.csv, ri_curves.csv, rmse_surface.csv to " << g.out_dir << '\n';
}

// TOML dump of the global options and the active subcommand: given values,
// else defaults; options without either are left out so they stay unset when
// the file is read back.
std::string dump_config(const CLI::App& app, const CLI::App* active) {
  std::ostringstream os;
  auto dump_options = [&os](const CLI::App& a, const std::string& prefix) {
    for (const CLI::Option* opt : a.get_options({})) {
      if (!opt->get_configurable()) continue;
      const std::string name = opt->get_single_name();
      if (name.empty() || name == "help") continue;
      std::string value;
      if (opt->count() > 0) {
        value = CLI::detail::ini_join(opt->reduced_results(), ',', '[', ']', '"', '\'');
      } else if (!opt->get_default_str().empty()) {
        value = CLI::detail::convert_arg_for_ini(opt->get_default_str(), '"', '\'', false);
      }
      if (!value.empty()) os << prefix << name << " = " << value << '\n';
    }
  };
  dump_options(app, "");
  if (active != nullptr) dump_options(*active, active->get_name() + ".");
  return os.str();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian observer toolkit for central tendency in length reproduction", "ctrepro"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Read options from a TOML/INI file; flags take precedence")
      ->envname("CTREPRO_CONFIG");

  GlobalOptions g;
  g.seed_opt = app.add_option("--seed", g.seed, "Master seed")->envname("CTREPRO_SEED");
  app.add_option("--out", g.out_dir, "Output directory")->envname("CTREPRO_OUT")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads")
      ->envname("CTREPRO_THREADS")
      ->check(CLI::Range(1u, 256u))
      ->capture_default_str();
  app.add_flag("--dump-config", g.dump_config, "Print the effective configuration and exit")
      ->configurable(false);

  ScheduleConfig schedule_cfg;
  auto* schedule = app.add_subcommand("schedule", "Write a randomised trial schedule");
  add_schedule_options(schedule, schedule_cfg);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a cohort of Bayesian observers");
  add_schedule_options(simulate, sim.schedule);
  simulate->add_option("--participants", sim.participants)->capture_default_str();
  simulate->add_option("--condition", sim.conditions,
                       "label:weber|constant:magnitude[:prior_sd[:motor_sd]], repeatable")
      ->capture_default_str();
  sim.prior_mean_opt =
      simulate->add_option("--prior-mean", sim.prior_mean, "Prior mean (cm); default mean length");
  simulate->add_option("--prior-sd", sim.prior_sd)->capture_default_str();
  simulate->add_option("--motor-sd", sim.motor_sd, "Generative motor noise (cm)")->capture_default_str();
  simulate->add_option("--demo-sd", sim.demo_sd, "Demonstrator imprecision (cm)")->capture_default_str();
  simulate->add_option("--response-floor", sim.response_floor)->capture_default_str();

  AnalyzeOptions ana;
  auto* analyze = app.add_subcommand("analyze", "Decompose errors and summarise a trial CSV");
  analyze->add_option("--input", ana.input, "Trial CSV")->required();
  analyze->add_option("--outlier-k", ana.outlier_k)->capture_default_str();
  analyze->add_option("--ri-points", ana.ri_points)
      ->check(CLI::IsMember({"trials", "groups"}))
      ->capture_default_str();

  FitOptions fit;
  auto* fitcmd = app.add_subcommand("fit", "Fit a shared prior width and per-condition Weber fractions");
  fitcmd->add_option("--input", fit.input, "conditions.csv, sessions.csv or condition,bias,cv CSV")
      ->required();
  fitcmd->add_option("--objective", fit.objective)
      ->check(CLI::IsMember({"biascv", "ri"}))
      ->capture_default_str();
  add_grid_options(fitcmd, "sigma-p", fit.cfg.sigma_p);
  add_grid_options(fitcmd, "wf", fit.cfg.wf);
  add_stimulus_options(fitcmd, fit.stimuli);
  add_motor_options(fitcmd, fit.motor);
  fit.prior_mean_opt = fitcmd->add_option("--prior-mean", fit.prior_mean);
  fitcmd->add_option("--tie", fit.tie, "Conditions constrained to one Weber fraction for comparison");
  fitcmd->add_option("--tie-tolerance", fit.cfg.tie_tolerance)->capture_default_str();
  fitcmd->add_option("--trials-per-stimulus", fit.trials_per_stimulus,
                     "Match the finite-sample pipeline estimates for this many trials per length (0: off)")
      ->capture_default_str();

  CurvesOptions cur;
  auto* curves = app.add_subcommand("curves", "Emit model curves and the RMSE surface");
  curves->add_option("--sigma-p", cur.sigma_p, "Prior widths (cm)")->capture_default_str();
  add_grid_options(curves, "wf", cur.wf);
  add_grid_options(curves, "ri", cur.ri);
  add_stimulus_options(curves, cur.stimuli);
  add_motor_options(curves, cur.motor);
  curves->add_option("--surface-motor-sd", cur.surface_motor_sd, "Motor noise used for the RMSE surface (cm)")
      ->capture_default_str();
  cur.prior_mean_opt = curves->add_option("--prior-mean", cur.prior_mean);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }

  if (g.dump_config) {
    const auto subs = app.get_subcommands();
    out << dump_config(app, subs.empty() ? nullptr : subs.front());
    return 0;
  }

  try {
    if (*schedule) cmd_schedule(g, schedule_cfg, out);
    if (*simulate) cmd_simulate(g, sim, out);
    if (*analyze) cmd_analyze(g, ana, out);
    if (*fitcmd) cmd_fit(g, fit, out);
    if (*curves) cmd_curves(g, cur, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (auto& ch : msg) {
      if (ch == '\n') ch = ' ';
    }
    err << "error: " << msg << '\n';
    return 1;
  }
  return 0;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("ctrepro");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace ctrepro
