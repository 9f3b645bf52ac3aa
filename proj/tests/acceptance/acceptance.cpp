// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "ctrepro/analysis.hpp"
#include "ctrepro/cli.hpp"
#include "ctrepro/csv.hpp"
#include "ctrepro/fitting.hpp"
#include "ctrepro/gaussian.hpp"
#include "ctrepro/grid.hpp"
#include "ctrepro/observer_model.hpp"
#include "ctrepro/protocol.hpp"
#include "ctrepro/random.hpp"

using namespace ctrepro;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome ac1_fusion_monte_carlo() {
  const auto t0 = Clock::now();
  Rng rng(20240101);
  constexpr int kDraws = 1'000'000;
  double sum = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    sum += fuse_gaussians({rng.normal(6.0, 1.0), 1.0}, {10.0, 2.0}).mean;
  }
  const double mean = sum / kDraws;
  const double closed = fuse_gaussians({6.0, 1.0}, {10.0, 2.0}).mean;
  const double secs = seconds_since(t0);
  const double err = std::abs(mean - 6.8);
  return {err < 0.01 && std::abs(closed - 6.8) < 1e-12 && secs < 5.0,
          "MC mean " + fmt("%.6f", mean) + ", |err| " + fmt("%.6f", err) + " (< 0.01), " + fmt("%.2f", secs) +
              " s (< 5)"};
}

Outcome ac2_constant_noise_ri() {
  ScheduleConfig cfg;
  cfg.reps = 600;
  cfg.practice = 0;
  cfg.seed = 2;
  ObserverParams obs;
  obs.noise = NoiseModel::constant(1.0);
  obs.prior_mean = cfg.mean_length();
  obs.prior_sd = 2.0;
  obs.motor_sd = 0.0;
  const auto session = simulate_observer(generate_schedule(cfg), obs, {0.0}, 3).records;
  const auto fit = fit_regression_index(debias_session(session));
  const double err = std::abs(fit.regression_index - 0.2);
  return {err <= 0.01, "fitted RI " + fmt("%.6f", fit.regression_index) + " over " +
                           std::to_string(session.size()) + " trials, |RI - 0.2| " + fmt("%.6f", err) +
                           " (<= 0.01)"};
}

Outcome ac3_hand_oracle() {
  const std::vector<TrialRecord> group{
      {"P01", "a", 0, 10, 10, 9}, {"P01", "a", 1, 10, 10, 10}, {"P01", "a", 2, 10, 10, 11}};
  const auto e = per_stimulus_errors(debias_session(group));
  const double hand = std::sqrt(2.0 / 3.0) / 10.0;
  const auto& g = e.per_stimulus.at(0);
  const bool ok = std::abs(g.bias) < 1e-6 && std::abs(g.cv - hand) < 1e-6 && std::abs(g.rmse - hand) < 1e-6 &&
                  std::abs(e.session_rmse - hand) < 1e-6;
  return {ok, "bias " + fmt("%.8f", g.bias) + ", cv " + fmt("%.8f", g.cv) + ", rmse " + fmt("%.8f", g.rmse) +
                  " vs hand " + fmt("%.8f", hand) + " (1e-6)"};
}

struct Recovery {
  double sigma_p;
  double wf;
};

// simulate -> analyze -> fit group means with the generating motor model,
// matching the estimator of a 6-rep session.
Recovery recover(std::uint64_t seed) {
  ScheduleConfig cfg;
  ObserverParams obs;
  obs.noise = NoiseModel::weber(0.15);
  obs.prior_mean = cfg.mean_length();
  obs.prior_sd = 1.5;
  obs.motor_sd = 1.2;
  const std::vector<ConditionSpec> conditions{{"individual", obs}};
  const auto cohort = simulate_cohort(25, conditions, cfg, {0.0}, seed);
  const auto summary = summarize_cohort(cohort.records);
  std::vector<Observation> observations;
  for (const auto& c : summary.conditions) observations.push_back({c.condition, c.bias.mean, c.cv.mean, c.ri.mean});
  FitConfig fit;
  fit.motor = {1.2, MotorCombination::Quadrature};
  fit.objective = FitObjective::BiasCV;
  fit.trials_per_stimulus = cfg.reps;
  const auto r = fit_shared_prior(observations, cfg.stimuli(), fit);
  return {r.shared_sigma_p, r.per_condition.at("individual").wf};
}

Outcome ac4_parameter_recovery() {
  const auto t0 = Clock::now();
  const auto r = recover(4);
  const double secs = seconds_since(t0);
  const bool ok = std::abs(r.sigma_p - 1.5) <= 0.3 + 1e-9 && std::abs(r.wf - 0.15) <= 0.03 + 1e-9 && secs < 60.0;

  // Tolerance check: the same pipeline over 20 further seeds.
  int within = 0;
  double worst_sp = 0.0, worst_wf = 0.0;
  for (std::uint64_t seed = 101; seed <= 120; ++seed) {
    const auto v = recover(seed);
    worst_sp = std::max(worst_sp, std::abs(v.sigma_p - 1.5));
    worst_wf = std::max(worst_wf, std::abs(v.wf - 0.15));
    within += std::abs(v.sigma_p - 1.5) <= 0.3 + 1e-9 && std::abs(v.wf - 0.15) <= 0.03 + 1e-9;
  }
  return {ok, "sigma_p " + fmt("%.3f", r.sigma_p) + " (1.5 +/- 0.3), wf " + fmt("%.3f", r.wf) +
                  " (0.15 +/- 0.03), " + fmt("%.2f", secs) + " s (< 60); 20-seed check " + std::to_string(within) +
                  "/20 within, worst |d sigma_p| " + fmt("%.3f", worst_sp) + ", |d wf| " + fmt("%.3f", worst_wf)};
}

Outcome ac5_curve_endpoint() {
  const std::vector<double> grid{0.0};
  const auto c = error_curve(1.5, grid, StimulusSet::standard(), {kReferenceMotorNoiseCm, MotorCombination::LinearCV});
  const bool ok = c.size() == 1 && c[0].bias == 0.0 && c[0].cv == 0.12;
  return {ok, "(bias, cv) = (" + fmt("%.17g", c[0].bias) + ", " + fmt("%.17g", c[0].cv) + ")"};
}

Outcome ac6_ri_curve_structure() {
  const auto stimuli = StimulusSet::standard();
  const auto grid = linear_grid(0.0, kReferenceWfMax, kReferenceWfStep);
  const auto curve = ri_curve(1.5, grid, stimuli);
  bool increasing = true;
  for (std::size_t i = 2; i < curve.size(); ++i) increasing &= curve[i].ri > curve[i - 1].ri;
  increasing &= curve.size() > 1 && curve[1].ri > curve[0].ri;

  double worst = 0.0;
  std::vector<double> wf;
  for (double target : {0.446, 0.292, 0.234}) {
    const double w = wf_from_ri(target, 1.5, stimuli);
    wf.push_back(w);
    worst = std::max(worst, std::abs(predict_regression_index(NoiseModel::weber(w), {stimuli.mean(), 1.5}, stimuli) - target));
  }
  const bool ordered = wf[2] < wf[1] && wf[1] < wf[0];
  return {increasing && worst < 1e-9 && ordered,
          std::string(increasing ? "strictly increasing" : "NOT increasing") + " on " + std::to_string(curve.size()) +
              " grid points; round-trip error " + fmt("%.2e", worst) + " (< 1e-9); wf social " + fmt("%.4f", wf[2]) +
              " < mechanical " + fmt("%.4f", wf[1]) + " < individual " + fmt("%.4f", wf[0])};
}

Outcome ac7_rmse_surface() {
  const auto stimuli = StimulusSet::standard();
  const auto wf = linear_grid(0.0, kReferenceWfMax, kReferenceWfStep);
  const auto ri = linear_grid(0.0, 0.99, 0.01);
  // Observer's own error: motor noise off, as in the CLI surface default.
  const auto s = rmse_surface(wf, ri, stimuli, {0.0, MotorCombination::LinearCV}, stimuli.mean());

  bool minima_one = true;
  double best = -1.0;
  std::size_t bi = 0, bj = 0;
  for (std::size_t i = 0; i < wf.size(); ++i) {
    double lo = INFINITY;
    for (std::size_t j = 0; j < ri.size(); ++j) {
      if (const auto& c = s.at(i, j)) {
        lo = std::min(lo, *c);
        if (*c > best) {
          best = *c;
          bi = i;
          bj = j;
        }
      }
    }
    minima_one &= lo == 1.0;
  }
  // Region: lowest tenth of the positive Weber fractions, highest tenth of RI.
  const std::size_t wf_band = std::max<std::size_t>(1, (wf.size() - 1) / 10);
  const std::size_t ri_band = std::max<std::size_t>(1, ri.size() / 10);
  const bool corner = bi >= 1 && bi <= wf_band && bj + ri_band >= ri.size();

  const auto i30 = static_cast<std::size_t>(std::lround(0.3 / kReferenceWfStep));
  std::vector<double> column;
  for (std::size_t j = 0; j < ri.size(); ++j) {
    if (const auto& c = s.at(i30, j)) column.push_back(*c);
  }
  const auto jmin = static_cast<std::size_t>(std::min_element(column.begin(), column.end()) - column.begin());
  bool interior = jmin > 0 && jmin + 1 < column.size();
  for (std::size_t j = 1; j <= jmin && interior; ++j) interior &= column[j] <= column[j - 1];
  for (std::size_t j = jmin + 1; j < column.size() && interior; ++j) interior &= column[j] >= column[j - 1];

  return {minima_one && corner && interior,
          std::string("column minima ") + (minima_one ? "all 1" : "NOT all 1") + "; max " + fmt("%.3f", best) +
              " at wf " + fmt("%.3f", wf[bi]) + ", ri " + fmt("%.2f", ri[bj]) + (corner ? " (low-wf/high-ri)" : " (outside corner)") +
              "; wf 0.3 column min at ri " + fmt("%.2f", column.empty() ? NAN : ri[ri.size() - column.size() + jmin]) +
              (interior ? " (interior)" : " (NOT interior)")};
}

Outcome ac8_null_cohort() {
  ScheduleConfig cfg;
  ObserverParams obs;
  obs.motor_sd = 1.2;
  const std::vector<ConditionSpec> conditions{{"a", obs}, {"b", obs}};
  int rejections = 0, tested = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto summary = summarize_cohort(simulate_cohort(25, conditions, cfg, {0.0}, seed).records);
    for (const auto& c : summary.contrasts) {
      if (c.metric != SummaryMetric::RegressionIndex || !c.test) continue;
      ++tested;
      rejections += c.test->p_two_sided < 0.05;
    }
  }
  return {tested == 200 && rejections >= 4 && rejections <= 16,
          std::to_string(rejections) + "/" + std::to_string(tested) + " runs with RI paired-t p < 0.05 (" +
              fmt("%.1f", 100.0 * rejections / std::max(tested, 1)) + "%, need 2-8%)"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome ac9_determinism() {
  const auto root = fs::temp_directory_path() / ("ctrepro_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  auto pipeline = [&](const std::string& name, const std::string& threads) {
    const auto dir = (root / name).string();
    std::ostringstream out, err;
    int rc = 0;
    auto call = [&](std::vector<std::string> args) {
      if (rc == 0) rc = run_cli(args, out, err);
    };
    call({"--seed", "77", "--threads", threads, "--out", dir, "schedule"});
    call({"--seed", "77", "--threads", threads, "--out", dir, "simulate", "--participants", "25", "--condition",
          "individual:weber:0.15", "--condition", "mechanical:weber:0.11", "--condition", "social:weber:0.09",
          "--demo-sd", "0.2"});
    call({"--threads", threads, "--out", dir, "analyze", "--input", dir + "/trials.csv"});
    call({"--threads", threads, "--out", dir, "fit", "--input", dir + "/conditions.csv", "--tie", "mechanical",
          "--tie", "social"});
    return rc;
  };
  const int rc = pipeline("run1", "1") + pipeline("run2", "1") + pipeline("par", "4");
  const std::vector<std::string> files{"schedule.csv",   "trials.csv", "summary.txt",
                                       "sessions.csv",   "conditions.csv", "fit.txt",
                                       "fit_landscape.csv"};
  int identical = 0;
  for (const auto& f : files) {
    const auto a = slurp(root / "run1" / f);
    identical += !a.empty() && a == slurp(root / "run2" / f) && a == slurp(root / "par" / f);
  }
  fs::remove_all(root);
  const int n = static_cast<int>(files.size());
  return {rc == 0 && identical == n, std::to_string(identical) + "/" + std::to_string(n) +
                                         " output files byte-identical across 2 sequential runs and a 4-thread run" +
                                         (rc == 0 ? "" : " (pipeline error)")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1 fusion Monte-Carlo oracle", ac1_fusion_monte_carlo},
      {"AC2 constant-noise regression index", ac2_constant_noise_ri},
      {"AC3 error decomposition hand oracle", ac3_hand_oracle},
      {"AC4 round-trip parameter recovery", ac4_parameter_recovery},
      {"AC5 error-curve endpoint", ac5_curve_endpoint},
      {"AC6 regression-index curve structure", ac6_ri_curve_structure},
      {"AC7 RMSE surface", ac7_rmse_surface},
      {"AC8 null-cohort rejection rate", ac8_null_cohort},
      {"AC9 pipeline determinism", ac9_determinism},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
