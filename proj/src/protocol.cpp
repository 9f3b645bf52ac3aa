#include "ctrepro/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <ostream>
#include <set>
#include <utility>

#include "ctrepro/csv.hpp"
#include "ctrepro/error.hpp"
#include "ctrepro/gaussian.hpp"
#include "ctrepro/parallel.hpp"
#include "ctrepro/random.hpp"

namespace ctrepro {

namespace {

constexpr double kMinActualLength = 1e-3;

}  // namespace

void ScheduleConfig::validate() const {
  if (num_lengths < 2) throw ConfigError("num_lengths must be >= 2");
  if (reps < 1) throw ConfigError("reps must be >= 1");
  if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError("step must be > 0");
  if (!(min_length > 0.0) || !std::isfinite(min_length)) {
    throw ConfigError("min_length must be > 0");
  }
  if (!std::isfinite(first_dot_min) || !std::isfinite(first_dot_max) ||
      first_dot_min < 0.0 || first_dot_max < first_dot_min) {
    throw ConfigError("first-dot range must satisfy 0 <= min <= max");
  }
}

std::vector<double> ScheduleConfig::lengths() const {
  std::vector<double> out;
  out.reserve(num_lengths);
  for (std::size_t i = 0; i < num_lengths; ++i) {
    out.push_back(min_length + static_cast<double>(i) * step);
  }
  return out;
}

std::vector<Trial> generate_schedule(const ScheduleConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const auto lengths = cfg.lengths();

  std::vector<Trial> out;
  out.reserve(cfg.practice + cfg.num_lengths * cfg.reps);
  for (std::size_t i = 0; i < cfg.practice; ++i) {
    Trial t;
    t.index = out.size();
    t.nominal_length = lengths[rng.index(lengths.size())];
    t.first_dot_offset = rng.uniform(cfg.first_dot_min, cfg.first_dot_max);
    t.is_practice = true;
    out.push_back(t);
  }

  std::vector<double> block;
  block.reserve(cfg.num_lengths * cfg.reps);
  for (std::size_t r = 0; r < cfg.reps; ++r) {
    block.insert(block.end(), lengths.begin(), lengths.end());
  }
  for (std::size_t i = block.size(); i > 1; --i) {
    std::swap(block[i - 1], block[rng.index(i)]);
  }
  for (double len : block) {
    Trial t;
    t.index = out.size();
    t.nominal_length = len;
    t.first_dot_offset = rng.uniform(cfg.first_dot_min, cfg.first_dot_max);
    out.push_back(t);
  }
  return out;
}

void write_schedule_csv(std::ostream& out, std::span<const Trial> schedule) {
  out << kScheduleCsvHeader << '\n';
  for (const auto& t : schedule) {
    out << t.index << ',' << fixed6(t.nominal_length) << ',' << fixed6(t.first_dot_offset) << ','
        << (t.is_practice ? 1 : 0) << '\n';
  }
}

void ObserverParams::validate() const {
  try {
    noise.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (!std::isfinite(prior_mean)) throw ConfigError("prior mean must be finite");
  if (!(prior_sd >= 0.0) || !std::isfinite(prior_sd)) {
    throw ConfigError("prior sd must be finite and >= 0");
  }
  if (prior_sd == 0.0 && !noise.is_zero()) {
    throw ConfigError("prior sd must be > 0 unless sensory noise is zero");
  }
  if (!(motor_sd >= 0.0) || !std::isfinite(motor_sd)) {
    throw ConfigError("motor sd must be finite and >= 0");
  }
  if (!std::isfinite(response_floor)) throw ConfigError("response floor must be finite");
}

SimulatedSession simulate_observer(std::span<const Trial> schedule, const ObserverParams& observer,
                                   const DemonstratorNoise& demo, std::uint64_t seed,
                                   const std::string& participant_id,
                                   const std::string& condition) {
  observer.validate();
  if (!(demo.sd >= 0.0) || !std::isfinite(demo.sd)) {
    throw ConfigError("demonstrator sd must be finite and >= 0");
  }

  Rng rng(seed);
  const GaussianBelief prior{observer.prior_mean, observer.prior_sd};
  SimulatedSession out;
  for (const auto& trial : schedule) {
    if (trial.is_practice) continue;
    const double z_demo = rng.normal();
    const double z_sense = rng.normal();
    const double z_motor = rng.normal();

    const double actual = std::max(trial.nominal_length + demo.sd * z_demo, kMinActualLength);
    const double sd_l = sigma_l_at(observer.noise, actual);
    const double measured = actual + sd_l * z_sense;
    const double estimate =
        sd_l == 0.0 ? measured : fuse_gaussians(GaussianBelief{measured, sd_l}, prior).mean;
    double response = estimate + observer.motor_sd * z_motor;
    if (response < observer.response_floor) {
      response = observer.response_floor;
      ++out.clamped;
    }

    TrialRecord r;
    r.participant_id = participant_id;
    r.condition = condition;
    r.trial_index = static_cast<long long>(trial.index);
    r.nominal_length = trial.nominal_length;
    r.actual_length = actual;
    r.response = response;
    out.records.push_back(std::move(r));
  }
  return out;
}

std::string participant_label(std::size_t index, std::size_t n) {
  const std::size_t width = std::max<std::size_t>(2, std::to_string(n).size());
  std::string digits = std::to_string(index + 1);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return "P" + digits;
}

SimulatedSession simulate_cohort(std::size_t n_participants, std::span<const ConditionSpec> conditions,
                                 const ScheduleConfig& cfg, const DemonstratorNoise& demo,
                                 std::uint64_t master_seed, unsigned threads) {
  if (n_participants < 1) throw ConfigError("need at least one participant");
  if (conditions.empty()) throw ConfigError("need at least one condition");
  std::set<std::string> labels;
  for (const auto& c : conditions) {
    try {
      check_csv_text(c.label, "condition label");
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
    if (!labels.insert(c.label).second) {
      throw ConfigError("duplicate condition label '" + c.label + "'");
    }
    c.observer.validate();
  }
  cfg.validate();

  const std::size_t n_cond = conditions.size();
  std::vector<SimulatedSession> sessions(n_participants * n_cond);
  parallel_for(sessions.size(), threads, [&](std::size_t k) {
    const std::size_t p = k / n_cond;
    const std::size_t c = k % n_cond;
    ScheduleConfig session_cfg = cfg;
    session_cfg.seed = derive_seed(master_seed, p, 2 * c);
    const auto schedule = generate_schedule(session_cfg);
    sessions[k] = simulate_observer(schedule, conditions[c].observer, demo,
                                    derive_seed(master_seed, p, 2 * c + 1),
                                    participant_label(p, n_participants), conditions[c].label);
  });

  SimulatedSession out;
  for (auto& s : sessions) {
    out.clamped += s.clamped;
    std::move(s.records.begin(), s.records.end(), std::back_inserter(out.records));
  }
  return out;
}

}  // namespace ctrepro
