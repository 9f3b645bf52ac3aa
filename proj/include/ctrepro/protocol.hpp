#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ctrepro/observer_model.hpp"
#include "ctrepro/trial_record.hpp"

namespace ctrepro {

// Trial schedule of one reproduction session: num_lengths evenly spaced
// lengths, each shown reps times in shuffled order, preceded by practice
// trials. Defaults give 11 lengths 6..14 cm, 6 reps, 3 practice trials.
struct ScheduleConfig {
  std::size_t num_lengths = 11;
  double min_length = 6.0;
  double step = 0.8;
  std::size_t reps = 6;
  std::size_t practice = 3;
  double first_dot_min = 0.5;
  double first_dot_max = 3.5;
  std::uint64_t seed = 0;

  // Throws ConfigError.
  void validate() const;
  std::vector<double> lengths() const;
  double mean_length() const { return min_length + step * static_cast<double>(num_lengths - 1) / 2.0; }
  StimulusSet stimuli() const { return StimulusSet(lengths()); }
};

struct Trial {
  std::size_t index = 0;
  double nominal_length = 0.0;
  double first_dot_offset = 0.0;
  bool is_practice = false;
};

// Practice trials come first (lengths drawn uniformly from the set), then
// the num_lengths * reps analysis trials in a Fisher-Yates shuffled order.
// First-dot offsets are uniform on [first_dot_min, first_dot_max]. Same
// config, same schedule.
std::vector<Trial> generate_schedule(const ScheduleConfig& cfg);

inline constexpr const char* kScheduleCsvHeader = "index,nominal_length_cm,first_dot_cm,is_practice";
void write_schedule_csv(std::ostream& out, std::span<const Trial> schedule);

// Generative observer.
struct ObserverParams {
  NoiseModel noise = NoiseModel::weber(0.15);
  double prior_mean = 10.0;
  double prior_sd = 1.5;
  double motor_sd = 0.0;
  double response_floor = 0.0;

  // Throws ConfigError.
  void validate() const;
};

// Imprecision of the demonstrator: the shown length is nominal + N(0, sd).
struct DemonstratorNoise {
  double sd = 0.0;
};

struct SimulatedSession {
  std::vector<TrialRecord> records;
  // Responses that fell below the floor and were clamped to it.
  std::size_t clamped = 0;
};

// Simulates the analysis trials of a schedule (practice trials skipped).
// Every trial consumes three standard normals in the order demonstrator,
// sensory, motor, whatever their sds, so streams stay aligned when a noise
// source is switched off:
//   actual   = nominal + demo.sd * z1            (floored at 1e-3 cm)
//   measured = actual + sd_l(actual) * z2
//   estimate = posterior mean of N(measured, sd_l(actual)) x prior
//   response = max(estimate + motor_sd * z3, response_floor)
SimulatedSession simulate_observer(std::span<const Trial> schedule, const ObserverParams& observer,
                                   const DemonstratorNoise& demo, std::uint64_t seed,
                                   const std::string& participant_id = "P01",
                                   const std::string& condition = "individual");

struct ConditionSpec {
  std::string label;
  ObserverParams observer;
};

// Participant ids for a cohort of n: P01, P02, ... padded to at least two
// digits.
std::string participant_label(std::size_t index, std::size_t n);

// n participants each run every condition. Session (p, c) gets its own
// schedule and observer streams derived from (master_seed, p, c); cfg.seed is
// ignored. Records are ordered participant-major, then by condition as
// given, and do not depend on the worker count. Throws ConfigError on
// duplicate or empty labels.
SimulatedSession simulate_cohort(std::size_t n_participants, std::span<const ConditionSpec> conditions,
                                 const ScheduleConfig& cfg, const DemonstratorNoise& demo,
                                 std::uint64_t master_seed, unsigned threads = 1);

}  // namespace ctrepro
