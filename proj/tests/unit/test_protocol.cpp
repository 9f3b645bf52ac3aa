#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "ctrepro/error.hpp"
#include "ctrepro/protocol.hpp"
#include "ctrepro/random.hpp"

using namespace ctrepro;

namespace {

std::vector<Trial> repeated_trials(double length, std::size_t n) {
  std::vector<Trial> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = {i, length, 1.0, false};
  return out;
}

struct Moments {
  double mean;
  double sd;
};

Moments moments(const std::vector<TrialRecord>& records) {
  double sum = 0, sum_sq = 0;
  for (const auto& r : records) sum += r.response;
  const double mean = sum / static_cast<double>(records.size());
  for (const auto& r : records) sum_sq += (r.response - mean) * (r.response - mean);
  return {mean, std::sqrt(sum_sq / static_cast<double>(records.size() - 1))};
}

}  // namespace

TEST_CASE("Rng output contract") {
  SUBCASE("raw bits are the standard mt19937_64 sequence") {
    Rng rng(5489);
    std::uint64_t v = 0;
    for (int i = 0; i < 10000; ++i) v = rng.next_u64();
    CHECK(v == 9981545732273789042ULL);
  }
  SUBCASE("uniform01 is a multiple of 2^-53 in [0, 1)") {
    Rng rng(1);
    for (int i = 0; i < 100000; ++i) {
      const double u = rng.uniform01();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      REQUIRE(std::ldexp(u, 53) == std::floor(std::ldexp(u, 53)));
    }
  }
  SUBCASE("normal moments") {
    Rng rng(2);
    constexpr int n = 400000;
    double s = 0, s2 = 0, s4 = 0;
    for (int i = 0; i < n; ++i) {
      const double z = rng.normal();
      s += z;
      s2 += z * z;
      s4 += z * z * z * z;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(std::abs(s2 / n - 1.0) < 0.01);
    CHECK(std::abs(s4 / n - 3.0) < 0.06);
  }
  SUBCASE("index stays in range and covers it evenly") {
    Rng rng(3);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) {
      const auto k = rng.index(7);
      REQUIRE(k < 7);
      ++counts[k];
    }
    for (int c : counts) CHECK(std::abs(c - 10000) < 500);
    CHECK(rng.index(1) == 0);
  }
  SUBCASE("derived seeds separate substreams") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 30; ++a) {
      for (std::uint64_t b = 0; b < 30; ++b) seen.insert(derive_seed(42, a, b));
    }
    CHECK(seen.size() == 900);
    CHECK(derive_seed(42, 1, 2) == derive_seed(42, 1, 2));
    CHECK(derive_seed(42, 1, 2) != derive_seed(42, 2, 1));
    CHECK(derive_seed(42, 1, 2) != derive_seed(43, 1, 2));
  }
}

TEST_CASE("generate_schedule") {
  ScheduleConfig cfg;
  cfg.seed = 42;
  const auto schedule = generate_schedule(cfg);

  SUBCASE("counts, ordering and balance") {
    REQUIRE(schedule.size() == 69);
    std::map<double, int> per_length;
    double sum = 0;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      CHECK(schedule[i].index == i);
      CHECK(schedule[i].is_practice == (i < 3));
      CHECK(schedule[i].first_dot_offset >= 0.5);
      CHECK(schedule[i].first_dot_offset <= 3.5);
      if (!schedule[i].is_practice) {
        ++per_length[schedule[i].nominal_length];
        sum += schedule[i].nominal_length;
      }
    }
    CHECK(per_length.size() == 11);
    for (const auto& [len, n] : per_length) CHECK(n == 6);
    CHECK(sum / 66.0 == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(cfg.mean_length() == doctest::Approx(10.0).epsilon(1e-12));
  }
  SUBCASE("practice lengths come from the stimulus set") {
    const auto lengths = cfg.lengths();
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(std::find(lengths.begin(), lengths.end(), schedule[i].nominal_length) != lengths.end());
    }
  }
  SUBCASE("same seed, same schedule; other seed, other order") {
    const auto again = generate_schedule(cfg);
    std::ostringstream a, b;
    write_schedule_csv(a, schedule);
    write_schedule_csv(b, again);
    CHECK(a.str() == b.str());
    ScheduleConfig other = cfg;
    other.seed = 43;
    std::ostringstream c;
    write_schedule_csv(c, generate_schedule(other));
    CHECK(c.str() != a.str());
  }
  SUBCASE("csv layout") {
    std::ostringstream s;
    write_schedule_csv(s, schedule);
    std::istringstream in(s.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == kScheduleCsvHeader);
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 69);
  }
  SUBCASE("minimal schedule") {
    ScheduleConfig tiny;
    tiny.num_lengths = 2;
    tiny.reps = 1;
    tiny.practice = 0;
    const auto t = generate_schedule(tiny);
    REQUIRE(t.size() == 2);
    CHECK(std::min(t[0].nominal_length, t[1].nominal_length) == 6.0);
    CHECK(std::max(t[0].nominal_length, t[1].nominal_length) == doctest::Approx(6.8));
  }
}

TEST_CASE("ScheduleConfig validation") {
  auto bad = [](auto mutate) {
    ScheduleConfig c;
    mutate(c);
    return c;
  };
  CHECK_THROWS_AS(generate_schedule(bad([](ScheduleConfig& c) { c.num_lengths = 1; })), ConfigError);
  CHECK_THROWS_AS(generate_schedule(bad([](ScheduleConfig& c) { c.reps = 0; })), ConfigError);
  CHECK_THROWS_AS(generate_schedule(bad([](ScheduleConfig& c) { c.step = 0.0; })), ConfigError);
  CHECK_THROWS_AS(generate_schedule(bad([](ScheduleConfig& c) { c.min_length = -1.0; })), ConfigError);
  CHECK_THROWS_AS(generate_schedule(bad([](ScheduleConfig& c) { c.first_dot_max = 0.1; })), ConfigError);
}

TEST_CASE("simulate_observer") {
  SUBCASE("noise-free observer reproduces the stimulus exactly") {
    ScheduleConfig cfg;
    cfg.seed = 9;
    ObserverParams obs;
    obs.noise = NoiseModel::weber(0.0);
    const auto s = simulate_observer(generate_schedule(cfg), obs, {}, 1);
    REQUIRE(s.records.size() == 66);
    for (const auto& r : s.records) {
      CHECK(r.response == r.nominal_length);
      CHECK(r.actual_length == r.nominal_length);
      CHECK(r.participant_id == "P01");
      CHECK(r.condition == "individual");
    }
  }
  SUBCASE("law of large numbers at s = 6, constant noise 1, prior N(10, 2)") {
    ObserverParams obs;
    obs.noise = NoiseModel::constant(1.0);
    obs.prior_sd = 2.0;
    obs.motor_sd = 1.2;
    const auto m = moments(simulate_observer(repeated_trials(6.0, 100000), obs, {0.5}, 77).records);
    // var = w^2 (demo^2 + sd_l^2) + motor^2 = 0.64 * 1.25 + 1.44
    CHECK(m.mean == doctest::Approx(6.8).epsilon(0.02 / 6.8));
    CHECK(std::abs(m.sd - std::sqrt(2.24)) < 0.02);
  }
  SUBCASE("zero noise sources still consume their normals") {
    ObserverParams with_motor;
    with_motor.motor_sd = 1.0;
    ObserverParams without = with_motor;
    without.motor_sd = 0.0;
    const auto trials = repeated_trials(8.0, 50);
    const auto a = simulate_observer(trials, with_motor, {}, 5).records;
    const auto b = simulate_observer(trials, without, {}, 5).records;
    // Same sensory draws: responses differ only by the motor term, whose
    // magnitude is unrelated to the trial position.
    int differing = 0;
    for (std::size_t i = 0; i < a.size(); ++i) differing += a[i].response != b[i].response;
    CHECK(differing == 50);
    ObserverParams demo_off = without;
    const auto c = simulate_observer(trials, demo_off, {0.0}, 5).records;
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(b[i].response == c[i].response);
  }
  SUBCASE("response floor clamps and is counted") {
    ObserverParams obs;
    obs.noise = NoiseModel::weber(0.0);
    obs.motor_sd = 5.0;
    obs.response_floor = 0.0;
    const auto s = simulate_observer(repeated_trials(1.0, 2000), obs, {}, 8);
    CHECK(s.clamped > 0);
    for (const auto& r : s.records) CHECK(r.response >= 0.0);
  }
  SUBCASE("practice trials are skipped") {
    ScheduleConfig cfg;
    cfg.practice = 5;
    CHECK(simulate_observer(generate_schedule(cfg), ObserverParams{}, {}, 1).records.size() == 66);
  }
  SUBCASE("invalid observer") {
    ObserverParams obs;
    obs.prior_sd = 0.0;
    CHECK_THROWS_AS(simulate_observer(repeated_trials(6.0, 3), obs, {}, 1), ConfigError);
  }
}

TEST_CASE("simulate_cohort") {
  ScheduleConfig cfg;
  std::vector<ConditionSpec> conditions{{"individual", {}}, {"mechanical", {}}, {"social", {}}};
  conditions[1].observer.noise = NoiseModel::weber(0.1);
  conditions[2].observer.noise = NoiseModel::weber(0.05);

  const auto one = simulate_cohort(25, conditions, cfg, {}, 2024, 1);
  SUBCASE("sizes and ordering") {
    REQUIRE(one.records.size() == 25 * 3 * 66);
    CHECK(one.records.front().participant_id == "P01");
    CHECK(one.records.front().condition == "individual");
    CHECK(one.records[66].condition == "mechanical");
    CHECK(one.records[3 * 66].participant_id == "P02");
    CHECK(one.records.back().participant_id == "P25");
    CHECK(one.records.back().condition == "social");
  }
  SUBCASE("independent of the worker count") {
    const auto four = simulate_cohort(25, conditions, cfg, {}, 2024, 4);
    std::ostringstream a, b;
    write_trials_csv(a, one.records);
    write_trials_csv(b, four.records);
    CHECK(a.str() == b.str());
  }
  SUBCASE("sessions differ from each other") {
    CHECK(one.records[0].response != one.records[3 * 66].response);
  }
  SUBCASE("single participant") {
    CHECK(simulate_cohort(1, conditions, cfg, {}, 1, 2).records.size() == 3 * 66);
  }
  SUBCASE("label checks") {
    std::vector<ConditionSpec> dup{{"a", {}}, {"a", {}}};
    CHECK_THROWS_AS(simulate_cohort(2, dup, cfg, {}, 1), ConfigError);
    std::vector<ConditionSpec> empty_label{{"", {}}};
    CHECK_THROWS_AS(simulate_cohort(2, empty_label, cfg, {}, 1), ConfigError);
  }
}

TEST_CASE("participant_label") {
  CHECK(participant_label(0, 25) == "P01");
  CHECK(participant_label(24, 25) == "P25");
  CHECK(participant_label(0, 1) == "P01");
  CHECK(participant_label(99, 150) == "P100");
  CHECK(participant_label(0, 150) == "P001");
}
