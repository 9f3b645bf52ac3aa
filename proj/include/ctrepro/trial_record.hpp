#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ctrepro {

// One analysed reproduction trial. nominal_length is the requested length,
// actual_length what the demonstrator really showed; both in cm.
struct TrialRecord {
  std::string participant_id;
  std::string condition;
  long long trial_index = 0;
  double nominal_length = 0.0;
  double actual_length = 0.0;
  double response = 0.0;
};

inline constexpr const char* kTrialCsvHeader =
    "participant_id,condition,trial_index,nominal_length_cm,actual_length_cm,response_cm";

// Writes the header and one LF-terminated row per record, floats at 6
// decimals.
void write_trials_csv(std::ostream& out, std::span<const TrialRecord> records);

struct IngestResult {
  std::vector<TrialRecord> records;
  std::size_t rows_read = 0;
  std::size_t practice_dropped = 0;
  std::vector<std::string> warnings;
};

// Reads the trial CSV. Columns are located by name; actual_length_cm is
// optional (defaults to nominal, with a warning) and rows flagged by an
// optional is_practice column are dropped. Throws IngestError naming the
// row on missing columns, bad cells, invalid values or a duplicate
// (participant, condition, trial_index) key.
IngestResult ingest_trials(std::istream& in);
IngestResult ingest_trials_file(const std::filesystem::path& path);

}  // namespace ctrepro
