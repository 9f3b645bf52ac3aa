#include "ctrepro/trial_record.hpp"

#include <fstream>
#include <ostream>
#include <set>
#include <tuple>

#include "ctrepro/csv.hpp"
#include "ctrepro/error.hpp"

namespace ctrepro {

void write_trials_csv(std::ostream& out, std::span<const TrialRecord> records) {
  out << kTrialCsvHeader << '\n';
  for (const auto& r : records) {
    check_csv_text(r.participant_id, "participant_id");
    check_csv_text(r.condition, "condition");
    out << r.participant_id << ',' << r.condition << ',' << r.trial_index << ','
        << fixed6(r.nominal_length) << ',' << fixed6(r.actual_length) << ','
        << fixed6(r.response) << '\n';
  }
}

IngestResult ingest_trials(std::istream& in) {
  const CsvTable table = read_csv(in);
  const auto c_pid = table.require_column("participant_id");
  const auto c_cond = table.require_column("condition");
  const auto c_idx = table.require_column("trial_index");
  const auto c_nom = table.require_column("nominal_length_cm");
  const auto c_resp = table.require_column("response_cm");
  const auto c_act = table.column("actual_length_cm");
  const auto c_practice = table.column("is_practice");

  IngestResult result;
  if (!c_act) {
    result.warnings.emplace_back(
        "column actual_length_cm absent; actual length defaults to nominal length");
  }

  std::set<std::tuple<std::string, std::string, long long>> seen;
  for (const auto& row : table.rows) {
    ++result.rows_read;
    if (c_practice && parse_bool_cell(row, *c_practice, "is_practice")) {
      ++result.practice_dropped;
      continue;
    }
    TrialRecord r;
    r.participant_id = row.cells[c_pid];
    r.condition = row.cells[c_cond];
    if (r.participant_id.empty() || r.condition.empty()) {
      throw IngestError("row " + std::to_string(row.line) +
                        ": empty participant_id or condition");
    }
    r.trial_index = parse_int_cell(row, c_idx, "trial_index");
    r.nominal_length = parse_double_cell(row, c_nom, "nominal_length_cm");
    r.actual_length = c_act ? parse_double_cell(row, *c_act, "actual_length_cm") : r.nominal_length;
    r.response = parse_double_cell(row, c_resp, "response_cm");

    if (!(r.nominal_length > 0.0)) {
      throw IngestError("row " + std::to_string(row.line) + ": nominal_length_cm must be > 0");
    }
    if (!(r.actual_length > 0.0)) {
      throw IngestError("row " + std::to_string(row.line) + ": actual_length_cm must be > 0");
    }
    if (r.response < 0.0) {
      throw IngestError("row " + std::to_string(row.line) + ": response_cm must be >= 0");
    }
    if (!seen.emplace(r.participant_id, r.condition, r.trial_index).second) {
      throw IngestError("row " + std::to_string(row.line) + ": duplicate key (" +
                        r.participant_id + ", " + r.condition + ", " +
                        std::to_string(r.trial_index) + ")");
    }
    result.records.push_back(std::move(r));
  }
  return result;
}

IngestResult ingest_trials_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path.string());
  return ingest_trials(in);
}

}  // namespace ctrepro
