#include "ctrepro/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>

#include "ctrepro/error.hpp"

namespace ctrepro {

namespace {

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_cell(const CsvTable::Row& row, std::string_view name,
                           std::string_view what) {
  throw IngestError("row " + std::to_string(row.line) + ": " + std::string(what) +
                    " in column " + std::string(name));
}

}  // namespace

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t CsvTable::require_column(std::string_view name) const {
  if (auto c = column(name)) return *c;
  throw IngestError("missing column " + std::string(name));
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!have_header) {
      if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
      }
      for (auto& h : split_line(line)) table.header.emplace_back(trim(h));
      have_header = true;
      continue;
    }
    CsvTable::Row row{line_no, split_line(line)};
    if (row.cells.size() != table.header.size()) {
      throw IngestError("row " + std::to_string(line_no) + ": expected " +
                        std::to_string(table.header.size()) + " cells, got " +
                        std::to_string(row.cells.size()));
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw IngestError("missing header row");
  return table;
}

double parse_double_cell(const CsvTable::Row& row, std::size_t col, std::string_view name) {
  const auto cell = trim(row.cells.at(col));
  double value = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    bad_cell(row, name, "non-numeric value '" + std::string(cell) + "'");
  }
  return value;
}

long long parse_int_cell(const CsvTable::Row& row, std::size_t col, std::string_view name) {
  const auto cell = trim(row.cells.at(col));
  long long value = 0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (cell.empty() || ec != std::errc() || ptr != end) {
    bad_cell(row, name, "non-integer value '" + std::string(cell) + "'");
  }
  return value;
}

bool parse_bool_cell(const CsvTable::Row& row, std::size_t col, std::string_view name) {
  const auto cell = trim(row.cells.at(col));
  if (cell == "1" || cell == "true" || cell == "TRUE" || cell == "True") return true;
  if (cell == "0" || cell == "false" || cell == "FALSE" || cell == "False") return false;
  bad_cell(row, name, "non-boolean value '" + std::string(cell) + "'");
}

std::string fixed6(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  std::string out(buf);
  if (out == "-0.000000") out = "0.000000";
  return out;
}

void check_csv_text(std::string_view value, std::string_view what) {
  if (value.empty()) throw DomainError(std::string(what) + " is empty");
  if (value.find_first_of(",\"\r\n") != std::string_view::npos) {
    throw DomainError(std::string(what) + " must not contain commas, quotes or newlines");
  }
}

}  // namespace ctrepro
