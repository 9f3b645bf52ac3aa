#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctrepro {

// Minimal CSV reader for the flat tables this toolkit writes: comma
// separated, no quoting, LF or CRLF line endings, blank lines skipped.
struct CsvTable {
  struct Row {
    std::size_t line = 0;  // 1-based line number in the source, header is line 1
    std::vector<std::string> cells;
  };

  std::vector<std::string> header;
  std::vector<Row> rows;

  std::optional<std::size_t> column(std::string_view name) const;
  // Throws IngestError "missing column <name>".
  std::size_t require_column(std::string_view name) const;
};

// Throws IngestError on a missing header or a row whose width differs from
// the header's.
CsvTable read_csv(std::istream& in);

// Cell parsers; throw IngestError naming the line and column.
double parse_double_cell(const CsvTable::Row& row, std::size_t col, std::string_view name);
long long parse_int_cell(const CsvTable::Row& row, std::size_t col, std::string_view name);
bool parse_bool_cell(const CsvTable::Row& row, std::size_t col, std::string_view name);

// Fixed 6-decimal rendering used for every floating value written to disk.
// Negative zero prints as 0.000000; NaN and infinities print as nan/inf.
std::string fixed6(double value);

// Throws DomainError if a text field would break the unquoted CSV format.
void check_csv_text(std::string_view value, std::string_view what);

}  // namespace ctrepro
