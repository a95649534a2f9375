#pragma once

#include "medfx/data.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace medfx {

/// Malformed CSV; row and column are 1-based (row 1 is the header), 0 when not applicable.
class CsvError : public DataError {
 public:
  CsvError(const std::string& what, std::size_t row, std::size_t column);
  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_, column_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws DataError if absent
};

/// RFC-4180: comma separated, CRLF or LF records, double-quoted fields with "" escapes.
/// A header row is required and every record must have as many fields as the header.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv_file(const std::string& path);

/// Strict decimal parse of a whole field; empty and NA fields are missing (NaN).
double parse_number(std::string_view field, std::size_t row, std::size_t column);

std::string csv_escape(std::string_view field);
void write_csv(std::ostream& out, const CsvTable& table);

/// Shortest round-trip representation (%.17g).
std::string format_double(double v);

/// Columns c..., a, m..., y with values on the original scale.
CsvTable table_to_csv(const ObservationTable& table, const std::string& treatment_name = "a",
                      const std::string& outcome_name = "y");

}  // namespace medfx
