#include "medfx/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace medfx {

CsvError::CsvError(const std::string& what, std::size_t row, std::size_t column)
    : DataError([&] {
        std::string msg = "CSV error";
        if (row > 0) msg += " at row " + std::to_string(row);
        if (column > 0) msg += ", column " + std::to_string(column);
        return msg + ": " + what;
      }()),
      row_(row),
      column_(column) {}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == name) return j;
  }
  throw DataError("column '" + name + "' not found in the CSV header");
}

CsvTable parse_csv(std::string_view text) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;       // inside quotes
  bool was_quoted = false;   // current field started with a quote
  bool field_started = false;
  std::size_t row = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    was_quoted = false;
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
    ++row;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started) throw CsvError("quote inside an unquoted field", row, record.size() + 1);
        quoted = was_quoted = field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        if (was_quoted) throw CsvError("characters after a closing quote", row, record.size() + 1);
        field.push_back(ch);
        field_started = true;
    }
  }
  if (quoted) throw CsvError("unterminated quoted field", row, record.size() + 1);
  if (field_started || !record.empty()) end_record();

  if (records.empty()) throw CsvError("missing header row", 1, 0);
  CsvTable table;
  table.header = std::move(records.front());
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (table.header[j].empty()) throw CsvError("empty column name", 1, j + 1);
    for (std::size_t k = 0; k < j; ++k) {
      if (table.header[k] == table.header[j]) throw CsvError("duplicate column name '" + table.header[j] + "'", 1, j + 1);
    }
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    auto& rec = records[r];
    if (rec.size() == 1 && rec[0].empty()) continue;  // blank line
    if (rec.size() != table.header.size()) {
      throw CsvError("expected " + std::to_string(table.header.size()) + " fields, found " +
                         std::to_string(rec.size()),
                     r + 1, 0);
    }
    table.rows.push_back(std::move(rec));
  }
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str());
}

double parse_number(std::string_view field, std::size_t row, std::size_t column) {
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
  if (field.empty() || field == "NA") return std::numeric_limits<double>::quiet_NaN();
  if (field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw CsvError("cannot parse '" + std::string(field) + "' as a number", row, column);
  }
  return v;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

void write_csv(std::ostream& out, const CsvTable& table) {
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (j > 0) out << ',';
      out << csv_escape(fields[j]);
    }
    out << '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvTable table_to_csv(const ObservationTable& table, const std::string& treatment_name,
                      const std::string& outcome_name) {
  CsvTable out;
  out.header = table.covariate_names;
  out.header.push_back(treatment_name);
  for (const auto& m : table.mediator_names) out.header.push_back(m);
  out.header.push_back(outcome_name);
  for (std::size_t i = 0; i < table.size(); ++i) {
    std::vector<std::string> row;
    for (std::size_t j = 0; j < table.num_covariates(); ++j) {
      row.push_back(format_double(table.covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
    }
    row.push_back(std::to_string(table.treatment[i]));
    for (std::size_t j = 0; j < table.num_mediators(); ++j) row.push_back(format_double(table.mediator_value(i, j)));
    row.push_back(format_double(table.outcome_scale.unscale_mean(table.outcome[static_cast<Eigen::Index>(i)])));
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace medfx
