#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace medfx {

using ReportValue = std::variant<std::string, double, std::int64_t, bool>;

std::string render_value(const ReportValue& v);

/// Either key=value pairs or a table; a report is an ordered list of these.
struct ReportSection {
  std::string name;
  std::vector<std::pair<std::string, ReportValue>> entries;
  std::vector<std::string> columns;
  std::vector<std::vector<ReportValue>> rows;

  bool is_table() const { return !columns.empty(); }
  ReportSection& set(const std::string& key, ReportValue value);
};

struct Report {
  std::string title;
  std::vector<ReportSection> sections;

  ReportSection& section(const std::string& name);  // appended when absent
  ReportSection& table(const std::string& name, std::vector<std::string> columns);
};

/// Text form: "# title", then per section "[name]" followed by key=value lines or a
/// whitespace-aligned table whose first line holds the column names.
void write_text(std::ostream& out, const Report& report);
std::string to_text(const Report& report);

/// JSON sidecar: {"title": ..., "sections": {name: {key: value} | {"columns": [...], "rows": [[...]]}}}.
/// Non-finite numbers become null.
std::string to_json(const Report& report);

/// Parsed text report: every value kept as its string form.
struct ParsedReport {
  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::vector<std::vector<std::string>>> tables;  // first row = columns
};

ParsedReport parse_text_report(const std::string& text);

}  // namespace medfx
