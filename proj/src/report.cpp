#include "medfx/report.hpp"

#include "medfx/csv.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace medfx {

std::string render_value(const ReportValue& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(x);
        } else if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else {
          return std::to_string(x);
        }
      },
      v);
}

ReportSection& ReportSection::set(const std::string& key, ReportValue value) {
  for (auto& [k, v] : entries) {
    if (k == key) {
      v = std::move(value);
      return *this;
    }
  }
  entries.emplace_back(key, std::move(value));
  return *this;
}

ReportSection& Report::section(const std::string& name) {
  for (auto& s : sections) {
    if (s.name == name) return s;
  }
  sections.push_back(ReportSection{name, {}, {}, {}});
  return sections.back();
}

ReportSection& Report::table(const std::string& name, std::vector<std::string> columns) {
  auto& s = section(name);
  s.columns = std::move(columns);
  return s;
}

void write_text(std::ostream& out, const Report& report) {
  out << "# " << report.title << '\n';
  for (const auto& s : report.sections) {
    out << '\n' << '[' << s.name << ']' << '\n';
    if (!s.is_table()) {
      for (const auto& [k, v] : s.entries) {
        std::string text = render_value(v);
        std::replace(text.begin(), text.end(), '\n', ' ');
        out << k << '=' << text << '\n';
      }
      continue;
    }
    std::vector<std::vector<std::string>> cells;
    cells.push_back(s.columns);
    for (const auto& r : s.rows) {
      std::vector<std::string> line;
      for (const auto& v : r) line.push_back(render_value(v));
      cells.push_back(std::move(line));
    }
    std::vector<std::size_t> width(s.columns.size(), 0);
    for (const auto& line : cells) {
      for (std::size_t j = 0; j < line.size() && j < width.size(); ++j) width[j] = std::max(width[j], line[j].size());
    }
    for (const auto& line : cells) {
      std::string text;
      for (std::size_t j = 0; j < line.size(); ++j) {
        if (j > 0) text += "  ";
        text += line[j];
        if (j + 1 < line.size()) text.append(width[j] - line[j].size(), ' ');
      }
      out << text << '\n';
    }
  }
}

std::string to_text(const Report& report) {
  std::ostringstream out;
  write_text(out, report);
  return out.str();
}

namespace {

nlohmann::ordered_json json_value(const ReportValue& v) {
  return std::visit(
      [](const auto& x) -> nlohmann::ordered_json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(x)) return nullptr;
          return x;
        } else {
          return x;
        }
      },
      v);
}

}  // namespace

std::string to_json(const Report& report) {
  nlohmann::ordered_json root;
  root["title"] = report.title;
  auto& sections = root["sections"] = nlohmann::ordered_json::object();
  for (const auto& s : report.sections) {
    nlohmann::ordered_json node = nlohmann::ordered_json::object();
    if (s.is_table()) {
      node["columns"] = s.columns;
      auto& rows = node["rows"] = nlohmann::ordered_json::array();
      for (const auto& r : s.rows) {
        auto row = nlohmann::ordered_json::array();
        for (const auto& v : r) row.push_back(json_value(v));
        rows.push_back(std::move(row));
      }
    } else {
      for (const auto& [k, v] : s.entries) node[k] = json_value(v);
    }
    sections[s.name] = std::move(node);
  }
  // dump() keeps 17 significant digits for doubles
  return root.dump(2) + "\n";
}

ParsedReport parse_text_report(const std::string& text) {
  ParsedReport out;
  std::istringstream in(text);
  std::string line, current;
  bool first_line_of_section = false, table = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      current = line.substr(1, line.size() - 2);
      first_line_of_section = true;
      continue;
    }
    if (current.empty()) throw std::runtime_error("report line outside any section: " + line);
    if (first_line_of_section) {
      table = line.find('=') == std::string::npos;
      first_line_of_section = false;
    }
    if (table) {
      std::istringstream fields(line);
      std::vector<std::string> row;
      for (std::string f; fields >> f;) row.push_back(f);
      out.tables[current].push_back(std::move(row));
    } else {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw std::runtime_error("malformed report line: " + line);
      out.values[current][line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  return out;
}

}  // namespace medfx
