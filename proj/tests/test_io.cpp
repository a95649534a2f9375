#include "medfx/csv.hpp"
#include "medfx/report.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <limits>
#include <sstream>

using namespace medfx;

TEST_SUITE("io") {

TEST_CASE("RFC-4180 parsing") {
  const auto t = parse_csv("\xEF\xBB\xBF" "a,b,c\r\n1,\"x,y\",\"say \"\"hi\"\"\"\r\n\r\n2,,\"multi\nline\"\n");
  REQUIRE(t.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "x,y");
  CHECK(t.rows[0][2] == "say \"hi\"");
  CHECK(t.rows[1][1] == "");
  CHECK(t.rows[1][2] == "multi\nline");
  CHECK(t.column("c") == 2);
  CHECK_THROWS_AS(t.column("d"), DataError);
}

TEST_CASE("malformed CSV reports row and column") {
  auto row_col = [](const std::string& text) {
    try {
      parse_csv(text);
    } catch (const CsvError& e) {
      return std::pair{e.row(), e.column()};
    }
    return std::pair<std::size_t, std::size_t>{0, 0};
  };
  CHECK(row_col("a,b\n1,2\n3\n") == std::pair<std::size_t, std::size_t>{3, 0});
  CHECK(row_col("a,b\n1,2\"x\n").first == 2);
  CHECK(row_col("a,b\n1,\"open\n").first == 2);
  CHECK(row_col("a,a\n1,2\n") == std::pair<std::size_t, std::size_t>{1, 2});
  CHECK(row_col("").first == 1);
}

TEST_CASE("numbers") {
  CHECK(parse_number("1.5", 2, 1) == 1.5);
  CHECK(parse_number("-3e-2", 2, 1) == -0.03);
  CHECK(std::isnan(parse_number("", 2, 1)));
  CHECK(std::isnan(parse_number("NA", 2, 1)));
  CHECK_THROWS_AS(parse_number("1.5x", 7, 3), CsvError);
  try {
    parse_number("abc", 7, 3);
  } catch (const CsvError& e) {
    CHECK(e.row() == 7);
    CHECK(e.column() == 3);
  }
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789}) {
    CHECK(parse_number(format_double(v), 1, 1) == v);
  }
}

TEST_CASE("CSV write then parse") {
  CsvTable t;
  t.header = {"name", "value"};
  t.rows = {{"plain", "1"}, {"with,comma", "2"}, {"with \"quote\"", "3"}};
  std::ostringstream out;
  write_csv(out, t);
  const auto back = parse_csv(out.str());
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
}

TEST_CASE("text report round trip keeps every digit") {
  Report r;
  r.title = "demo";
  r.section("run").set("seed", std::int64_t{42}).set("alpha", 0.05).set("ratio", true).set("name", "x y");
  auto& t = r.table("estimates", {"effect", "estimate"});
  t.rows.push_back({std::string("total"), 0.1 + 0.2});
  t.rows.push_back({std::string("direct"), -1.0 / 3.0});
  const auto text = to_text(r);
  const auto parsed = parse_text_report(text);
  CHECK(parsed.values.at("run").at("seed") == "42");
  CHECK(parsed.values.at("run").at("ratio") == "true");
  CHECK(parsed.values.at("run").at("name") == "x y");
  CHECK(std::stod(parsed.values.at("run").at("alpha")) == 0.05);
  const auto& rows = parsed.tables.at("estimates");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"effect", "estimate"});
  CHECK(std::stod(rows[1][1]) == 0.1 + 0.2);
  CHECK(std::stod(rows[2][1]) == -1.0 / 3.0);
}

TEST_CASE("JSON sidecar") {
  Report r;
  r.title = "demo";
  r.section("run").set("x", std::numeric_limits<double>::quiet_NaN()).set("n", std::int64_t{3});
  r.table("t", {"a", "b"}).rows.push_back({std::string("u"), 2.5});
  const auto j = nlohmann::json::parse(to_json(r));
  CHECK(j["title"] == "demo");
  CHECK(j["sections"]["run"]["x"].is_null());
  CHECK(j["sections"]["run"]["n"] == 3);
  CHECK(j["sections"]["t"]["columns"][1] == "b");
  CHECK(j["sections"]["t"]["rows"][0][1] == 2.5);
}

}
