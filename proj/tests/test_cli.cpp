#include "medfx/cli.hpp"
#include "medfx/csv.hpp"
#include "medfx/estimators.hpp"
#include "medfx/parallel.hpp"
#include "medfx/simulation.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace medfx;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  static const fs::path dir = [] {
    auto p = fs::temp_directory_path() / ("medfx_cli_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string write_file(const std::string& name, const std::string& text) {
  const auto path = scratch() / name;
  std::ofstream(path, std::ios::binary) << text;
  return path.string();
}

std::string write_table(const std::string& name, const ObservationTable& table) {
  std::ostringstream s;
  write_csv(s, table_to_csv(table, "a", "y"));
  return write_file(name, s.str());
}

std::map<std::string, std::vector<std::string>> rows_by_first(const ParsedReport& r, const std::string& table) {
  std::map<std::string, std::vector<std::string>> out;
  const auto& rows = r.tables.at(table);
  for (std::size_t i = 1; i < rows.size(); ++i) out[rows[i][0]] = rows[i];
  return out;
}

std::vector<std::string> estimate_args(const std::string& csv) {
  return {"estimate", "--input", csv, "--covariates", "c1,c2", "--treatment", "a", "--mediators", "m1,m2",
          "--outcome", "y"};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config file lines become flags") {
  const auto args = config_file_arguments(
      "# comment\n\nalpha = 0.1\nsimulate.replicates=7\nestimate.method=tmle\ntmle_mode=iterate\r\n", "simulate");
  CHECK(args == std::vector<std::string>{"--alpha=0.1", "--replicates=7", "--tmle-mode=iterate"});
  CHECK_THROWS_AS(config_file_arguments("no equals sign\n", "estimate"), ConfigError);
}

TEST_CASE("thread count falls back to MEDFX_THREADS") {
  ::setenv("MEDFX_THREADS", "3", 1);
  CHECK(resolve_threads(0) == 3);
  CHECK(resolve_threads(2) == 2);
  ::unsetenv("MEDFX_THREADS");
  CHECK(resolve_threads(0) >= 1);
}

TEST_CASE("help, version and usage errors") {
  CHECK(cli({"--help"}).code == kExitOk);
  CHECK(cli({"estimate", "--help"}).code == kExitOk);
  CHECK(cli({"--version"}).code == kExitOk);
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"validate", "--no-such-flag"}).code == kExitUsage);
  CHECK(cli({"estimate", "--input", "x.csv"}).code == kExitUsage);  // required columns missing
}

TEST_CASE("validate: passing subset, mutation fixture and bad combination ids") {
  const auto ok = cli({"validate", "--checks", "truth,reduction", "--check-n", "300"});
  CHECK(ok.code == kExitOk);
  CHECK(ok.out.find("FAIL") == std::string::npos);

  const auto flipped = cli({"validate", "--checks", "mean_zero", "--mean-zero-draws", "200000", "--fixture",
                            "flip-eif-sign", "--threads", "1"});
  CHECK(flipped.code == kExitFailure);
  CHECK(flipped.out.find("FAIL") != std::string::npos);

  CHECK(cli({"validate", "--checks", "robustness", "--robustness-combos", "99"}).code == kExitUsage);
  CHECK(cli({"validate", "--checks", "robustness", "--robustness-combos", "no_such_combo"}).code == kExitUsage);
  CHECK(cli({"validate", "--checks", "everything"}).code == kExitUsage);
}

TEST_CASE("estimate: CLI output equals the library to 1e-12") {
  DgpConfig cfg;
  cfg.n = 400;
  cfg.seed = 5;
  const auto table = draw_dgp(cfg);
  const auto csv = write_table("roundtrip.csv", table);
  auto args = estimate_args(csv);
  args.push_back("--ratio");
  const auto res = cli(args);
  REQUIRE_MESSAGE(res.code == kExitOk, res.err);
  const auto report = parse_text_report(res.out);

  const auto fitted = fit_nuisances(table, NuisanceSpec{});
  const auto subjects = evaluate_subjects(fitted, table);
  EstimatorOptions opt;
  opt.ratio = true;
  for (auto [name, out] : {std::pair{std::string("one_step"), onestep(subjects, table, opt)},
                           std::pair{std::string("tmle"), tmle(subjects, table, opt)}}) {
    const auto rows = rows_by_first(report, "estimates." + name);
    for (std::size_t k = 0; k < kNumEffects; ++k) {
      const auto& row = rows.at(effect_names()[k]);
      CHECK(std::abs(std::stod(row[1]) - out.report.estimates[k]) <= 1e-12);
      CHECK(std::abs(std::stod(row[2]) - out.report.se[k]) <= 1e-12);
      CHECK(std::abs(std::stod(row[3]) - out.report.ci_lower[k]) <= 1e-12);
    }
    CHECK(std::abs(std::stod(report.values.at("ratio." + name).at("ratio")) - out.report.ratio->ratio) <= 1e-12);
  }
  CHECK(report.values.at("config").at("seed") == "1");
  CHECK(report.tables.count("covariance.one_step") == 1);
  CHECK(report.tables.count("contrasts.tmle") == 1);
  CHECK(report.values.count("warnings") == 1);

  // Same inputs, same bytes.
  CHECK(cli(args).out == res.out);
}

TEST_CASE("estimate: toy binary-mediator data decomposes exactly") {
  const auto csv = write_file("toy.csv",
                              "c,treat,m1,m2,y\n"
                              "0.1,yes,0,1,1.5\n0.9,no,1,0,0.2\n0.4,yes,1,1,2.0\n0.3,no,0,0,0.0\n"
                              "0.7,yes,0,0,1.1\n0.2,no,1,1,0.9\n0.5,yes,1,0,1.7\n0.8,no,0,1,0.4\n");
  const auto res = cli({"estimate", "--input", csv, "--covariates", "c", "--treatment", "treat", "--treated-level",
                        "yes", "--control-level", "no", "--mediators", "m1,m2", "--outcome", "y", "--method",
                        "one_step"});
  REQUIRE_MESSAGE(res.code == kExitOk, res.err);
  const auto rows = rows_by_first(parse_text_report(res.out), "estimates.one_step");
  REQUIRE(rows.size() == 5);
  auto v = [&](const char* e) { return std::stod(rows.at(e)[1]); };
  CHECK(std::abs(v("total") - (v("direct") + v("indirect_m1") + v("indirect_m2") + v("covariant"))) <= 1e-12);
}

TEST_CASE("estimate: data errors exit 2 with a location") {
  const auto bad = write_file("bad.csv", "c1,c2,a,m1,m2,y\n0.1,0.2,1,0,1,1\n0.3,0.4,0,1\n");
  auto res = cli(estimate_args(bad));
  CHECK(res.code == kExitUsage);
  CHECK(res.err.find("row 3") != std::string::npos);

  const auto text = write_file("text.csv", "c1,c2,a,m1,m2,y\n0.1,0.2,1,0,1,1\n0.3,abc,0,1,0,0\n");
  res = cli(estimate_args(text));
  CHECK(res.code == kExitUsage);
  CHECK(res.err.find("column 2") != std::string::npos);

  const auto label = write_file("label.csv", "c1,c2,a,m1,m2,y\n0.1,0.2,1,0,1,1\n0.3,0.4,2,1,0,0\n");
  CHECK(cli(estimate_args(label)).code == kExitUsage);

  auto missing = estimate_args(bad);
  missing[8] = "m1,m9";
  CHECK(cli(missing).code == kExitUsage);
  CHECK(cli(estimate_args((scratch() / "absent.csv").string())).code == kExitUsage);
  auto one_mediator = estimate_args(bad);
  one_mediator[8] = "m1";
  CHECK(cli(one_mediator).code == kExitUsage);
}

TEST_CASE("config file, flag precedence and JSON sidecar") {
  DgpConfig cfg;
  cfg.n = 300;
  cfg.seed = 6;
  const auto csv = write_table("prec.csv", cfg.n ? draw_dgp(cfg) : ObservationTable{});
  const auto conf = write_file("run.conf", "alpha=0.1\nestimate.method=one_step\nsimulate.replicates=3\n");
  const auto json = (scratch() / "side.json").string();

  auto args = estimate_args(csv);
  args.insert(args.end(), {"--config", conf, "--json", json});
  auto res = cli(args);
  REQUIRE_MESSAGE(res.code == kExitOk, res.err);
  auto report = parse_text_report(res.out);
  CHECK(std::stod(report.values.at("config").at("alpha")) == 0.1);
  CHECK(report.values.at("config").at("method") == "one_step");
  CHECK(report.tables.count("estimates.tmle") == 0);

  const auto j = nlohmann::json::parse(std::ifstream(json));
  CHECK(j["sections"]["config"]["alpha"] == 0.1);
  CHECK(j["sections"]["estimates.one_step"]["columns"][0] == "effect");

  args.insert(args.end(), {"--alpha", "0.2"});
  res = cli(args);
  report = parse_text_report(res.out);
  CHECK(std::stod(report.values.at("config").at("alpha")) == 0.2);

  args.insert(args.end(), {"--ratio=false", "--method", "tmle"});
  res = cli(args);
  report = parse_text_report(res.out);
  CHECK(report.values.at("config").at("ratio") == "false");
  CHECK(report.tables.count("estimates.tmle") == 1);
}

TEST_CASE("estimate: three mediators use the multimediator one-step") {
  auto cfg = DgpConfig::paper(3);
  cfg.n = 400;
  cfg.seed = 7;
  const auto csv = write_table("three.csv", draw_dgp(cfg));
  const auto res = cli({"estimate", "--input", csv, "--covariates", "c1,c2", "--treatment", "a", "--mediators",
                        "m1,m2,m3", "--outcome", "y"});
  REQUIRE_MESSAGE(res.code == kExitOk, res.err);
  const auto report = parse_text_report(res.out);
  const auto rows = rows_by_first(report, "estimates.multimediator_one_step");
  CHECK(rows.size() == 4);
  CHECK(rows.count("indirect_m3") == 1);
  CHECK(report.values.at("warnings").at("count") != "0");
}

TEST_CASE("simulate: quick mode is deterministic and tiny samples are counted as failures") {
  const auto reps = (scratch() / "reps.csv").string();
  const std::vector<std::string> args{"simulate", "--quick", "--methods", "one_step", "--seed", "11",
                                      "--replicates-file", reps};
  const auto a = cli(args);
  REQUIRE_MESSAGE(a.code == kExitOk, a.err);
  const auto b = cli(args);
  CHECK(a.out == b.out);
  const auto table = read_csv_file(reps);
  CHECK(table.rows.size() == 2 * 100 * 5);
  CHECK(parse_text_report(a.out).values.at("config").at("seed") == "11");

  const auto tiny = cli({"simulate", "--sizes", "3", "--replicates", "4", "--methods", "one_step"});
  CHECK(tiny.code == kExitOk);
  const auto broken = cli({"simulate", "--sizes", "50", "--replicates", "4", "--methods", "one_step", "--cell-cap", "10"});
  CHECK(broken.code == kExitOk);
  CHECK(parse_text_report(broken.out).values.at("failures").at("count") == "4");

  CHECK(cli({"simulate", "--sizes", "0"}).code == kExitUsage);
  CHECK(cli({"simulate", "--methods", "magic"}).code == kExitUsage);
}

}
