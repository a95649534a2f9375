#include "medfx/cli.hpp"

#include "medfx/csv.hpp"
#include "medfx/estimators.hpp"
#include "medfx/multimediator.hpp"
#include "medfx/parallel.hpp"
#include "medfx/simulation.hpp"
#include "medfx/validation.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace medfx {

namespace {

constexpr const char* kVersion = "1.0.0";

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text, const std::string& what) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text)) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size() || v == 0) {
      throw ConfigError(what + ": '" + item + "' is not a positive integer");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(what + " is empty");
  return out;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw ConfigError(what + ": '" + item + "' is not a number");
    }
    out.push_back(v);
  }
  return out;
}

LearnerSpec learner(const std::string& kind, double floor, int max_iterations) {
  LearnerSpec spec;
  try {
    spec.kind = parse_learner_kind(kind);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (spec.kind == LearnerSpec::Kind::user_plugin) throw ConfigError("plugin learners are library-only");
  spec.prediction_floor = floor;
  spec.max_iterations = max_iterations;
  try {
    spec.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

NuisanceSpec nuisance_spec(const RunConfig& c) {
  NuisanceSpec spec;
  spec.propensity = learner(c.propensity_learner, c.propensity_floor, c.max_iterations);
  spec.outcome = learner(c.outcome_learner, 1e-3, c.max_iterations);
  spec.mediator = learner(c.mediator_learner, c.hazard_floor, c.max_iterations);
  spec.density.features = c.hazard_features == "interacted" ? HazardFeatures::interacted : HazardFeatures::main_terms;
  spec.density.floor = c.density_floor;
  spec.density.cell_cap = c.cell_cap;
  return spec;
}

void echo_common(Report& r, const RunConfig& c) {
  auto& s = r.section("config");
  s.set("command", c.command);
  if (!c.config_file.empty()) s.set("config", c.config_file);
  s.set("seed", static_cast<std::int64_t>(c.seed));
}

void echo_learners(ReportSection& s, const RunConfig& c) {
  s.set("propensity_learner", c.propensity_learner);
  s.set("outcome_learner", c.outcome_learner);
  s.set("mediator_learner", c.mediator_learner);
  s.set("propensity_floor", c.propensity_floor);
  s.set("hazard_floor", c.hazard_floor);
  s.set("density_floor", c.density_floor);
  s.set("hazard_features", c.hazard_features);
  s.set("cell_cap", static_cast<std::int64_t>(c.cell_cap));
  s.set("max_iterations", static_cast<std::int64_t>(c.max_iterations));
}

ObservationTable load_table(const RunConfig& c) {
  const auto csv = read_csv_file(c.input);
  const auto covariates = split_list(c.covariates);
  const auto mediators = split_list(c.mediators);
  if (covariates.empty()) throw ConfigError("at least one covariate column is required");
  if (mediators.size() < 2) throw ConfigError("at least two mediator columns are required");
  if (c.treatment.empty() || c.outcome.empty()) throw ConfigError("treatment and outcome columns are required");
  if (c.treated_level == c.control_level) throw ConfigError("treated and control levels must differ");

  const auto n = static_cast<Eigen::Index>(csv.rows.size());
  RawData raw;
  raw.covariates.resize(n, static_cast<Eigen::Index>(covariates.size()));
  raw.mediators.resize(n, static_cast<Eigen::Index>(mediators.size()));
  raw.treatment.resize(n);
  raw.outcome.resize(n);
  raw.covariate_names = covariates;
  raw.mediator_names = mediators;

  std::vector<std::size_t> cov_cols, med_cols;
  for (const auto& name : covariates) cov_cols.push_back(csv.column(name));
  for (const auto& name : mediators) med_cols.push_back(csv.column(name));
  const std::size_t a_col = csv.column(c.treatment);
  const std::size_t y_col = csv.column(c.outcome);

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = csv.rows[static_cast<std::size_t>(i)];
    const std::size_t line = static_cast<std::size_t>(i) + 2;  // header is row 1
    for (std::size_t j = 0; j < cov_cols.size(); ++j) {
      raw.covariates(i, static_cast<Eigen::Index>(j)) = parse_number(row[cov_cols[j]], line, cov_cols[j] + 1);
    }
    for (std::size_t j = 0; j < med_cols.size(); ++j) {
      raw.mediators(i, static_cast<Eigen::Index>(j)) = parse_number(row[med_cols[j]], line, med_cols[j] + 1);
    }
    const std::string& label = row[a_col];
    if (label == c.treated_level) {
      raw.treatment[i] = 1;
    } else if (label == c.control_level) {
      raw.treatment[i] = 0;
    } else {
      throw CsvError("treatment label '" + label + "' is neither the treated ('" + c.treated_level +
                         "') nor the control ('" + c.control_level + "') level",
                     line, a_col + 1);
    }
    raw.outcome[i] = parse_number(row[y_col], line, y_col + 1);
  }

  SupportSpec spec;
  spec.levels.assign(mediators.size(), std::nullopt);
  spec.bin_edges.assign(mediators.size(), std::nullopt);
  for (const auto& entry : c.bin_edges) {
    const auto colon = entry.find(':');
    if (colon == std::string::npos) throw ConfigError("bin edges must look like name:e0,e1,...");
    const auto name = entry.substr(0, colon);
    const auto it = std::find(mediators.begin(), mediators.end(), name);
    if (it == mediators.end()) throw ConfigError("bin edges given for unknown mediator '" + name + "'");
    spec.bin_edges[static_cast<std::size_t>(it - mediators.begin())] =
        parse_doubles(entry.substr(colon + 1), "bin edges of " + name);
  }
  spec.y_min = c.y_min;
  spec.y_max = c.y_max;
  return validate_dataset(raw, spec);
}

void add_effect_table(Report& r, const std::string& name, const EstimatorOutput& e, const OutcomeScale& scale) {
  auto& t = r.table("estimates." + name, {"effect", "estimate", "se", "ci_lower", "ci_upper", "z", "p_value",
                                          "plugin"});
  const auto& rep = e.report;
  for (std::size_t k = 0; k < kNumEffects; ++k) {
    t.rows.push_back({effect_names()[k], rep.estimates[k], rep.se[k], rep.ci_lower[k], rep.ci_upper[k], rep.z[k],
                      rep.p_value[k], scale.unscale_effect(e.plugin[k])});
  }
  std::vector<std::string> cols{"effect"};
  for (const auto& nm : effect_names()) cols.push_back(nm);
  auto& sigma = r.table("covariance." + name, cols);
  for (std::size_t i = 0; i < kNumEffects; ++i) {
    std::vector<ReportValue> row{effect_names()[i]};
    for (std::size_t j = 0; j < kNumEffects; ++j) {
      row.emplace_back(rep.sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    sigma.rows.push_back(std::move(row));
  }
  if (!rep.contrasts.empty()) {
    auto& ct = r.table("contrasts." + name, {"contrast", "estimate", "se", "z", "p_value", "degenerate"});
    for (const auto& c : rep.contrasts) ct.rows.push_back({c.name, c.estimate, c.se, c.z, c.p_value, c.degenerate});
  }
  if (rep.ratio) {
    auto& rs = r.section("ratio." + name);
    rs.set("definition", "indirect_m1 ratio psi(a; M1 under a, M2 under a*) / psi(a; M1 and M2 under a*)");
    rs.set("numerator", rep.ratio->numerator);
    rs.set("denominator", rep.ratio->denominator);
    rs.set("ratio", rep.ratio->ratio);
    rs.set("tau", rep.ratio->tau);
    rs.set("se", rep.ratio->se);
    rs.set("ci_lower", rep.ratio->ci_lower);
    rs.set("ci_upper", rep.ratio->ci_upper);
  }
  auto& d = r.section("diagnostics." + name);
  d.set("out_of_bounds", e.out_of_bounds);
  for (std::size_t k = 0; k < kNumEffects; ++k) {
    d.set("residual_score." + effect_names()[k], e.residual_scores[k]);
  }
  if (e.fluctuations) {
    const auto& f = *e.fluctuations;
    for (std::size_t j = 0; j < f.epsilon.coefficients.size(); ++j) {
      d.set("epsilon." + std::to_string(j + 1), f.epsilon.coefficients[j]);
    }
    d.set("delta", f.delta.coefficients.at(0));
    d.set("eta", f.eta.coefficients.at(0));
    d.set("gamma", f.gamma.coefficients.at(0));
    d.set("zeta", f.zeta.coefficients.at(0));
    d.set("total_a", f.total_a.coefficients.at(0));
    d.set("total_astar", f.total_astar.coefficients.at(0));
    d.set("passes", static_cast<std::int64_t>(f.passes));
    d.set("max_first_order_condition", f.max_abs_score());
    d.set("offset_clamped", f.clamped);
  }
}

void add_warnings(Report& r, const std::vector<std::string>& warnings) {
  auto& w = r.section("warnings");
  w.set("count", static_cast<std::int64_t>(warnings.size()));
  for (std::size_t i = 0; i < warnings.size(); ++i) w.set("warning." + std::to_string(i + 1), warnings[i]);
}

void push_unique(std::vector<std::string>& v, const std::string& s) {
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

std::string method_name(Method m) { return to_string(m); }

}  // namespace

Report cmd_estimate(const RunConfig& c) {
  if (c.method != "one_step" && c.method != "tmle" && c.method != "both") {
    throw ConfigError("method must be one_step, tmle or both");
  }
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  const auto spec = nuisance_spec(c);
  const auto table = load_table(c);
  const unsigned threads = resolve_threads(c.threads);

  Report r;
  r.title = std::string("medfx ") + kVersion + " estimate report";
  echo_common(r, c);
  auto& cfg = r.section("config");
  cfg.set("input", c.input);
  cfg.set("covariates", c.covariates);
  cfg.set("treatment", c.treatment);
  cfg.set("treated_level", c.treated_level);
  cfg.set("control_level", c.control_level);
  cfg.set("mediators", c.mediators);
  cfg.set("outcome", c.outcome);
  cfg.set("y_min", c.y_min ? ReportValue(*c.y_min) : ReportValue(std::string("data")));
  cfg.set("y_max", c.y_max ? ReportValue(*c.y_max) : ReportValue(std::string("data")));
  for (std::size_t i = 0; i < c.bin_edges.size(); ++i) cfg.set("bin_edges." + std::to_string(i + 1), c.bin_edges[i]);
  cfg.set("method", c.method);
  cfg.set("tmle_mode", c.tmle_mode);
  cfg.set("alpha", c.alpha);
  cfg.set("ratio", c.ratio);
  echo_learners(cfg, c);

  auto& data = r.section("data");
  const auto treated = static_cast<std::int64_t>(std::count(table.treatment.begin(), table.treatment.end(), 1));
  data.set("n", static_cast<std::int64_t>(table.size()));
  data.set("n_treated", treated);
  data.set("n_control", static_cast<std::int64_t>(table.size()) - treated);
  data.set("num_mediators", static_cast<std::int64_t>(table.num_mediators()));
  data.set("y_min", table.outcome_scale.y_min);
  data.set("y_max", table.outcome_scale.y_max);
  for (std::size_t j = 0; j < table.num_mediators(); ++j) {
    std::string levels;
    for (int v : table.support.levels[j]) levels += (levels.empty() ? "" : ",") + std::to_string(v);
    data.set("support." + table.mediator_names[j], levels);
  }
  auto& pos = r.section("positivity");
  pos.set("count", static_cast<std::int64_t>(table.warnings.size()));
  for (std::size_t i = 0; i < table.warnings.size(); ++i) {
    pos.set("warning." + std::to_string(i + 1), describe(table.warnings[i]));
  }

  const auto nuisances = fit_nuisances(table, spec);
  const auto diagnostics = nuisances.diagnostics();
  auto& nd = r.section("nuisance");
  nd.set("count", static_cast<std::int64_t>(diagnostics.size()));
  for (std::size_t i = 0; i < diagnostics.size(); ++i) nd.set("diagnostic." + std::to_string(i + 1), diagnostics[i]);

  const auto subjects = evaluate_subjects(nuisances, table, threads);
  std::vector<std::string> warnings;
  if (table.num_mediators() == 2) {
    EstimatorOptions options;
    options.alpha = c.alpha;
    options.ratio = c.ratio;
    options.mode = c.tmle_mode == "iterate" ? TmleMode::iterate : TmleMode::single_pass;
    options.threads = threads;
    if (c.method != "tmle") {
      const auto e = onestep(subjects, table, options);
      add_effect_table(r, "one_step", e, table.outcome_scale);
      for (const auto& w : e.warnings) push_unique(warnings, "one_step: " + w);
    }
    if (c.method != "one_step") {
      const auto e = tmle(subjects, table, options);
      add_effect_table(r, "tmle", e, table.outcome_scale);
      for (const auto& w : e.warnings) push_unique(warnings, "tmle: " + w);
    }
  } else {
    if (c.method != "one_step") push_unique(warnings, "TMLE is not available for more than two mediators; one-step only");
    if (c.ratio) push_unique(warnings, "the ratio effect is defined for two mediators only");
    auto& t = r.table("estimates.multimediator_one_step",
                      {"effect", "estimate", "se", "ci_lower", "ci_upper", "z", "p_value", "plugin"});
    auto add = [&](const MultiEffectResult& m) {
      t.rows.push_back({m.name, m.estimate, m.se, m.ci_lower, m.ci_upper, m.z, m.p_value,
                        table.outcome_scale.unscale_effect(m.plugin)});
    };
    add(onestep_multi_direct(subjects, table, c.alpha));
    for (std::size_t s = 1; s <= table.num_mediators(); ++s) add(onestep_multi_indirect(subjects, s, table, c.alpha));
  }
  add_warnings(r, warnings);
  return r;
}

Report cmd_simulate(const RunConfig& c) {
  MonteCarloConfig mc;
  mc.dgp = DgpConfig::paper();
  if (c.null_world) mc.dgp = mc.dgp.null_world();
  mc.seed = c.seed;
  mc.threads = resolve_threads(c.threads);
  mc.alpha = c.alpha;
  mc.ratio = c.ratio;
  mc.nuisance = nuisance_spec(c);
  mc.replicates = c.quick ? 100 : c.replicates;
  mc.sample_sizes = c.quick ? std::vector<std::size_t>{250, 1000} : parse_sizes(c.sizes, "sizes");
  mc.methods.clear();
  for (const auto& m : split_list(c.methods)) {
    if (m == "one_step") mc.methods.push_back(Method::one_step);
    else if (m == "tmle") mc.methods.push_back(Method::tmle);
    else throw ConfigError("unknown method '" + m + "'");
  }
  if (mc.methods.empty()) throw ConfigError("no methods selected");
  if (mc.replicates < 1) throw ConfigError("replicates must be positive");

  const auto sim = run_monte_carlo(mc);

  Report r;
  r.title = std::string("medfx ") + kVersion + " simulation report";
  echo_common(r, c);
  auto& cfg = r.section("config");
  cfg.set("quick", c.quick);
  cfg.set("replicates", static_cast<std::int64_t>(mc.replicates));
  std::string sizes;
  for (auto n : mc.sample_sizes) sizes += (sizes.empty() ? "" : ",") + std::to_string(n);
  cfg.set("sizes", sizes);
  cfg.set("methods", c.methods);
  cfg.set("null_world", c.null_world);
  cfg.set("alpha", c.alpha);
  cfg.set("ratio", c.ratio);
  echo_learners(cfg, c);

  auto& truth = r.section("truth");
  for (std::size_t k = 0; k < kNumEffects; ++k) truth.set(effect_names()[k], sim.truth.effects[k]);
  truth.set("ratio", sim.truth.ratio);
  truth.set("quadrature_nodes", static_cast<std::int64_t>(sim.truth.nodes));

  auto& t = r.table("summary", {"method", "n", "effect", "replicates", "failures", "truth", "mean", "bias", "sd",
                                "mse", "mean_se", "coverage_oracle", "coverage_estimated", "out_of_bounds",
                                "nonconverged"});
  for (const auto& cell : sim.cells) {
    t.rows.push_back({method_name(cell.method), static_cast<std::int64_t>(cell.n), effect_names()[cell.effect],
                      static_cast<std::int64_t>(cell.replicates), static_cast<std::int64_t>(cell.failures),
                      cell.truth, cell.mean, cell.bias, cell.sd, cell.mse, cell.mean_se, cell.coverage_oracle,
                      cell.coverage_estimated, static_cast<std::int64_t>(cell.out_of_bounds),
                      static_cast<std::int64_t>(cell.nonconverged)});
  }
  if (!sim.ratios.empty()) {
    auto& rt = r.table("ratio", {"method", "n", "replicates", "truth", "mean", "sd", "mean_se", "coverage"});
    for (const auto& s : sim.ratios) {
      rt.rows.push_back({method_name(s.method), static_cast<std::int64_t>(s.n),
                         static_cast<std::int64_t>(s.replicates), s.truth, s.mean, s.sd, s.mean_se, s.coverage});
    }
  }
  std::size_t failed = 0;
  auto& f = r.section("failures");
  for (const auto& rec : sim.records) {
    if (rec.ok) continue;
    ++failed;
    if (failed <= 20) {
      f.set("failure." + std::to_string(failed), "n=" + std::to_string(rec.n) + " replicate=" +
                                                     std::to_string(rec.replicate) + " " + method_name(rec.method) +
                                                     ": " + rec.error);
    }
  }
  f.set("count", static_cast<std::int64_t>(failed));

  if (!c.replicates_file.empty()) {
    // Long format, one line per replicate x method x effect: the inputs of the
    // standardized-estimate density plots.
    CsvTable out;
    out.header = {"n", "replicate", "seed", "method", "effect", "ok", "estimate", "se", "z_estimated_se",
                  "z_oracle_se", "error"};
    for (const auto& rec : sim.records) {
      for (std::size_t k = 0; k < kNumEffects; ++k) {
        const double truth_k = sim.truth.effects[k];
        double oracle_sd = std::nan("");
        for (const auto& cell : sim.cells) {
          if (cell.method == rec.method && cell.n == rec.n && cell.effect == k) oracle_sd = cell.sd;
        }
        const double est = rec.ok ? rec.estimate[k] : std::nan("");
        const double se = rec.ok ? rec.se[k] : std::nan("");
        out.rows.push_back({std::to_string(rec.n), std::to_string(rec.replicate), std::to_string(rec.seed),
                            method_name(rec.method), effect_names()[k], rec.ok ? "1" : "0", format_double(est),
                            format_double(se), format_double((est - truth_k) / se),
                            format_double((est - truth_k) / oracle_sd), rec.error});
      }
    }
    std::ofstream file(c.replicates_file, std::ios::binary);
    if (!file) throw ConfigError("cannot write '" + c.replicates_file + "'");
    write_csv(file, out);
  }
  return r;
}

Report cmd_validate(const RunConfig& c, bool& failed) {
  const auto checks = split_list(c.checks);
  static const std::vector<std::string> known{"truth", "mean_zero", "npmle", "tmle_scores", "reduction",
                                              "robustness"};
  for (const auto& name : checks) {
    if (std::find(known.begin(), known.end(), name) == known.end()) throw ConfigError("unknown check '" + name + "'");
  }
  Fixture fixture = Fixture::none;
  if (c.fixture == "flip-eif-sign") fixture = Fixture::flip_eif_sign;
  else if (c.fixture != "none") throw ConfigError("unknown fixture '" + c.fixture + "'");

  RobustnessConfig rc;
  rc.seed = c.seed;
  rc.threads = resolve_threads(c.threads);
  rc.replicates = c.robustness_replicates;
  rc.sample_sizes = parse_sizes(c.robustness_sizes, "robustness sizes");
  const auto& all = robustness_combos();
  for (const auto& id : split_list(c.robustness_combos)) {
    std::size_t index = 0;
    const auto [ptr, ec] = std::from_chars(id.data(), id.data() + id.size(), index);
    if (ec == std::errc() && ptr == id.data() + id.size()) {
      if (index < 1 || index > all.size()) {
        throw ConfigError("robustness combination " + id + " out of range 1.." + std::to_string(all.size()));
      }
      rc.combos.push_back(all[index - 1].id);
    } else {
      try {
        rc.combos.push_back(find_combo(id).id);
      } catch (const std::out_of_range& e) {
        throw ConfigError(e.what());
      }
    }
  }
  if (rc.replicates < 1) throw ConfigError("robustness replicates must be positive");

  auto has = [&](const char* name) { return std::find(checks.begin(), checks.end(), name) != checks.end(); };
  std::vector<CheckResult> results;
  auto append = [&](std::vector<CheckResult> v) { results.insert(results.end(), v.begin(), v.end()); };
  if (has("truth")) append(check_truth());
  if (has("mean_zero")) append(check_eif_mean_zero(c.mean_zero_draws, c.seed, rc.threads, fixture));
  if (has("npmle")) append(check_npmle(500, c.seed));
  if (has("tmle_scores")) append(check_tmle_scores(c.check_n, c.seed));
  if (has("reduction")) append(check_reduction(c.check_n, c.seed));
  if (has("robustness")) append(check_robustness(rc));

  Report r;
  r.title = std::string("medfx ") + kVersion + " validation report";
  echo_common(r, c);
  auto& cfg = r.section("config");
  cfg.set("checks", c.checks);
  cfg.set("mean_zero_draws", static_cast<std::int64_t>(c.mean_zero_draws));
  cfg.set("check_n", static_cast<std::int64_t>(c.check_n));
  cfg.set("robustness_combos", c.robustness_combos.empty() ? std::string("all") : c.robustness_combos);
  cfg.set("robustness_replicates", static_cast<std::int64_t>(c.robustness_replicates));
  cfg.set("robustness_sizes", c.robustness_sizes);
  cfg.set("fixture", c.fixture);

  auto& t = r.table("checks", {"check", "status", "measured", "threshold", "detail"});
  std::size_t passed = 0;
  for (const auto& res : results) {
    std::string detail = res.detail.empty() ? "-" : res.detail;
    std::replace(detail.begin(), detail.end(), ' ', ';');
    t.rows.push_back({res.name, std::string(res.pass ? "PASS" : "FAIL"), res.measured, res.threshold, detail});
    passed += res.pass ? 1 : 0;
  }
  failed = passed != results.size();
  auto& s = r.section("summary");
  s.set("checks", static_cast<std::int64_t>(results.size()));
  s.set("passed", static_cast<std::int64_t>(passed));
  s.set("failed", static_cast<std::int64_t>(results.size() - passed));
  s.set("status", std::string(failed ? "FAIL" : "PASS"));
  return r;
}

std::vector<std::string> config_file_arguments(const std::string& text, const std::string& command) {
  static const std::vector<std::string> commands{"estimate", "simulate", "validate"};
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(number) + " has no '='");
    std::string key = line.substr(start, eq - start);
    key.erase(key.find_last_not_of(" \t") + 1);
    std::string value = line.substr(eq + 1);
    value.erase(0, value.find_first_not_of(" \t"));
    value.erase(value.find_last_not_of(" \t") + 1);
    const auto dot = key.find('.');
    if (dot != std::string::npos) {
      const std::string prefix = key.substr(0, dot);
      if (std::find(commands.begin(), commands.end(), prefix) != commands.end()) {
        if (prefix != command) continue;
        key = key.substr(dot + 1);
      }
    }
    std::replace(key.begin(), key.end(), '.', '-');
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty()) throw ConfigError("config line " + std::to_string(number) + " has an empty key");
    out.push_back("--" + key + "=" + value);
  }
  return out;
}

namespace {

void add_common(CLI::App* app, RunConfig& c) {
  app->add_option("--config", c.config_file, "key=value config file; flags override it");
  app->add_option("--seed", c.seed, "random seed (echoed in every report)");
  app->add_option("--threads", c.threads, "worker threads (default: MEDFX_THREADS, then all cores)");
  app->add_option("--output,-o", c.output, "report path (default: stdout)");
  app->add_option("--json", c.json, "JSON sidecar path");
  app->add_option("--alpha", c.alpha, "1 - confidence level");
  app->add_flag("--ratio", c.ratio, "also report the indirect-M1 ratio effect");
}

void add_learners(CLI::App* app, RunConfig& c) {
  const auto kinds = CLI::IsMember({"intercept_only", "main_terms_logistic"});
  app->add_option("--propensity-learner", c.propensity_learner)->check(kinds);
  app->add_option("--outcome-learner", c.outcome_learner)->check(kinds);
  app->add_option("--mediator-learner", c.mediator_learner)->check(kinds);
  app->add_option("--propensity-floor", c.propensity_floor, "clamp for the propensity score");
  app->add_option("--hazard-floor", c.hazard_floor, "clamp for predicted hazards");
  app->add_option("--density-floor", c.density_floor, "floor on joint mediator probabilities");
  app->add_option("--hazard-features", c.hazard_features)->check(CLI::IsMember({"main_terms", "interacted"}));
  app->add_option("--cell-cap", c.cell_cap, "largest joint mediator support");
  app->add_option("--max-iterations", c.max_iterations, "IRLS iteration limit");
}

void write_to(const std::string& path, const std::string& text, std::ostream& fallback) {
  if (path.empty()) {
    fallback << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ConfigError("cannot write '" + path + "'");
  file << text;
}

}  // namespace

int run(const std::vector<std::string>& input, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Interventional mediation effects: estimation, simulation and validation", "medfx"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string("medfx ") + kVersion);

  auto* est = app.add_subcommand("estimate", "estimate effects from a CSV file");
  est->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  add_common(est, c);
  add_learners(est, c);
  est->add_option("--input,-i", c.input, "CSV file with a header row")->required();
  est->add_option("--covariates", c.covariates, "comma-separated confounder columns")->required();
  est->add_option("--treatment", c.treatment, "treatment column")->required();
  est->add_option("--treated-level", c.treated_level, "label of the contrast level a");
  est->add_option("--control-level", c.control_level, "label of the reference level a*");
  est->add_option("--mediators", c.mediators, "comma-separated mediator columns, in order")->required();
  est->add_option("--outcome", c.outcome, "outcome column")->required();
  est->add_option("--y-min", c.y_min, "lower outcome bound (default: sample minimum)");
  est->add_option("--y-max", c.y_max, "upper outcome bound (default: sample maximum)");
  est->add_option("--bin-edges", c.bin_edges, "name:e0,e1,... bins a continuous mediator (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->delimiter(';');
  est->add_option("--method", c.method)->check(CLI::IsMember({"one_step", "tmle", "both"}));
  est->add_option("--tmle-mode", c.tmle_mode)->check(CLI::IsMember({"single_pass", "iterate"}));

  auto* sim = app.add_subcommand("simulate", "Monte Carlo study of the reference data-generating process");
  sim->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  add_common(sim, c);
  add_learners(sim, c);
  sim->add_flag("--quick", c.quick, "100 replicates at n = 250 and 1000");
  sim->add_option("--replicates", c.replicates, "replicates per sample size");
  sim->add_option("--sizes", c.sizes, "comma-separated sample sizes");
  sim->add_option("--methods", c.methods, "one_step,tmle");
  sim->add_flag("--null-world", c.null_world, "remove every effect of treatment");
  sim->add_option("--replicates-file", c.replicates_file, "replicate-level CSV");

  auto* val = app.add_subcommand("validate", "oracle and property checks");
  val->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  add_common(val, c);
  val->add_option("--checks", c.checks, "comma-separated subset of the checks");
  val->add_option("--mean-zero-draws", c.mean_zero_draws, "simulated observations for the EIF mean-zero check");
  val->add_option("--check-n", c.check_n, "sample size of the TMLE score and reduction checks");
  val->add_option("--robustness-combos", c.robustness_combos, "combination ids or 1-based indices");
  val->add_option("--robustness-replicates", c.robustness_replicates, "replicates per robustness cell");
  val->add_option("--robustness-sizes", c.robustness_sizes, "sample sizes; the verdict uses the largest");
  val->add_option("--fixture", c.fixture, "test fixture: none or flip-eif-sign");

  std::vector<std::string> args = input;
  try {
    // Config-file settings go in front of the user's flags so the flags win under TakeLast.
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
      else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (!config_path.empty() && !args.empty()) {
      std::ifstream file(config_path, std::ios::binary);
      if (!file) throw ConfigError("cannot read config file '" + config_path + "'");
      std::ostringstream text;
      text << file.rdbuf();
      const auto extra = config_file_arguments(text.str(), args[0]);
      args.insert(args.begin() + 1, extra.begin(), extra.end());
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << "medfx " << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "medfx: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "medfx: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    Report report;
    int code = kExitOk;
    if (est->parsed()) {
      c.command = "estimate";
      report = cmd_estimate(c);
    } else if (sim->parsed()) {
      c.command = "simulate";
      report = cmd_simulate(c);
    } else {
      c.command = "validate";
      bool failed = false;
      report = cmd_validate(c, failed);
      if (failed) code = kExitFailure;
    }
    write_to(c.output, to_text(report), out);
    if (!c.json.empty()) write_to(c.json, to_json(report), out);
    return code;
  } catch (const ConfigError& e) {
    err << "medfx: configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "medfx: data error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "medfx: " << e.what() << '\n';
    return kExitFailure;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace medfx
