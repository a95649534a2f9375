#include "medfx/validation.hpp"

#include "medfx/density.hpp"
#include "medfx/multimediator.hpp"
#include "medfx/parallel.hpp"

#include <cmath>
#include <sstream>

namespace medfx {

namespace {

CheckResult make(std::string name, double measured, double threshold, bool pass, std::string detail = {}) {
  return CheckResult{std::move(name), pass, measured, threshold, std::move(detail)};
}

}  // namespace

std::vector<CheckResult> check_truth(const DgpConfig& dgp) {
  const EffectVector published{0.10, 0.15, -0.02, -0.03, 0.0};
  const auto truth = true_effects_oracle(dgp);
  std::vector<CheckResult> out;
  for (std::size_t k = 0; k < kNumEffects; ++k) {
    const double gap = std::abs(truth.effects[k] - published[k]);
    out.push_back(make("truth." + effect_names()[k], gap, 0.005, gap <= 0.005,
                       "oracle=" + std::to_string(truth.effects[k])));
  }
  return out;
}

std::vector<CheckResult> check_eif_mean_zero(std::size_t draws, std::uint64_t seed, unsigned threads,
                                             Fixture fixture, const DgpConfig& dgp) {
  DgpConfig cfg = dgp;
  cfg.n = draws;
  cfg.seed = seed;
  const auto table = draw_dgp(cfg);
  const AnalyticNuisances model(cfg);
  const auto psi = true_effects_oracle(cfg).effects;
  const auto n = static_cast<Eigen::Index>(table.size());
  Eigen::MatrixXd d(n, static_cast<Eigen::Index>(kNumEffects));
  // Rows are evaluated in place; storing every subject's nuisances would not fit at 1e6.
  parallel_for(table.size(), resolve_threads(threads), [&](std::size_t i) {
    std::vector<double> c;
    table.covariate_row(i, c);
    const auto s = evaluate_subject(model, c);
    const auto f = compute_functionals(s, table.support);
    auto row = eif_row(s, f, table.support, table.treatment[i], observed_cell(table, i),
                       table.outcome[static_cast<Eigen::Index>(i)]);
    if (fixture == Fixture::flip_eif_sign) {
      for (double& v : row) v = -v;
    }
    for (std::size_t k = 0; k < kNumEffects; ++k) {
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k] - psi[k];
    }
  });
  std::vector<CheckResult> out;
  for (std::size_t k = 0; k < kNumEffects; ++k) {
    const auto col = d.col(static_cast<Eigen::Index>(k));
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(n));
    const double se = sd / std::sqrt(static_cast<double>(n));
    out.push_back(make("eif_mean_zero." + effect_names()[k], std::abs(mean), 3.0 * se, std::abs(mean) <= 3.0 * se,
                       "draws=" + std::to_string(draws)));
  }
  return out;
}

ObservationTable saturated_table(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const auto rows = static_cast<Eigen::Index>(n);
  RawData raw;
  raw.covariates = Eigen::MatrixXd::Zero(rows, 1);
  raw.treatment.resize(rows);
  raw.mediators.resize(rows, 2);
  raw.outcome.resize(rows);
  raw.covariate_names = {"c"};
  raw.mediator_names = {"m1", "m2"};
  for (Eigen::Index i = 0; i < rows; ++i) {
    // The first eight rows fill every (arm, m1, m2) cell so all empirical ratios exist.
    int a, m1, m2;
    if (i < 8) {
      a = static_cast<int>(i / 4);
      m1 = static_cast<int>((i / 2) % 2);
      m2 = static_cast<int>(i % 2);
    } else {
      a = rng.bernoulli(0.45) ? 1 : 0;
      m1 = rng.bernoulli(0.35 + 0.2 * a) ? 1 : 0;
      m2 = rng.bernoulli(0.4 - 0.1 * a + 0.25 * m1) ? 1 : 0;
    }
    raw.treatment[i] = a;
    raw.mediators(i, 0) = m1;
    raw.mediators(i, 1) = m2;
    raw.outcome[i] = 2.0 * rng.uniform() + 0.8 * m1 - 0.5 * m2 + 0.6 * a;
  }
  SupportSpec spec;
  spec.y_min = -1.0;
  spec.y_max = 4.0;
  return validate_dataset(raw, spec);
}

std::vector<CheckResult> check_npmle(std::size_t n, std::uint64_t seed) {
  const auto table = saturated_table(n, seed);
  const EmpiricalNuisances model(table);
  const auto subjects = evaluate_subjects(model, table);
  const auto os = onestep(subjects, table);
  const auto tm = tmle(subjects, table);
  double score = 0.0, gap = 0.0;
  for (std::size_t k = 0; k < kNumEffects; ++k) {
    score = std::max(score, std::abs(os.residual_scores[k]));
    gap = std::max(gap, std::abs(os.estimates[k] - os.plugin[k]));
    gap = std::max(gap, std::abs(tm.estimates[k] - os.plugin[k]));
  }
  const double coef = tm.fluctuations->max_abs_coefficient();
  return {make("npmle.score", score, 1e-10, score <= 1e-10), make("npmle.agreement", gap, 1e-8, gap <= 1e-8),
          make("npmle.fluctuations", coef, 1e-8, coef <= 1e-8)};
}

std::vector<CheckResult> check_tmle_scores(std::size_t n, std::uint64_t seed) {
  DgpConfig cfg = DgpConfig::paper();
  cfg.n = n;
  cfg.seed = seed;
  const auto table = draw_dgp(cfg);
  const auto nuisances = fit_nuisances(table, NuisanceSpec{});
  const auto tm = tmle(nuisances, table);
  const double fit = tm.fluctuations->max_abs_score();
  double resid = 0.0;
  for (std::size_t k = 0; k < kCovariant; ++k) resid = std::max(resid, std::abs(tm.residual_scores[k]));
  return {make("tmle.first_order", fit, 1e-8, fit <= 1e-8), make("tmle.residual_scores", resid, 1e-6, resid <= 1e-6)};
}

std::vector<CheckResult> check_reduction(std::size_t n, std::uint64_t seed) {
  DgpConfig cfg = DgpConfig::paper();
  cfg.n = n;
  cfg.seed = seed;
  const auto table = draw_dgp(cfg);
  const auto nuisances = fit_nuisances(table, NuisanceSpec{});
  const auto subjects = evaluate_subjects(nuisances, table);
  const auto two = onestep(subjects, table);
  const double d = std::abs(onestep_multi_direct(subjects, table).estimate - two.report.estimates[kDirect]);
  const double m1 =
      std::abs(onestep_multi_indirect(subjects, 1, table).estimate - two.report.estimates[kIndirectM1]);
  const double m2 =
      std::abs(onestep_multi_indirect(subjects, 2, table).estimate - two.report.estimates[kIndirectM2]);
  return {make("reduction.direct", d, 1e-12, d <= 1e-12), make("reduction.indirect_m1", m1, 1e-12, m1 <= 1e-12),
          make("reduction.indirect_m2", m2, 1e-12, m2 <= 1e-12)};
}

std::vector<CheckResult> check_robustness(const RobustnessConfig& config) {
  const auto report = robustness_suite(config);
  std::vector<CheckResult> out;
  for (const auto& v : report.verdicts) {
    const bool control = v.kind == RobustnessCombo::Kind::negative_control;
    std::ostringstream detail;
    detail << to_string(v.kind) << ",population_bias=" << v.population_bias;
    out.push_back(make("robustness." + v.combo + "." + effect_names()[v.effect], std::abs(v.bias_at_largest_n),
                       control ? config.control_bias : config.pass_bias, v.pass, detail.str()));
  }
  return out;
}

}  // namespace medfx
