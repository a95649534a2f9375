#include "medfx/estimators.hpp"

#include "medfx/density.hpp"
#include "medfx/numeric.hpp"

#include <algorithm>
#include <cmath>

namespace medfx {

std::string to_string(Method method) { return method == Method::one_step ? "one_step" : "tmle"; }
std::string to_string(TmleMode mode) { return mode == TmleMode::single_pass ? "single_pass" : "iterate"; }

double FluctuationParams::max_abs_coefficient() const {
  double m = 0.0;
  for (const auto* f : {&epsilon, &delta, &eta, &gamma, &zeta, &total_a, &total_astar}) {
    for (double c : f->coefficients) m = std::max(m, std::abs(c));
  }
  return m;
}

double FluctuationParams::max_abs_score() const {
  double m = 0.0;
  for (const auto* f : {&epsilon, &delta, &eta, &gamma, &zeta, &total_a, &total_astar}) {
    m = std::max(m, std::abs(f->score));
  }
  return m;
}

namespace {

// expit(logit q + shift); a zero shift leaves q untouched so an unfluctuated
// nuisance reproduces the initial estimate bit for bit.
double fluctuate(double q, double shift) { return shift == 0.0 ? q : expit(safe_logit(q) + shift); }

bool needs_nudge(double q) { return q < kLogitNudge || q > 1.0 - kLogitNudge; }

// Rows of one logistic fluctuation, grown row by row.
struct FluctuationRows {
  std::size_t width;
  std::vector<double> x, outcome, weight, offset;
  bool clamped = false;

  explicit FluctuationRows(std::size_t k) : width(k) {}

  void add(std::initializer_list<double> covariates, double y, double w, double base) {
    x.insert(x.end(), covariates.begin(), covariates.end());
    outcome.push_back(std::clamp(y, 0.0, 1.0));  // sums of Qbar x mass can round past 1
    weight.push_back(w);
    clamped = clamped || needs_nudge(base);
    offset.push_back(safe_logit(base));
  }
  std::size_t rows() const { return outcome.size(); }
};

FluctuationFit fit_fluctuation(const FluctuationRows& rows, std::size_t n, bool& clamped) {
  FluctuationFit out;
  out.coefficients.assign(rows.width, 0.0);
  clamped = clamped || rows.clamped;
  const auto m = static_cast<Eigen::Index>(rows.rows());
  if (m == 0) {
    out.convergence.converged = true;
    return out;
  }
  const auto k = static_cast<Eigen::Index>(rows.width);
  Eigen::MatrixXd x(m, k);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) x(i, j) = rows.x[static_cast<std::size_t>(i * k + j)];
  }
  const Eigen::Map<const Eigen::VectorXd> y(rows.outcome.data(), m);
  const Eigen::Map<const Eigen::VectorXd> w(rows.weight.data(), m);
  const Eigen::VectorXd offset = Eigen::Map<const Eigen::VectorXd>(rows.offset.data(), m);

  LearnerSpec spec;
  FitOptions options;
  options.intercept = false;
  options.drop_constant_columns = false;
  const auto fit = fit_weighted_logistic(x, y, w, &offset, spec, options);
  for (Eigen::Index j = 0; j < k; ++j) out.coefficients[static_cast<std::size_t>(j)] = fit.coefficients[j];
  out.convergence = fit.convergence;
  out.ridge_used = fit.ridge_used;

  // First-order condition per coefficient, reported as the largest.
  const Eigen::VectorXd mu = predict(fit, x, &offset);
  const Eigen::VectorXd score = x.transpose() * (w.array() * (y - mu).array()).matrix() / static_cast<double>(n);
  out.score = score.cwiseAbs().maxCoeff();
  return out;
}

void add_warning(std::vector<std::string>& warnings, const std::string& w) {
  if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(w);
}

void note_fit(std::vector<std::string>& warnings, const std::string& name, const FluctuationFit& fit) {
  if (!fit.convergence.converged) add_warning(warnings, "fluctuation " + name + " did not converge; best iterate used");
  if (fit.ridge_used) add_warning(warnings, "fluctuation " + name + " refit with ridge penalty");
}

EffectVector column_means(const Eigen::MatrixXd& m) {
  EffectVector out{};
  for (std::size_t k = 0; k < kNumEffects; ++k) out[k] = m.col(static_cast<Eigen::Index>(k)).mean();
  return out;
}

bool outside_bounds(const EffectVector& e) {
  for (std::size_t k = 0; k < kCovariant; ++k) {
    if (!(std::abs(e[k]) <= 1.0)) return true;
  }
  return false;
}

// Ratio psi_{M1,a} / psi_{M1,a*} on the original outcome scale.
RatioResult ratio_on_raw_scale(double num_scaled, double den_scaled, const Eigen::MatrixXd& ratio_eifs,
                               const ObservationTable& table, double alpha) {
  const auto& scale = table.outcome_scale;
  const double range = scale.range();
  const Eigen::Matrix2d sigma = empirical_covariance(ratio_eifs) * (range * range);
  return ratio_effect(scale.unscale_mean(num_scaled), scale.unscale_mean(den_scaled), sigma, table.size(), alpha);
}

void finish(EstimatorOutput& out, const std::vector<SubjectNuisance>& subjects, const MarginalizedRegressions& f,
            const ObservationTable& table, const EstimatorOptions& options, double num, double den) {
  out.report = covariance_and_ci(out.eifs, out.estimates, options.alpha, table.outcome_scale, options.contrasts);
  if (options.ratio) {
    try {
      out.report.ratio = ratio_on_raw_scale(num, den, eval_ratio_eifs(subjects, f, table), table, options.alpha);
    } catch (const EstimationError& e) {
      add_warning(out.warnings, std::string("ratio effect not reported: ") + e.what());
    }
  }
}

void check_inputs(const std::vector<SubjectNuisance>& subjects, const ObservationTable& table) {
  if (subjects.size() != table.size()) throw EstimationError("nuisance evaluations do not match the table");
  if (table.num_mediators() != 2) throw EstimationError("two-mediator estimators need exactly two mediators");
  if (table.size() < 2) throw EstimationError("estimation needs n >= 2");
}

}  // namespace

EstimatorOutput onestep(const std::vector<SubjectNuisance>& subjects, const ObservationTable& table,
                        const EstimatorOptions& options) {
  check_inputs(subjects, table);
  EstimatorOutput out;
  out.method = Method::one_step;
  const auto f = compute_functionals(subjects, table.support);
  out.plugin = plugin_effects(f);
  const Eigen::MatrixXd at_plugin = eval_eifs(subjects, f, out.plugin, table);
  out.residual_scores = column_means(at_plugin);
  for (std::size_t k = 0; k < kNumEffects; ++k) out.estimates[k] = out.plugin[k] + out.residual_scores[k];
  out.eifs = eval_eifs(subjects, f, out.estimates, table);
  out.out_of_bounds = outside_bounds(out.estimates);
  if (out.out_of_bounds) add_warning(out.warnings, "one-step estimate outside the parameter space");

  double num = 0.0, den = 0.0;
  if (options.ratio) {
    const Eigen::MatrixXd r = eval_ratio_eifs(subjects, f, table);
    num = r.col(0).mean();
    den = r.col(1).mean();
  }
  finish(out, subjects, f, table, options, num, den);
  return out;
}

EstimatorOutput onestep(const NuisanceModel& nuisances, const ObservationTable& table,
                        const EstimatorOptions& options) {
  auto out = onestep(evaluate_subjects(nuisances, table, options.threads), table, options);
  for (const auto& d : nuisances.diagnostics()) add_warning(out.warnings, d);
  return out;
}

std::vector<SubjectNuisance> tmle_target_outcome(const std::vector<SubjectNuisance>& subjects,
                                                 const ObservationTable& table, FluctuationFit& fit) {
  check_inputs(subjects, table);
  const std::size_t n = table.size();
  FluctuationRows rows(5);
  for (std::size_t i = 0; i < n; ++i) {
    const int arm = table.treatment[i];
    const std::size_t cell = observed_cell(table, i);
    const auto h = clever_covariates(subjects[i], arm, cell, table.support);
    rows.add({h.h1, h.h2, h.h3, h.h4, h.h5}, table.outcome[static_cast<Eigen::Index>(i)], 1.0,
             subjects[i].qbar[static_cast<std::size_t>(arm)][cell]);
  }
  bool clamped = false;
  fit = fit_fluctuation(rows, n, clamped);
  const auto& e = fit.coefficients;

  auto targeted = subjects;
  const std::size_t cells = table.support.num_cells();
  for (auto& s : targeted) {
    for (std::size_t m = 0; m < cells; ++m) {
      // H recomputed at the counterfactual point (arm, m) rather than the observed row
      const auto ha = clever_covariates(s, 1, m, table.support);
      s.qbar[1][m] = fluctuate(s.qbar[1][m], e[0] * ha.h1 + e[2] * ha.h3 + e[3] * ha.h4 + e[4] * ha.h5);
      s.qbar[0][m] = fluctuate(s.qbar[0][m], e[1] / s.g[0]);
    }
  }
  return targeted;
}

EstimatorOutput tmle(const std::vector<SubjectNuisance>& subjects, const ObservationTable& table,
                     const EstimatorOptions& options) {
  check_inputs(subjects, table);
  const std::size_t n = table.size();
  const std::size_t l2 = table.support.num_levels(1);

  EstimatorOutput out;
  out.method = Method::tmle;
  out.plugin = plugin_effects(compute_functionals(subjects, table.support));

  FluctuationParams params;
  auto current = subjects;
  MarginalizedRegressions f;
  // Targeted marginal regressions per subject.
  std::vector<double> ta(n), ts(n), delta(n), x(n), y(n), z(n);
  const double tolerance = 1e-6 / std::sqrt(static_cast<double>(n));
  const int max_passes = options.mode == TmleMode::single_pass ? 1 : std::max(1, options.max_passes);

  for (int pass = 1; pass <= max_passes; ++pass) {
    FluctuationParams p;
    current = tmle_target_outcome(current, table, p.epsilon);
    f = compute_functionals(current, table.support);
    if (pass == 1) {
      for (std::size_t i = 0; i < n; ++i) {
        ta[i] = f[i].total_a;
        ts[i] = f[i].total_astar;
        delta[i] = f[i].cross - f[i].total_astar;
        x[i] = f[i].x;
        y[i] = f[i].y;
        z[i] = f[i].z;
      }
    }

    FluctuationRows rd(1), re(1), rg(1), rz(1), rta(1), rts(1);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = current[i];
      const int arm = table.treatment[i];
      const std::size_t cell = observed_cell(table, i);
      const std::size_t k1 = cell / l2, k2 = cell % l2;
      const double yi = table.outcome[static_cast<Eigen::Index>(i)];
      const double ia = 1.0 / s.g[1], is = 1.0 / s.g[0];
      if (arm == 1) {
        re.add({1.0}, f[i].over_m2_astar[k1], ia, x[i]);
        rz.add({1.0}, f[i].over_m2_a[k1], ia, z[i]);
        rz.add({1.0}, f[i].over_m1_a[k2], ia, z[i]);
        rta.add({ia}, yi, 1.0, ta[i]);
      } else {
        rd.add({is}, (s.qbar[1][cell] - s.qbar[0][cell] + 1.0) / 2.0, 1.0, (delta[i] + 1.0) / 2.0);
        re.add({1.0}, f[i].over_m1_a[k2], is, x[i]);
        rg.add({1.0}, f[i].over_m2_astar[k1], is, y[i]);
        rg.add({1.0}, f[i].over_m1_astar[k2], is, y[i]);
        rts.add({is}, yi, 1.0, ts[i]);
      }
    }
    bool clamped = false;
    p.delta = fit_fluctuation(rd, n, clamped);
    p.eta = fit_fluctuation(re, n, clamped);
    p.gamma = fit_fluctuation(rg, n, clamped);
    p.zeta = fit_fluctuation(rz, n, clamped);
    p.total_a = fit_fluctuation(rta, n, clamped);
    p.total_astar = fit_fluctuation(rts, n, clamped);
    for (std::size_t i = 0; i < n; ++i) {
      const double ia = 1.0 / current[i].g[1], is = 1.0 / current[i].g[0];
      const double d = p.delta.coefficients[0];
      if (d != 0.0) delta[i] = 2.0 * fluctuate((delta[i] + 1.0) / 2.0, d * is) - 1.0;
      x[i] = fluctuate(x[i], p.eta.coefficients[0]);
      y[i] = fluctuate(y[i], p.gamma.coefficients[0]);
      z[i] = fluctuate(z[i], p.zeta.coefficients[0]);
      ta[i] = fluctuate(ta[i], p.total_a.coefficients[0] * ia);
      ts[i] = fluctuate(ts[i], p.total_astar.coefficients[0] * is);
    }

    for (std::size_t i = 0; i < n; ++i) {
      f[i].total_a = ta[i];
      f[i].total_astar = ts[i];
      f[i].cross = ts[i] + delta[i];
      f[i].x = x[i];
      f[i].y = y[i];
      f[i].z = z[i];
    }
    EffectVector est{};
    for (std::size_t i = 0; i < n; ++i) {
      est[kTotal] += ta[i] - ts[i];
      est[kDirect] += delta[i];
      est[kIndirectM1] += x[i] - y[i];
      est[kIndirectM2] += z[i] - x[i];
    }
    for (std::size_t k = 0; k < kCovariant; ++k) est[k] /= static_cast<double>(n);
    est[kCovariant] = est[kTotal] - est[kDirect] - est[kIndirectM1] - est[kIndirectM2];

    out.estimates = est;
    out.eifs = eval_eifs(current, f, est, table);
    out.residual_scores = column_means(out.eifs);

    // Accumulate coefficients across passes: the composed submodel is additive on the logit scale.
    auto accumulate = [](FluctuationFit& total, const FluctuationFit& step) {
      if (total.coefficients.empty()) total.coefficients.assign(step.coefficients.size(), 0.0);
      for (std::size_t j = 0; j < step.coefficients.size(); ++j) total.coefficients[j] += step.coefficients[j];
      total.convergence = step.convergence;
      total.ridge_used = total.ridge_used || step.ridge_used;
      total.score = step.score;
    };
    accumulate(params.epsilon, p.epsilon);
    accumulate(params.delta, p.delta);
    accumulate(params.eta, p.eta);
    accumulate(params.gamma, p.gamma);
    accumulate(params.zeta, p.zeta);
    accumulate(params.total_a, p.total_a);
    accumulate(params.total_astar, p.total_astar);
    params.passes = pass;
    params.clamped = params.clamped || clamped;

    double worst = 0.0;
    for (double r : out.residual_scores) worst = std::max(worst, std::abs(r));
    if (worst <= tolerance) break;
  }

  note_fit(out.warnings, "epsilon", params.epsilon);
  note_fit(out.warnings, "delta", params.delta);
  note_fit(out.warnings, "eta", params.eta);
  note_fit(out.warnings, "gamma", params.gamma);
  note_fit(out.warnings, "zeta", params.zeta);
  note_fit(out.warnings, "total_a", params.total_a);
  note_fit(out.warnings, "total_astar", params.total_astar);
  if (params.clamped) add_warning(out.warnings, "a fluctuation offset was clamped into [1e-6, 1 - 1e-6]");
  out.fluctuations = params;
  out.out_of_bounds = outside_bounds(out.estimates);

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += x[i];
    den += y[i];
  }
  finish(out, current, f, table, options, num / static_cast<double>(n), den / static_cast<double>(n));
  return out;
}

EstimatorOutput tmle(const NuisanceModel& nuisances, const ObservationTable& table, const EstimatorOptions& options) {
  auto out = tmle(evaluate_subjects(nuisances, table, options.threads), table, options);
  for (const auto& d : nuisances.diagnostics()) add_warning(out.warnings, d);
  return out;
}

}  // namespace medfx
