#include "medfx/numeric.hpp"
#include "medfx/parallel.hpp"
#include "medfx/simulation.hpp"

#include <cmath>
#include <stdexcept>

namespace medfx {

const CellSummary& SimulationReport::cell(Method method, std::size_t n, std::size_t effect) const {
  for (const auto& c : cells) {
    if (c.method == method && c.n == n && c.effect == effect) return c;
  }
  throw std::out_of_range("no Monte Carlo cell for that method, n and effect");
}

namespace {

bool any_nonconvergence(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) {
    if (w.find("converge") != std::string::npos) return true;
  }
  return false;
}

std::vector<ReplicateRecord> run_replicate(const MonteCarloConfig& config, std::size_t n, std::size_t r) {
  std::vector<ReplicateRecord> out(config.methods.size());
  const std::uint64_t seed = derive_seed(config.seed, n, r);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].n = n;
    out[k].replicate = r;
    out[k].seed = seed;
    out[k].method = config.methods[k];
  }
  try {
    DgpConfig dgp = config.dgp;
    dgp.n = n;
    dgp.seed = seed;
    const auto table = draw_dgp(dgp);
    const auto nuisances = fit_nuisances(table, config.nuisance);
    const auto subjects = evaluate_subjects(nuisances, table, 1);
    const auto diagnostics = nuisances.diagnostics();
    EstimatorOptions options;
    options.alpha = config.alpha;
    options.ratio = config.ratio;
    options.contrasts.clear();
    for (std::size_t k = 0; k < out.size(); ++k) {
      auto& rec = out[k];
      try {
        const auto est = rec.method == Method::one_step ? onestep(subjects, table, options)
                                                        : tmle(subjects, table, options);
        rec.estimate = est.report.estimates;
        rec.se = est.report.se;
        rec.out_of_bounds = est.out_of_bounds;
        rec.nonconverged = any_nonconvergence(est.warnings) || any_nonconvergence(diagnostics);
        if (est.report.ratio) {
          rec.ratio = est.report.ratio->ratio;
          rec.ratio_se = est.report.ratio->se;
        }
        rec.ok = true;
      } catch (const std::exception& e) {
        rec.error = e.what();
      }
    }
  } catch (const std::exception& e) {
    for (auto& rec : out) rec.error = e.what();
  }
  return out;
}

}  // namespace

SimulationReport run_monte_carlo(const MonteCarloConfig& config) {
  config.dgp.validate();
  if (config.replicates < 1) throw std::invalid_argument("need at least one replicate");
  if (config.methods.empty()) throw std::invalid_argument("no estimators selected");
  SimulationReport report;
  report.config = config;
  report.truth = true_effects_oracle(config.dgp);
  if (config.dgp.t() != 2) throw std::invalid_argument("the Monte Carlo study uses the two-mediator estimators");

  const std::size_t per_n = config.replicates;
  const std::size_t tasks = config.sample_sizes.size() * per_n;
  std::vector<std::vector<ReplicateRecord>> slots(tasks);
  parallel_for(tasks, resolve_threads(config.threads), [&](std::size_t task) {
    slots[task] = run_replicate(config, config.sample_sizes[task / per_n], task % per_n);
  });
  for (auto& s : slots) {
    for (auto& rec : s) report.records.push_back(std::move(rec));
  }

  const double zc = normal_critical_value(config.alpha);
  for (Method method : config.methods) {
    for (std::size_t n : config.sample_sizes) {
      std::vector<const ReplicateRecord*> ok;
      std::size_t failures = 0;
      for (const auto& rec : report.records) {
        if (rec.method != method || rec.n != n) continue;
        if (rec.ok) ok.push_back(&rec); else ++failures;
      }
      const auto count = static_cast<double>(ok.size());
      for (std::size_t k = 0; k < kNumEffects; ++k) {
        CellSummary c;
        c.method = method;
        c.n = n;
        c.effect = k;
        c.replicates = ok.size();
        c.failures = failures;
        c.truth = report.truth.effects[k];
        if (!ok.empty()) {
          for (const auto* rec : ok) {
            c.mean += rec->estimate[k];
            c.mean_se += rec->se[k];
            c.mse += (rec->estimate[k] - c.truth) * (rec->estimate[k] - c.truth);
            c.out_of_bounds += rec->out_of_bounds ? 1 : 0;
            c.nonconverged += rec->nonconverged ? 1 : 0;
          }
          c.mean /= count;
          c.mean_se /= count;
          c.mse /= count;
          c.bias = c.mean - c.truth;
          double ss = 0.0;
          for (const auto* rec : ok) ss += (rec->estimate[k] - c.mean) * (rec->estimate[k] - c.mean);
          c.sd = std::sqrt(ss / count);
          for (const auto* rec : ok) {
            const double err = std::abs(rec->estimate[k] - c.truth);
            c.coverage_oracle += err <= zc * c.sd ? 1.0 : 0.0;
            c.coverage_estimated += err <= zc * rec->se[k] ? 1.0 : 0.0;
          }
          c.coverage_oracle /= count;
          c.coverage_estimated /= count;
        }
        report.cells.push_back(c);
      }
      if (config.ratio && !ok.empty()) {
        RatioSummary rs;
        rs.method = method;
        rs.n = n;
        rs.truth = report.truth.ratio;
        std::size_t used = 0;
        for (const auto* rec : ok) {
          if (!std::isfinite(rec->ratio)) continue;
          rs.mean += rec->ratio;
          rs.mean_se += rec->ratio_se;
          ++used;
        }
        rs.replicates = used;
        if (used > 0) {
          rs.mean /= static_cast<double>(used);
          rs.mean_se /= static_cast<double>(used);
          double ss = 0.0;
          for (const auto* rec : ok) {
            if (!std::isfinite(rec->ratio)) continue;
            ss += (rec->ratio - rs.mean) * (rec->ratio - rs.mean);
            rs.coverage += std::abs(rec->ratio - rs.truth) <= zc * rec->ratio_se ? 1.0 : 0.0;
          }
          rs.sd = std::sqrt(ss / static_cast<double>(used));
          rs.coverage /= static_cast<double>(used);
        }
        report.ratios.push_back(rs);
      }
    }
  }
  return report;
}

}  // namespace medfx
