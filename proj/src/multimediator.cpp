#include "medfx/multimediator.hpp"

#include "medfx/density.hpp"
#include "medfx/numeric.hpp"

#include <cmath>
#include <limits>

namespace medfx {

void MultiMediatorSpec::validate() const {
  if (t < 2) throw std::invalid_argument("multimediator estimation needs t >= 2");
  if (supports.size() != t) throw std::invalid_argument("one support per mediator required");
  if (s < 1 || s > t) throw std::invalid_argument("target mediator s must lie in 1..t");
}

MultiMediatorSpec multimediator_spec(const ObservationTable& table, std::size_t s) {
  MultiMediatorSpec spec;
  spec.t = table.num_mediators();
  spec.supports = table.support.levels;
  spec.s = s;
  spec.validate();
  return spec;
}

ProductMarginalization marginalize_product(std::span<const double> qbar, const MediatorSupport& support,
                                           const std::vector<const std::vector<double>*>& marginals) {
  const std::size_t t = support.num_mediators();
  const auto strides = cell_strides(support);
  ProductMarginalization out;
  out.partial.resize(t);
  for (std::size_t u = 0; u < t; ++u) out.partial[u].assign(support.num_levels(u), 0.0);

  std::vector<std::size_t> k(t);
  std::vector<double> prefix(t + 1), suffix(t + 1);
  for (std::size_t cell = 0; cell < qbar.size(); ++cell) {
    for (std::size_t u = 0; u < t; ++u) k[u] = (cell / strides[u]) % support.num_levels(u);
    prefix[0] = 1.0;
    for (std::size_t u = 0; u < t; ++u) prefix[u + 1] = prefix[u] * (*marginals[u])[k[u]];
    suffix[t] = 1.0;
    for (std::size_t u = t; u-- > 0;) suffix[u] = suffix[u + 1] * (*marginals[u])[k[u]];
    const double q = qbar[cell];
    out.value += q * prefix[t];
    for (std::size_t u = 0; u < t; ++u) out.partial[u][k[u]] += q * prefix[u] * suffix[u + 1];
  }
  return out;
}

std::vector<int> split_arms(std::size_t t, std::size_t s, int target_arm) {
  std::vector<int> arms(t);
  for (std::size_t u = 0; u < t; ++u) arms[u] = u + 1 < s ? 1 : (u + 1 > s ? 0 : target_arm);
  return arms;
}

namespace {

std::vector<const std::vector<double>*> product_marginals(const SubjectNuisance& s, const std::vector<int>& arms) {
  std::vector<const std::vector<double>*> mu(arms.size());
  for (std::size_t u = 0; u < arms.size(); ++u) mu[u] = &s.law[static_cast<std::size_t>(arms[u])].marginals[u];
  return mu;
}

double eif_with_marginalization(const SubjectNuisance& s, const MediatorSupport& support,
                                const std::vector<int>& arms, const ProductMarginalization& pm, int arm,
                                std::size_t cell, double y) {
  const std::size_t t = support.num_mediators();
  const auto strides = cell_strides(support);
  double d = pm.value;
  if (arm == 1) {
    double mass = 1.0;
    for (std::size_t u = 0; u < t; ++u) {
      mass *= s.law[static_cast<std::size_t>(arms[u])].marginals[u][(cell / strides[u]) % support.num_levels(u)];
    }
    const double qa = s.law[1].joint[cell];
    const double ratio = qa > 0.0 ? mass / qa : 0.0;
    d += ratio / s.g[1] * (y - s.qbar[1][cell]);
  }
  for (std::size_t u = 0; u < t; ++u) {
    if (arms[u] != arm) continue;
    const std::size_t k = (cell / strides[u]) % support.num_levels(u);
    d += (pm.partial[u][k] - pm.value) / s.g[static_cast<std::size_t>(arm)];
  }
  return d;
}

double direct_row(const SubjectNuisance& s, int arm, std::size_t cell, double y, double& conditional) {
  double cross = 0.0, own = 0.0;
  for (std::size_t k = 0; k < s.qbar[1].size(); ++k) {
    cross += s.qbar[1][k] * s.law[0].joint[k];
    own += s.qbar[0][k] * s.law[0].joint[k];
  }
  const double direct = cross - own;
  conditional = direct;
  const double qa = s.qbar[1][cell], qs = s.qbar[0][cell];
  if (arm == 1) {
    const double ja = s.law[1].joint[cell];
    const double h1 = (1.0 / s.g[1]) * (ja > 0.0 ? s.law[0].joint[cell] / ja : 0.0);
    return h1 * (y - qa) + direct;
  }
  const double is = 1.0 / s.g[0];
  return -is * (y - qs) + is * (qa - qs - direct) + direct;
}

MultiEffectResult summarize(std::string name, const Eigen::VectorXd& rows, double plugin,
                            const ObservationTable& table, double alpha) {
  const auto n = static_cast<double>(rows.size());
  if (rows.size() < 2) throw EstimationError("estimation needs n >= 2");
  const double range = table.outcome_scale.range();
  MultiEffectResult r;
  r.name = std::move(name);
  r.plugin = plugin;
  const double scaled = rows.mean();
  r.eif = rows.array() - scaled;
  r.estimate = table.outcome_scale.unscale_effect(scaled);
  r.se = std::sqrt(r.eif.squaredNorm() / n / n) * range;
  const double zc = normal_critical_value(alpha);
  r.ci_lower = r.estimate - zc * r.se;
  r.ci_upper = r.estimate + zc * r.se;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.z = r.se > 0.0 ? r.estimate / r.se : nan;
  r.p_value = r.se > 0.0 ? two_sided_p_value(r.z) : nan;
  return r;
}

void check(const std::vector<SubjectNuisance>& subjects, const ObservationTable& table) {
  if (subjects.size() != table.size()) throw EstimationError("nuisance evaluations do not match the table");
  if (table.num_mediators() < 2) throw EstimationError("multimediator estimation needs t >= 2");
}

}  // namespace

double product_measure_eif(const SubjectNuisance& s, const MediatorSupport& support, const std::vector<int>& arms,
                           int arm, std::size_t cell, double y) {
  const auto pm = marginalize_product(s.qbar[1], support, product_marginals(s, arms));
  return eif_with_marginalization(s, support, arms, pm, arm, cell, y);
}

MultiEffectResult onestep_multi_direct(const std::vector<SubjectNuisance>& subjects, const ObservationTable& table,
                                       double alpha) {
  check(subjects, table);
  const std::size_t n = table.size();
  Eigen::VectorXd rows(static_cast<Eigen::Index>(n));
  double plugin = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double conditional = 0.0;
    rows[static_cast<Eigen::Index>(i)] = direct_row(subjects[i], table.treatment[i], observed_cell(table, i),
                                                    table.outcome[static_cast<Eigen::Index>(i)], conditional);
    plugin += conditional;
  }
  return summarize("direct", rows, plugin / static_cast<double>(n), table, alpha);
}

MultiEffectResult onestep_multi_direct(const NuisanceModel& nuisances, const ObservationTable& table, double alpha,
                                       unsigned threads) {
  return onestep_multi_direct(evaluate_subjects(nuisances, table, threads), table, alpha);
}

MultiEffectResult onestep_multi_indirect(const std::vector<SubjectNuisance>& subjects, std::size_t s,
                                         const ObservationTable& table, double alpha) {
  check(subjects, table);
  multimediator_spec(table, s);
  const std::size_t n = table.size(), t = table.num_mediators();
  const auto upper = split_arms(t, s, 1);
  const auto lower = split_arms(t, s, 0);
  Eigen::VectorXd rows(static_cast<Eigen::Index>(n));
  double plugin = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& sub = subjects[i];
    const auto pb = marginalize_product(sub.qbar[1], table.support, product_marginals(sub, upper));
    const auto pd = marginalize_product(sub.qbar[1], table.support, product_marginals(sub, lower));
    const int arm = table.treatment[i];
    const std::size_t cell = observed_cell(table, i);
    const double y = table.outcome[static_cast<Eigen::Index>(i)];
    rows[static_cast<Eigen::Index>(i)] = eif_with_marginalization(sub, table.support, upper, pb, arm, cell, y) -
                                         eif_with_marginalization(sub, table.support, lower, pd, arm, cell, y);
    plugin += pb.value - pd.value;
  }
  return summarize("indirect_m" + std::to_string(s), rows, plugin / static_cast<double>(n), table, alpha);
}

MultiEffectResult onestep_multi_indirect(const NuisanceModel& nuisances, std::size_t s,
                                         const ObservationTable& table, double alpha, unsigned threads) {
  return onestep_multi_indirect(evaluate_subjects(nuisances, table, threads), s, table, alpha);
}

std::vector<double> multi_conditional_effects(const SubjectNuisance& s, const MediatorSupport& support) {
  const std::size_t t = support.num_mediators();
  std::vector<double> out;
  double cross = 0.0, own = 0.0;
  for (std::size_t k = 0; k < s.qbar[1].size(); ++k) {
    cross += s.qbar[1][k] * s.law[0].joint[k];
    own += s.qbar[0][k] * s.law[0].joint[k];
  }
  out.push_back(cross - own);
  for (std::size_t target = 1; target <= t; ++target) {
    const auto b = marginalize_product(s.qbar[1], support, product_marginals(s, split_arms(t, target, 1)));
    const auto d = marginalize_product(s.qbar[1], support, product_marginals(s, split_arms(t, target, 0)));
    out.push_back(b.value - d.value);
  }
  return out;
}

}  // namespace medfx
