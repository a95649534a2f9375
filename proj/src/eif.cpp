#include "medfx/eif.hpp"

#include "medfx/density.hpp"
#include "medfx/numeric.hpp"

#include <cmath>
#include <limits>

namespace medfx {

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

CleverCovariates clever_covariates(const SubjectNuisance& s, int arm, std::size_t cell,
                                   const MediatorSupport& support) {
  CleverCovariates h;
  if (arm == 0) {
    h.h2 = 1.0 / s.g[0];
    return h;
  }
  const std::size_t l2 = support.num_levels(1);
  const std::size_t k1 = cell / l2, k2 = cell % l2;
  const double qa = s.law[1].joint[cell];
  const double inv = 1.0 / s.g[1];
  const auto& a1 = s.law[1].marginals[0];
  const auto& a2 = s.law[1].marginals[1];
  const auto& s1 = s.law[0].marginals[0];
  const auto& s2 = s.law[0].marginals[1];
  h.inv_ga = inv;
  h.h1 = inv * ratio(s.law[0].joint[cell], qa);
  h.h3 = inv * ratio(a1[k1] * s2[k2], qa);
  h.h4 = inv * ratio(s1[k1] * s2[k2], qa);
  h.h5 = inv * ratio(a1[k1] * a2[k2], qa);
  return h;
}

std::vector<CleverCovariates> clever_covariates(const std::vector<SubjectNuisance>& subjects,
                                                const ObservationTable& table) {
  std::vector<CleverCovariates> out(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    out[i] = clever_covariates(subjects[i], table.treatment[i], observed_cell(table, i), table.support);
  }
  return out;
}

EffectVector eif_row(const SubjectNuisance& s, const SubjectFunctionals& f, const MediatorSupport& support,
                     int arm, std::size_t cell, double y) {
  const std::size_t l2 = support.num_levels(1);
  const std::size_t k1 = cell / l2, k2 = cell % l2;
  const double ia = arm == 1 ? 1.0 / s.g[1] : 0.0;
  const double is = arm == 0 ? 1.0 / s.g[0] : 0.0;
  const double qa = s.qbar[1][cell];
  const double qs = s.qbar[0][cell];
  const auto h = clever_covariates(s, arm, cell, support);
  const double ra = arm == 1 ? y - qa : 0.0;  // residual under the a arm

  EffectVector d{};
  d[kTotal] = ia * (y - f.total_a) - is * (y - f.total_astar) + f.total_a - f.total_astar;

  const double direct = f.cross - f.total_astar;
  d[kDirect] = h.h1 * ra - is * (y - qs) + is * (qa - qs - direct) + direct;

  d[kIndirectM1] = (h.h3 - h.h4) * ra + ia * (f.over_m2_astar[k1] - f.x) - is * (f.over_m2_astar[k1] - f.y) +
                   is * (f.over_m1_a[k2] - f.over_m1_astar[k2] - (f.x - f.y)) + f.x - f.y;

  d[kIndirectM2] = (h.h5 - h.h3) * ra + ia * (f.over_m1_a[k2] - f.z) - is * (f.over_m1_a[k2] - f.x) +
                   ia * (f.over_m2_a[k1] - f.over_m2_astar[k1] - (f.z - f.x)) + f.z - f.x;

  d[kCovariant] = d[kTotal] - d[kDirect] - d[kIndirectM1] - d[kIndirectM2];
  return d;
}

Eigen::MatrixXd eval_eifs(const std::vector<SubjectNuisance>& subjects, const MarginalizedRegressions& marginalized,
                          const EffectVector& effects, const ObservationTable& table) {
  const std::size_t n = table.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kNumEffects));
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = eif_row(subjects[i], marginalized[i], table.support, table.treatment[i], observed_cell(table, i),
                           table.outcome[static_cast<Eigen::Index>(i)]);
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t k = 0; k < kNumEffects; ++k) out(r, static_cast<Eigen::Index>(k)) = d[k] - effects[k];
  }
  return out;
}

Eigen::MatrixXd eval_ratio_eifs(const std::vector<SubjectNuisance>& subjects,
                                const MarginalizedRegressions& marginalized, const ObservationTable& table) {
  const std::size_t n = table.size();
  const std::size_t l2 = table.support.num_levels(1);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = subjects[i];
    const auto& f = marginalized[i];
    const int arm = table.treatment[i];
    const std::size_t cell = observed_cell(table, i);
    const std::size_t k1 = cell / l2, k2 = cell % l2;
    const double y = table.outcome[static_cast<Eigen::Index>(i)];
    const double ia = arm == 1 ? 1.0 / s.g[1] : 0.0;
    const double is = arm == 0 ? 1.0 / s.g[0] : 0.0;
    const auto h = clever_covariates(s, arm, cell, table.support);
    const double ra = arm == 1 ? y - s.qbar[1][cell] : 0.0;
    const auto r = static_cast<Eigen::Index>(i);
    out(r, 0) = h.h3 * ra + ia * (f.over_m2_astar[k1] - f.x) + is * (f.over_m1_a[k2] - f.x) + f.x;
    out(r, 1) = h.h4 * ra + is * (f.over_m2_astar[k1] - f.y) + is * (f.over_m1_astar[k2] - f.y) + f.y;
  }
  return out;
}

std::vector<Contrast> pairwise_contrasts() {
  std::vector<Contrast> out;
  const auto& names = effect_names();
  for (std::size_t i = 0; i < kNumEffects; ++i) {
    for (std::size_t j = i + 1; j < kNumEffects; ++j) {
      Contrast c;
      c.name = names[i] + "-" + names[j];
      c.weights[i] = 1.0;
      c.weights[j] = -1.0;
      out.push_back(c);
    }
  }
  return out;
}

Eigen::MatrixXd empirical_covariance(const Eigen::MatrixXd& columns) {
  const Eigen::Index n = columns.rows();
  if (n < 2) throw EstimationError("covariance needs at least two observations");
  const Eigen::RowVectorXd mean = columns.colwise().mean();
  const Eigen::MatrixXd centred = columns.rowwise() - mean;
  Eigen::MatrixXd sigma = centred.transpose() * centred / static_cast<double>(n);
  return 0.5 * (sigma + sigma.transpose());
}

EffectReport covariance_and_ci(const Eigen::MatrixXd& eifs, const EffectVector& estimates, double alpha,
                               const OutcomeScale& scale, const std::vector<Contrast>& contrasts) {
  const auto n = static_cast<std::size_t>(eifs.rows());
  if (n < 2) throw EstimationError("inference needs n >= 2");
  const double z_crit = normal_critical_value(alpha);
  const double range = scale.range();
  EffectReport r;
  r.n = n;
  r.alpha = alpha;
  r.sigma = empirical_covariance(eifs) * (range * range);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < kNumEffects; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    r.estimates[k] = scale.unscale_effect(estimates[k]);
    r.se[k] = std::sqrt(std::max(r.sigma(kk, kk), 0.0) / static_cast<double>(n));
    r.ci_lower[k] = r.estimates[k] - z_crit * r.se[k];
    r.ci_upper[k] = r.estimates[k] + z_crit * r.se[k];
    r.z[k] = r.se[k] > 0.0 ? r.estimates[k] / r.se[k] : nan;
    r.p_value[k] = r.se[k] > 0.0 ? two_sided_p_value(r.z[k]) : nan;
  }
  for (const auto& c : contrasts) {
    ContrastResult cr;
    cr.name = c.name;
    cr.weights = c.weights;
    Eigen::VectorXd e(static_cast<Eigen::Index>(kNumEffects));
    for (std::size_t k = 0; k < kNumEffects; ++k) {
      e[static_cast<Eigen::Index>(k)] = c.weights[k];
      cr.estimate += c.weights[k] * r.estimates[k];
    }
    // Variance of the contrast column itself, so exact cancellations give exactly zero.
    const Eigen::VectorXd column = eifs * e;
    const double mean = column.mean();
    const double var = (column.array() - mean).square().sum() / static_cast<double>(n) * range * range;
    cr.se = std::sqrt(var / static_cast<double>(n));
    if (cr.se > 0.0) {
      cr.z = cr.estimate / cr.se;
      cr.p_value = two_sided_p_value(cr.z);
    } else {
      cr.degenerate = true;
      cr.z = nan;
      cr.p_value = nan;
    }
    r.contrasts.push_back(cr);
  }
  return r;
}

RatioResult ratio_effect(double numerator, double denominator, const Eigen::Matrix2d& sigma, std::size_t n,
                         double alpha) {
  if (!(std::abs(denominator) > kRatioDenominatorFloor)) {
    throw EstimationError("ratio ill-defined near zero denominator");
  }
  if (n < 1) throw EstimationError("ratio inference needs n >= 1");
  RatioResult r;
  r.numerator = numerator;
  r.denominator = denominator;
  r.sigma = sigma;
  r.ratio = numerator / denominator;
  const Eigen::Vector2d grad(1.0 / denominator, -numerator / (denominator * denominator));
  const double tau2 = grad.dot(sigma * grad);
  r.tau = std::sqrt(std::max(tau2, 0.0));
  r.se = r.tau / std::sqrt(static_cast<double>(n));
  const double z_crit = normal_critical_value(alpha);
  r.ci_lower = r.ratio - z_crit * r.se;
  r.ci_upper = r.ratio + z_crit * r.se;
  return r;
}

}  // namespace medfx
