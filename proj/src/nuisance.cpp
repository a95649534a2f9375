#include "medfx/nuisance.hpp"

#include "medfx/parallel.hpp"

#include <algorithm>

namespace medfx {

SubjectNuisance evaluate_subject(const NuisanceModel& model, std::span<const double> c) {
  SubjectNuisance s;
  const std::size_t cells = model.support().num_cells();
  for (int arm = 0; arm <= 1; ++arm) {
    s.g[arm] = model.treatment_probability(arm, c);
    s.qbar[arm].assign(cells, 0.0);
    model.outcome_grid(arm, c, s.qbar[arm]);
    s.law[arm] = model.mediator_law(arm, c);
  }
  return s;
}

std::vector<SubjectNuisance> evaluate_subjects(const NuisanceModel& model, const ObservationTable& table,
                                               unsigned threads) {
  std::vector<SubjectNuisance> out(table.size());
  parallel_for(table.size(), threads, [&](std::size_t i) {
    std::vector<double> c;
    table.covariate_row(i, c);
    out[i] = evaluate_subject(model, c);
  });
  return out;
}

double NuisanceBundle::treatment_probability(int arm, std::span<const double> c) const {
  Eigen::MatrixXd x(1, static_cast<Eigen::Index>(c.size()));
  for (std::size_t j = 0; j < c.size(); ++j) x(0, static_cast<Eigen::Index>(j)) = c[j];
  const double g1 = std::clamp(propensity_->predict(x)[0], propensity_floor_, 1.0 - propensity_floor_);
  return arm == 1 ? g1 : 1.0 - g1;
}

void NuisanceBundle::outcome_grid(int arm, std::span<const double> c, std::span<double> out) const {
  const Eigen::Index cells = mediator_values_.rows();
  const auto p = static_cast<Eigen::Index>(c.size());
  Eigen::MatrixXd x(cells, p + 1 + mediator_values_.cols());
  for (Eigen::Index j = 0; j < p; ++j) x.col(j).setConstant(c[static_cast<std::size_t>(j)]);
  x.col(p).setConstant(arm);
  x.rightCols(mediator_values_.cols()) = mediator_values_;
  const Eigen::VectorXd q = outcome_->predict(x);
  for (Eigen::Index k = 0; k < cells; ++k) out[static_cast<std::size_t>(k)] = q[k];
}

std::vector<std::string> NuisanceBundle::diagnostics() const {
  std::vector<std::string> out;
  for (const auto& d : propensity_->diagnostics()) out.push_back("propensity: " + d);
  for (const auto& d : outcome_->diagnostics()) out.push_back("outcome regression: " + d);
  for (const auto& d : density_.diagnostics()) out.push_back(d);
  return out;
}

NuisanceBundle fit_nuisances(const ObservationTable& table, const NuisanceSpec& spec) {
  NuisanceBundle bundle;
  const auto n = static_cast<Eigen::Index>(table.size());
  const auto p = static_cast<Eigen::Index>(table.num_covariates());
  const auto t = static_cast<Eigen::Index>(table.num_mediators());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);

  Eigen::VectorXd a(n);
  for (Eigen::Index i = 0; i < n; ++i) a[i] = table.treatment[static_cast<std::size_t>(i)];
  bundle.propensity_ = fit_learner(spec.propensity, table.covariates, a, ones, table.covariate_names);
  bundle.propensity_floor_ = spec.propensity.prediction_floor;

  Eigen::MatrixXd x(n, p + 1 + t);
  x.leftCols(p) = table.covariates;
  x.col(p) = a;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < t; ++j) {
      x(i, p + 1 + j) = table.mediator_value(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
  }
  std::vector<std::string> names = table.covariate_names;
  names.emplace_back("a");
  for (const auto& m : table.mediator_names) names.push_back(m);
  bundle.outcome_ = fit_learner(spec.outcome, x, table.outcome, ones, names);

  bundle.density_ = fit_mediator_density(table, spec.mediator, spec.density);

  const auto& support = table.support;
  const auto strides = cell_strides(support);
  bundle.mediator_values_.resize(static_cast<Eigen::Index>(support.num_cells()), t);
  for (std::size_t cell = 0; cell < support.num_cells(); ++cell) {
    for (std::size_t j = 0; j < support.num_mediators(); ++j) {
      bundle.mediator_values_(static_cast<Eigen::Index>(cell), static_cast<Eigen::Index>(j)) =
          support.levels[j][(cell / strides[j]) % support.num_levels(j)];
    }
  }
  return bundle;
}

EmpiricalNuisances::EmpiricalNuisances(const ObservationTable& table) : support_(table.support) {
  const std::size_t cells = support_.num_cells();
  std::vector<double> c;
  for (std::size_t i = 0; i < table.size(); ++i) {
    table.covariate_row(i, c);
    auto [it, inserted] = strata_.try_emplace(c);
    Stratum& s = it->second;
    if (inserted) {
      for (int arm = 0; arm <= 1; ++arm) {
        s.cell_count[arm].assign(cells, 0.0);
        s.cell_sum[arm].assign(cells, 0.0);
      }
    }
    const int arm = table.treatment[i];
    const std::size_t cell = observed_cell(table, i);
    s.count[arm] += 1.0;
    s.cell_count[arm][cell] += 1.0;
    s.cell_sum[arm][cell] += table.outcome[static_cast<Eigen::Index>(i)];
  }
}

const EmpiricalNuisances::Stratum& EmpiricalNuisances::stratum(std::span<const double> c) const {
  auto it = strata_.find(std::vector<double>(c.begin(), c.end()));
  if (it == strata_.end()) throw DataError("covariate vector not seen by the empirical nuisance model");
  return it->second;
}

double EmpiricalNuisances::treatment_probability(int arm, std::span<const double> c) const {
  const Stratum& s = stratum(c);
  return s.count[arm] / (s.count[0] + s.count[1]);
}

void EmpiricalNuisances::outcome_grid(int arm, std::span<const double> c, std::span<double> out) const {
  const Stratum& s = stratum(c);
  // Cells never observed in this arm carry no mass under the arm's own law; they get the
  // arm-level mean so they stay inside [0, 1].
  double arm_sum = 0.0;
  for (double v : s.cell_sum[arm]) arm_sum += v;
  const double fallback = s.count[arm] > 0.0 ? arm_sum / s.count[arm] : 0.5;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = s.cell_count[arm][k] > 0.0 ? s.cell_sum[arm][k] / s.cell_count[arm][k] : fallback;
  }
}

MediatorLaw EmpiricalNuisances::mediator_law(int arm, std::span<const double> c) const {
  const Stratum& s = stratum(c);
  MediatorLaw law;
  law.joint.assign(support_.num_cells(), 0.0);
  if (s.count[arm] > 0.0) {
    for (std::size_t k = 0; k < law.joint.size(); ++k) law.joint[k] = s.cell_count[arm][k] / s.count[arm];
  }
  law.marginals = marginals_of(support_, law.joint);
  return law;
}

}  // namespace medfx
