#pragma once

#include "medfx/data.hpp"
#include "medfx/density.hpp"
#include "medfx/logistic.hpp"

#include <array>
#include <map>
#include <memory>
#include <span>
#include <vector>

namespace medfx {

/// Everything the estimators need to know about P': g, Qbar and the mediator laws.
/// Implementations: fitted (NuisanceBundle), saturated empirical, analytic DGP truth,
/// and deliberately corrupted mixtures of those.
class NuisanceModel {
 public:
  virtual ~NuisanceModel() = default;
  virtual const MediatorSupport& support() const = 0;
  /// g_arm(c) = P(A = arm | C = c).
  virtual double treatment_probability(int arm, std::span<const double> c) const = 0;
  /// Qbar_arm(m, c) for every cell of the mediator support, in cell order.
  virtual void outcome_grid(int arm, std::span<const double> c, std::span<double> out) const = 0;
  virtual MediatorLaw mediator_law(int arm, std::span<const double> c) const = 0;
  virtual std::vector<std::string> diagnostics() const { return {}; }
};

/// Nuisances evaluated at one subject's covariates. Index 0 is a*, 1 is a.
struct SubjectNuisance {
  std::array<double, 2> g{};
  std::array<std::vector<double>, 2> qbar;
  std::array<MediatorLaw, 2> law;
};

SubjectNuisance evaluate_subject(const NuisanceModel& model, std::span<const double> c);
std::vector<SubjectNuisance> evaluate_subjects(const NuisanceModel& model, const ObservationTable& table,
                                               unsigned threads = 1);

struct NuisanceSpec {
  LearnerSpec propensity;
  LearnerSpec outcome;
  LearnerSpec mediator;
  DensityOptions density;
};

/// Fitted nuisances: logistic g on C, logistic Qbar on (C, A, M values), hazard-chain densities.
class NuisanceBundle final : public NuisanceModel {
 public:
  const MediatorSupport& support() const override { return density_.support(); }
  double treatment_probability(int arm, std::span<const double> c) const override;
  void outcome_grid(int arm, std::span<const double> c, std::span<double> out) const override;
  MediatorLaw mediator_law(int arm, std::span<const double> c) const override { return density_.law(arm, c); }
  std::vector<std::string> diagnostics() const override;

  const MediatorDensityModel& density() const { return density_; }

 private:
  friend NuisanceBundle fit_nuisances(const ObservationTable&, const NuisanceSpec&);
  std::shared_ptr<const FittedLearner> propensity_;
  std::shared_ptr<const FittedLearner> outcome_;
  MediatorDensityModel density_;
  double propensity_floor_ = 1e-3;
  Eigen::MatrixXd mediator_values_;  // cells x t
};

NuisanceBundle fit_nuisances(const ObservationTable& table, const NuisanceSpec& spec);

/// Saturated nonparametric MLE: every distinct covariate vector is its own stratum and
/// g, Qbar and the mediator laws are empirical frequencies / cell means. No floors.
class EmpiricalNuisances final : public NuisanceModel {
 public:
  explicit EmpiricalNuisances(const ObservationTable& table);

  const MediatorSupport& support() const override { return support_; }
  double treatment_probability(int arm, std::span<const double> c) const override;
  void outcome_grid(int arm, std::span<const double> c, std::span<double> out) const override;
  MediatorLaw mediator_law(int arm, std::span<const double> c) const override;

 private:
  struct Stratum {
    std::array<double, 2> count{};
    std::array<std::vector<double>, 2> cell_count;
    std::array<std::vector<double>, 2> cell_sum;
  };
  const Stratum& stratum(std::span<const double> c) const;

  MediatorSupport support_;
  std::map<std::vector<double>, Stratum> strata_;
};

}  // namespace medfx
