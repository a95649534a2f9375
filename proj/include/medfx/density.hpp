#pragma once

#include "medfx/data.hpp"
#include "medfx/logistic.hpp"

#include <memory>
#include <span>
#include <vector>

namespace medfx {

/// Conditional law of the mediators given (A = arm, C = c). The joint is flattened
/// row-major over the level indices (last mediator fastest).
struct MediatorLaw {
  std::vector<double> joint;
  std::vector<std::vector<double>> marginals;
};

/// Row-major strides for a mediator support.
std::vector<std::size_t> cell_strides(const MediatorSupport& support);
std::size_t cell_index(const MediatorSupport& support, std::span<const int> levels);
std::size_t observed_cell(const ObservationTable& table, std::size_t row);

/// One row per (subject, bin <= observed level), event = 1 on the last row only.
struct LongFormTable {
  std::size_t mediator = 0;                  // 0-based mediator whose hazard is modelled
  std::vector<std::size_t> conditioning;     // mediators entering as features
  std::vector<std::size_t> parent_row;
  std::vector<int> bin;                      // 0-based level index
  std::vector<int> event;

  std::size_t size() const { return bin.size(); }
};

enum class LongFormKind { m2, m1_given_m2 };

LongFormTable expand_long_form(const ObservationTable& table, std::size_t mediator,
                               std::vector<std::size_t> conditioning = {});
LongFormTable expand_long_form(const ObservationTable& table, LongFormKind which);

enum class HazardFeatures { main_terms, interacted };

/// Discrete hazards lambda_b(a, c, conditioning) for one mediator.
class HazardModel {
 public:
  /// Hazard per support level; the top level is always 1.
  std::vector<double> hazards(int arm, std::span<const double> c, std::span<const int> conditioning_levels) const;

  std::size_t num_levels() const { return num_levels_; }
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  friend HazardModel fit_hazards(const LongFormTable&, const ObservationTable&, const LearnerSpec&, HazardFeatures);

  Eigen::RowVectorXd feature_row(int bin, int arm, std::span<const double> c,
                                 std::span<const int> conditioning_levels) const;

  std::shared_ptr<const FittedLearner> learner_;
  HazardFeatures features_ = HazardFeatures::main_terms;
  std::size_t num_levels_ = 0;
  std::size_t num_covariates_ = 0;
  std::vector<std::vector<int>> conditioning_values_;  // support level values of the conditioning mediators
  double floor_ = 1e-3;
  std::vector<std::string> diagnostics_;
};

HazardModel fit_hazards(const LongFormTable& long_form, const ObservationTable& table, const LearnerSpec& spec,
                        HazardFeatures features = HazardFeatures::main_terms);

/// q_m = lambda_m prod_{b<m} (1 - lambda_b), normalized by the total unnormalized mass.
std::vector<double> density_from_hazards(std::span<const double> hazards);

/// Raises entries below floor to floor and rescales the rest so the vector sums to one;
/// repeats until every entry is at least floor.
void floor_and_renormalize(std::vector<double>& p, double floor);

struct DensityOptions {
  HazardFeatures features = HazardFeatures::main_terms;
  double floor = 1e-4;
  std::size_t cell_cap = 100000;
};

/// Joint mediator density by the hazard chain q(m_t | c) q(m_{t-1} | m_t, c) ... q(m_1 | m_{2:t}, c).
class MediatorDensityModel {
 public:
  MediatorLaw law(int arm, std::span<const double> c) const;

  const MediatorSupport& support() const { return support_; }
  const HazardModel& hazard(std::size_t mediator) const { return hazards_[mediator]; }
  double floor() const { return floor_; }
  std::vector<std::string> diagnostics() const;

 private:
  friend MediatorDensityModel fit_mediator_density(const ObservationTable&, const LearnerSpec&,
                                                   const DensityOptions&);
  MediatorSupport support_;
  std::vector<HazardModel> hazards_;  // hazards_[j] models M_j given M_{j+1:t}
  double floor_ = 1e-4;
};

MediatorDensityModel fit_mediator_density(const ObservationTable& table, const LearnerSpec& spec,
                                          const DensityOptions& options = {});

MediatorLaw build_joint_and_marginals(const MediatorDensityModel& model, int arm, std::span<const double> c);

/// Sums a flattened joint down to each mediator's marginal.
std::vector<std::vector<double>> marginals_of(const MediatorSupport& support, std::span<const double> joint);

}  // namespace medfx
