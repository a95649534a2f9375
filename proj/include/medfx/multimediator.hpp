#pragma once

#include "medfx/eif.hpp"
#include "medfx/nuisance.hpp"

#include <string>
#include <vector>

namespace medfx {

struct MultiMediatorSpec {
  std::size_t t = 2;
  std::vector<std::vector<int>> supports;
  std::size_t s = 1;  // 1-based target mediator for indirect effects

  void validate() const;
};

MultiMediatorSpec multimediator_spec(const ObservationTable& table, std::size_t s = 1);

/// Qbar_a integrated against a product of per-mediator marginals. value is Psi_mu(c);
/// partial[u][k] integrates every mediator except u, left at level index k.
struct ProductMarginalization {
  double value = 0.0;
  std::vector<std::vector<double>> partial;
};

ProductMarginalization marginalize_product(std::span<const double> qbar, const MediatorSupport& support,
                                           const std::vector<const std::vector<double>*>& marginals);

/// Arms of the split product measure for target s (1-based): a for u < s, a* for u > s,
/// and `target_arm` for s itself.
std::vector<int> split_arms(std::size_t t, std::size_t s, int target_arm);

/// One influence-function row (Psi terms left in) for Qbar_a integrated against the product
/// of marginals of M_u under arms[u]:
///   prod mu / q_a * 1_a/g_a (y - Qbar_a) + sum_u 1_{arms[u]}/g_{arms[u]} (F_u(m_u) - Psi_mu) + Psi_mu.
double product_measure_eif(const SubjectNuisance& s, const MediatorSupport& support, const std::vector<int>& arms,
                           int arm, std::size_t cell, double y);

struct MultiEffectResult {
  std::string name;
  double plugin = 0.0;     // scaled
  double estimate = 0.0;   // original outcome scale
  double se = 0.0;
  double ci_lower = 0.0, ci_upper = 0.0;
  double z = 0.0, p_value = 0.0;
  Eigen::VectorXd eif;     // scaled, centred at the scaled estimate
};

MultiEffectResult onestep_multi_direct(const std::vector<SubjectNuisance>& subjects, const ObservationTable& table,
                                       double alpha = 0.05);
MultiEffectResult onestep_multi_direct(const NuisanceModel& nuisances, const ObservationTable& table,
                                       double alpha = 0.05, unsigned threads = 1);

/// s is 1-based.
MultiEffectResult onestep_multi_indirect(const std::vector<SubjectNuisance>& subjects, std::size_t s,
                                         const ObservationTable& table, double alpha = 0.05);
MultiEffectResult onestep_multi_indirect(const NuisanceModel& nuisances, std::size_t s,
                                         const ObservationTable& table, double alpha = 0.05, unsigned threads = 1);

/// Population-level effects for one subject's nuisances: direct, then indirect through each mediator.
std::vector<double> multi_conditional_effects(const SubjectNuisance& s, const MediatorSupport& support);

}  // namespace medfx
