#pragma once

#include "medfx/eif.hpp"
#include "medfx/functionals.hpp"
#include "medfx/logistic.hpp"
#include "medfx/nuisance.hpp"

#include <optional>
#include <string>
#include <vector>

namespace medfx {

enum class Method { one_step, tmle };
enum class TmleMode { single_pass, iterate };

std::string to_string(Method method);
std::string to_string(TmleMode mode);

struct EstimatorOptions {
  double alpha = 0.05;
  bool ratio = false;  // also report psi_{M1,a} / psi_{M1,a*}
  TmleMode mode = TmleMode::single_pass;
  int max_passes = 20;
  std::vector<Contrast> contrasts = pairwise_contrasts();
  unsigned threads = 1;
};

/// One fitted fluctuation: coefficient(s), IRLS diagnostics and the first-order
/// condition sum_i w_i x_i (outcome_i - fitted_i) / n at the solution.
struct FluctuationFit {
  std::vector<double> coefficients;
  Convergence convergence;
  bool ridge_used = false;
  double score = 0.0;
};

struct FluctuationParams {
  FluctuationFit epsilon;     // 5-dimensional outcome-regression fluctuation
  FluctuationFit delta;       // direct effect
  FluctuationFit eta;         // Q~_{a, M1 x M2*}
  FluctuationFit gamma;       // Q~_{a, M1* x M2*}
  FluctuationFit zeta;        // Q~_{a, M1 x M2}
  FluctuationFit total_a;     // Q~_{a, M1, M2}
  FluctuationFit total_astar; // Q~_{a*, M1*, M2*}
  int passes = 0;
  bool clamped = false;  // a scaled offset touched 0/1 and was nudged before the logit

  double max_abs_coefficient() const;
  double max_abs_score() const;
};

struct EstimatorOutput {
  Method method = Method::one_step;
  EffectReport report;            // original outcome scale
  EffectVector plugin{};          // scaled plug-in effects at the initial nuisances
  EffectVector estimates{};       // scaled final estimates
  EffectVector residual_scores{}; // P_n D*(P_n', psi_n), scaled
  Eigen::MatrixXd eifs;           // n x 5, scaled, at the final estimates
  std::optional<FluctuationParams> fluctuations;
  bool out_of_bounds = false;
  std::vector<std::string> warnings;
};

EstimatorOutput onestep(const std::vector<SubjectNuisance>& subjects, const ObservationTable& table,
                        const EstimatorOptions& options = {});
EstimatorOutput onestep(const NuisanceModel& nuisances, const ObservationTable& table,
                        const EstimatorOptions& options = {});

/// Supplies H1..H5 at observed rows: a weighted logistic fit of Y on H with offset
/// logit Qbar(A_i, M_i, C_i), no intercept; returns subjects carrying Qbar* on every cell.
std::vector<SubjectNuisance> tmle_target_outcome(const std::vector<SubjectNuisance>& subjects,
                                                 const ObservationTable& table, FluctuationFit& fit);

EstimatorOutput tmle(const std::vector<SubjectNuisance>& subjects, const ObservationTable& table,
                     const EstimatorOptions& options = {});
EstimatorOutput tmle(const NuisanceModel& nuisances, const ObservationTable& table,
                     const EstimatorOptions& options = {});

}  // namespace medfx
