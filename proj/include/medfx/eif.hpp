#pragma once

#include "medfx/data.hpp"
#include "medfx/functionals.hpp"

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace medfx {

class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// H1..H5 of the outcome fluctuation plus 1_a/g_a, evaluated at (arm, mediator cell).
struct CleverCovariates {
  double h1 = 0.0, h2 = 0.0, h3 = 0.0, h4 = 0.0, h5 = 0.0;
  double inv_ga = 0.0;
};

/// Density ratios whose denominator q_{a,M1,M2} is zero are set to 0: such a cell has
/// no mass in the a arm and positivity has already failed there.
CleverCovariates clever_covariates(const SubjectNuisance& s, int arm, std::size_t cell,
                                   const MediatorSupport& support);
std::vector<CleverCovariates> clever_covariates(const std::vector<SubjectNuisance>& subjects,
                                                const ObservationTable& table);

/// Row of D* + Psi(P'): the five influence functions with the effect terms left in,
/// so that D(P', psi) = eif_row(...) - psi.
EffectVector eif_row(const SubjectNuisance& s, const SubjectFunctionals& f, const MediatorSupport& support,
                     int arm, std::size_t cell, double y);

/// n x 5 matrix of D*(P', psi) (estimating-function form) in effect order.
Eigen::MatrixXd eval_eifs(const std::vector<SubjectNuisance>& subjects, const MarginalizedRegressions& marginalized,
                          const EffectVector& effects, const ObservationTable& table);

/// n x 2 matrix of (D*_{M1,a}, D*_{M1,a*}) with the Psi terms left in.
Eigen::MatrixXd eval_ratio_eifs(const std::vector<SubjectNuisance>& subjects,
                                const MarginalizedRegressions& marginalized, const ObservationTable& table);

struct Contrast {
  std::string name;
  EffectVector weights{};
};

/// All pairwise differences between the five effects.
std::vector<Contrast> pairwise_contrasts();

struct ContrastResult {
  std::string name;
  EffectVector weights{};
  double estimate = 0.0;
  double se = 0.0;
  double z = 0.0;
  double p_value = 0.0;
  bool degenerate = false;  // zero variance: z and p undefined
};

struct RatioResult {
  double numerator = 0.0;    // psi_{M1,a}
  double denominator = 0.0;  // psi_{M1,a*}
  double ratio = 0.0;
  double tau = 0.0;          // sqrt of the delta-method variance
  double se = 0.0;           // tau / sqrt(n)
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  Eigen::Matrix2d sigma = Eigen::Matrix2d::Zero();
};

struct EffectReport {
  std::size_t n = 0;
  double alpha = 0.05;
  EffectVector estimates{}, se{}, ci_lower{}, ci_upper{}, z{}, p_value{};
  Eigen::MatrixXd sigma;  // 5 x 5, divisor n
  std::vector<ContrastResult> contrasts;
  std::optional<RatioResult> ratio;
};

/// Empirical covariance (divisor n) of the centred columns of a matrix.
Eigen::MatrixXd empirical_covariance(const Eigen::MatrixXd& columns);

/// Wald inference from the influence-function matrix. Estimates, SEs and Sigma are mapped
/// back to the outcome's original scale via `scale` (additive effects are linear in Y).
EffectReport covariance_and_ci(const Eigen::MatrixXd& eifs, const EffectVector& estimates, double alpha,
                               const OutcomeScale& scale = {},
                               const std::vector<Contrast>& contrasts = pairwise_contrasts());

inline constexpr double kRatioDenominatorFloor = 1e-6;

/// Delta-method ratio numerator/denominator; sigma is the 2 x 2 covariance of the two
/// influence functions (divisor n).
RatioResult ratio_effect(double numerator, double denominator, const Eigen::Matrix2d& sigma, std::size_t n,
                         double alpha);

}  // namespace medfx
