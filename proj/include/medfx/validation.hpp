#pragma once

#include "medfx/simulation.hpp"

#include <string>
#include <vector>

namespace medfx {

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

/// Test fixtures that break the estimator on purpose, to show the checks can fail.
enum class Fixture { none, flip_eif_sign };

/// Oracle truth within 0.005 of the published rounded values (0.10, 0.15, -0.02, -0.03, 0).
std::vector<CheckResult> check_truth(const DgpConfig& dgp = DgpConfig::paper());

/// Mean of each EIF at the true nuisances and true effects over `draws` simulated
/// observations, against 3 Monte Carlo standard errors.
std::vector<CheckResult> check_eif_mean_zero(std::size_t draws, std::uint64_t seed, unsigned threads,
                                             Fixture fixture = Fixture::none,
                                             const DgpConfig& dgp = DgpConfig::paper());

/// Saturated problem (one covariate level, 2 x 2 mediators, continuous outcome): empirical
/// nuisances make every correction vanish.
ObservationTable saturated_table(std::size_t n, std::uint64_t seed);
std::vector<CheckResult> check_npmle(std::size_t n, std::uint64_t seed);

/// TMLE on a DGP draw: fluctuation first-order conditions <= 1e-8 and residual
/// scores of total, direct and both indirect effects <= 1e-6.
std::vector<CheckResult> check_tmle_scores(std::size_t n, std::uint64_t seed);

/// t = 2 multimediator one-step against the two-mediator one-step, to 1e-12.
std::vector<CheckResult> check_reduction(std::size_t n, std::uint64_t seed);

/// One check per (combination, protected effect).
std::vector<CheckResult> check_robustness(const RobustnessConfig& config);

}  // namespace medfx
