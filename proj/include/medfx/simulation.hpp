#pragma once

#include "medfx/estimators.hpp"
#include "medfx/nuisance.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace medfx {

/// Data-generating process: C ~ U(0,1)^2, A | C logistic, independent truncated-geometric
/// mediators given (A, C), Bernoulli Y with a main-terms logistic mean.
struct DgpConfig {
  struct Mediator {
    double intercept = -1.0;
    double c1 = 0.25;
    double a = 0.25;
  };

  std::size_t n = 1000;
  std::uint64_t seed = 1;
  int truncation = 5;  // support {0, ..., truncation}

  double g_intercept = -1.0, g_c1 = 1.0, g_c2 = 1.0;
  std::vector<Mediator> mediators{{-1.0, 0.25, 0.25}, {-1.0, 0.25, 0.35}};
  double y_intercept = -1.0, y_c1 = 1.0, y_c2 = -1.0, y_a = 1.0;
  std::vector<double> y_m{0.5, 0.5};

  std::size_t t() const { return mediators.size(); }
  void validate() const;

  /// Defaults for t = 2; t = 3 adds a mediator with success expit(-1 + 0.25 c1 + 0.3 a).
  static DgpConfig paper(std::size_t t = 2);
  /// Same configuration with every treatment coefficient set to zero.
  DgpConfig null_world() const;
};

/// P(K = k) = (1-p)^k p for k < truncation, P(K = truncation) = (1-p)^truncation.
std::vector<double> truncated_geometric_pmf(double p, int truncation);

/// splitmix64 finalizer; also used to derive replicate seeds.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

/// mt19937_64 with a 53-bit uniform on [0, 1).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }
  /// Inverse-CDF draw from a pmf over {0, ..., size-1}.
  int discrete(const std::vector<double>& pmf);

 private:
  std::mt19937_64 engine_;
};

ObservationTable draw_dgp(const DgpConfig& config);

/// The DGP's own nuisances, exact.
class AnalyticNuisances final : public NuisanceModel {
 public:
  explicit AnalyticNuisances(DgpConfig config);

  const MediatorSupport& support() const override { return support_; }
  double treatment_probability(int arm, std::span<const double> c) const override;
  void outcome_grid(int arm, std::span<const double> c, std::span<double> out) const override;
  MediatorLaw mediator_law(int arm, std::span<const double> c) const override;

  double mediator_success(std::size_t j, int arm, std::span<const double> c) const;
  const DgpConfig& config() const { return config_; }

 private:
  DgpConfig config_;
  MediatorSupport support_;
};

/// Gauss-Legendre rule on [0, 1] with 10, 20, 40 or 80 nodes.
std::vector<std::pair<double, double>> gauss_legendre_unit(int nodes);

/// Integral over (c1, c2) in [0,1]^2 of the density of C times f(c).
template <class F>
auto integrate_covariates(int nodes, F&& f) -> decltype(f(0.0, 0.0)) {
  const auto rule = gauss_legendre_unit(nodes);
  decltype(f(0.0, 0.0)) total{};
  bool first = true;
  for (const auto& [x1, w1] : rule) {
    for (const auto& [x2, w2] : rule) {
      auto v = f(x1, x2);
      if (first) {
        total = v;
        for (auto& e : total) e *= w1 * w2;
        first = false;
      } else {
        for (std::size_t k = 0; k < v.size(); ++k) total[k] += w1 * w2 * v[k];
      }
    }
  }
  return total;
}

struct TruthReport {
  EffectVector effects{};      // t = 2 only; NaN beyond total and direct otherwise
  double ratio_numerator = 0;  // psi_{M1,a}
  double ratio_denominator = 0;
  double ratio = 0;
  double multi_direct = 0;
  std::vector<double> multi_indirect;  // one per mediator
  int nodes = 0;
  double refinement_change = 0;        // max |difference| between the last two rules
};

/// Exact sums over mediator cells, Gauss-Legendre over C, refined until successive rules
/// agree to 1e-8.
TruthReport true_effects_oracle(const DgpConfig& config);

struct MonteCarloConfig {
  DgpConfig dgp;
  std::vector<std::size_t> sample_sizes{250, 500, 1000, 2000};
  std::size_t replicates = 1000;
  std::vector<Method> methods{Method::one_step, Method::tmle};
  std::uint64_t seed = 20190101;
  unsigned threads = 1;
  double alpha = 0.05;
  bool ratio = false;
  NuisanceSpec nuisance;
};

struct ReplicateRecord {
  std::size_t n = 0;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  Method method = Method::one_step;
  bool ok = false;
  std::string error;
  EffectVector estimate{}, se{};
  bool out_of_bounds = false;
  bool nonconverged = false;
  double ratio = 0.0, ratio_se = 0.0;
};

struct CellSummary {
  Method method = Method::one_step;
  std::size_t n = 0;
  std::size_t effect = 0;
  std::size_t replicates = 0;  // successful
  std::size_t failures = 0;
  double truth = 0, mean = 0, bias = 0, sd = 0, mse = 0, mean_se = 0;
  double coverage_oracle = 0, coverage_estimated = 0;
  std::size_t out_of_bounds = 0, nonconverged = 0;
};

struct RatioSummary {
  Method method = Method::one_step;
  std::size_t n = 0;
  std::size_t replicates = 0;
  double truth = 0, mean = 0, sd = 0, mean_se = 0, coverage = 0;
};

struct SimulationReport {
  MonteCarloConfig config;
  TruthReport truth;
  std::vector<ReplicateRecord> records;  // ordered by (n, replicate, method)
  std::vector<CellSummary> cells;        // ordered by (method, n, effect)
  std::vector<RatioSummary> ratios;

  const CellSummary& cell(Method method, std::size_t n, std::size_t effect) const;
};

SimulationReport run_monte_carlo(const MonteCarloConfig& config);

/// Nuisances the Theorem 3 robustness analysis distinguishes.
enum class Nuisance {
  g_a, g_astar, qbar_a, qbar_astar, q_a_joint, q_astar_joint, q_a_m1, q_a_m2, q_astar_m1, q_astar_m2
};
inline constexpr std::size_t kNumNuisances = 10;
std::string to_string(Nuisance nuisance);

struct RobustnessCombo {
  enum class Kind { theorem, corrected, negative_control };
  std::string id;
  Kind kind = Kind::theorem;
  std::vector<std::size_t> effects;  // effects this combination is claimed to protect
  std::vector<Nuisance> correct;
};

std::string to_string(RobustnessCombo::Kind kind);

/// The listed combinations per effect, the repaired versions of the three that are not
/// sufficient, and the all-corrupted negative control.
const std::vector<RobustnessCombo>& robustness_combos();
const RobustnessCombo& find_combo(const std::string& id);

/// Truth for the nuisances in `correct`, a misspecified version for the rest: logit shifts
/// on g (-0.5 per arm), Qbar_a (-0.5), Qbar_a* (+0.5) and the mediator success probabilities
/// (+0.5), plus a multiplicative association tilt on the joint mediator law whose marginals
/// become the corrupted marginals. A correct joint implies correct marginals.
class CorruptedNuisances final : public NuisanceModel {
 public:
  CorruptedNuisances(DgpConfig config, std::vector<Nuisance> correct, double shift = 0.5, double tilt = 1.5);

  const MediatorSupport& support() const override { return truth_.support(); }
  double treatment_probability(int arm, std::span<const double> c) const override;
  void outcome_grid(int arm, std::span<const double> c, std::span<double> out) const override;
  MediatorLaw mediator_law(int arm, std::span<const double> c) const override;

  bool is_correct(Nuisance n) const { return correct_[static_cast<std::size_t>(n)]; }

 private:
  AnalyticNuisances truth_;
  std::array<bool, kNumNuisances> correct_{};
  double shift_, tilt_;
};

/// Large-sample limit of the one-step estimator under the corrupted nuisances minus truth:
/// E_P[D*(P') + Psi(P')] - Psi(P), by quadrature.
EffectVector population_bias(const DgpConfig& config, const RobustnessCombo& combo, int nodes = 40);

struct RobustnessConfig {
  DgpConfig dgp;
  std::vector<std::size_t> sample_sizes{500, 2000, 8000};
  std::size_t replicates = 50;
  std::uint64_t seed = 3;
  unsigned threads = 1;
  std::vector<std::string> combos;  // empty = all
  double pass_bias = 0.01;
  double control_bias = 0.02;
};

struct RobustnessRow {
  std::string combo;
  RobustnessCombo::Kind kind = RobustnessCombo::Kind::theorem;
  std::size_t effect = 0;
  std::size_t n = 0;
  std::size_t replicates = 0;
  std::size_t failures = 0;
  double bias = 0, sd = 0, mc_se = 0;
  double population_bias = 0;
};

struct RobustnessVerdict {
  std::string combo;
  RobustnessCombo::Kind kind = RobustnessCombo::Kind::theorem;
  std::size_t effect = 0;
  double bias_at_largest_n = 0;
  double population_bias = 0;
  bool pass = false;
};

struct RobustnessReport {
  EffectVector truth{};
  std::vector<RobustnessRow> rows;
  std::vector<RobustnessVerdict> verdicts;
};

RobustnessReport robustness_suite(const RobustnessConfig& config);

}  // namespace medfx
