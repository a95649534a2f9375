#pragma once

#include "medfx/nuisance.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace medfx {

/// Effect order used everywhere: total, direct, indirect via M1, indirect via M2, covariant.
enum Effect : std::size_t { kTotal = 0, kDirect = 1, kIndirectM1 = 2, kIndirectM2 = 3, kCovariant = 4 };
inline constexpr std::size_t kNumEffects = 5;
using EffectVector = std::array<double, kNumEffects>;

const std::array<std::string, kNumEffects>& effect_names();

/// Mediator measures the outcome regression is integrated against (two mediators).
enum class Measure {
  joint_a,          // Q_{a, M1, M2}
  joint_astar,      // Q_{a*, M1, M2}
  m1a_m2astar,      // Q_{a, M1} x Q_{a*, M2}
  m1astar_m2astar,  // Q_{a*, M1} x Q_{a*, M2}
  m1a_m2a,          // Q_{a, M1} x Q_{a, M2}
};

/// Mass of the measure on every cell of a two-mediator support.
std::vector<double> measure_mass(const std::array<MediatorLaw, 2>& laws, Measure measure);

/// sum_m qbar(m) * mass(m).
double marginalize_outcome_regression(std::span<const double> qbar, const std::array<MediatorLaw, 2>& laws,
                                      Measure measure);

/// Integrates mediator `over` (0 = M1, 1 = M2) of a two-mediator grid against `marginal`,
/// leaving a function of the other mediator's level.
std::vector<double> partial_surface(std::span<const double> qbar, std::size_t levels_m1, std::size_t levels_m2,
                                    std::size_t over, std::span<const double> marginal);

/// The Q-tilde family for one subject (outcome regression under A = a unless stated).
struct SubjectFunctionals {
  double total_a = 0.0;      // Q~_{a, M1, M2}
  double total_astar = 0.0;  // Q~_{a*, M1*, M2*}, Qbar under a*
  double cross = 0.0;        // Q~_{a, M1*, M2*}
  double x = 0.0;            // Q~_{a, M1 x M2*}
  double y = 0.0;            // Q~_{a, M1* x M2*}
  double z = 0.0;            // Q~_{a, M1 x M2}
  std::vector<double> over_m1_a;      // Q~_{a, M1}(m2)
  std::vector<double> over_m1_astar;  // Q~_{a, M1*}(m2)
  std::vector<double> over_m2_a;      // Q~_{a, M2}(m1)
  std::vector<double> over_m2_astar;  // Q~_{a, M2*}(m1)
};

using MarginalizedRegressions = std::vector<SubjectFunctionals>;

SubjectFunctionals compute_functionals(const SubjectNuisance& s, const MediatorSupport& support);
MarginalizedRegressions compute_functionals(const std::vector<SubjectNuisance>& subjects,
                                            const MediatorSupport& support);

/// Means over subjects (empirical C distribution); covariant by subtraction.
EffectVector plugin_effects(const MarginalizedRegressions& marginalized);

/// Effects of one subject's conditional functionals.
EffectVector conditional_effects(const SubjectFunctionals& f);

}  // namespace medfx
