#include "medfx/functionals.hpp"

#include <stdexcept>

namespace medfx {

const std::array<std::string, kNumEffects>& effect_names() {
  static const std::array<std::string, kNumEffects> names{"total", "direct", "indirect_m1", "indirect_m2",
                                                          "covariant"};
  return names;
}

std::vector<double> measure_mass(const std::array<MediatorLaw, 2>& laws, Measure measure) {
  switch (measure) {
    case Measure::joint_a: return laws[1].joint;
    case Measure::joint_astar: return laws[0].joint;
    default: break;
  }
  const std::vector<double>* m1 = nullptr;
  const std::vector<double>* m2 = nullptr;
  switch (measure) {
    case Measure::m1a_m2astar: m1 = &laws[1].marginals[0]; m2 = &laws[0].marginals[1]; break;
    case Measure::m1astar_m2astar: m1 = &laws[0].marginals[0]; m2 = &laws[0].marginals[1]; break;
    case Measure::m1a_m2a: m1 = &laws[1].marginals[0]; m2 = &laws[1].marginals[1]; break;
    default: break;
  }
  std::vector<double> mass(m1->size() * m2->size());
  for (std::size_t i = 0; i < m1->size(); ++i) {
    for (std::size_t j = 0; j < m2->size(); ++j) mass[i * m2->size() + j] = (*m1)[i] * (*m2)[j];
  }
  return mass;
}

double marginalize_outcome_regression(std::span<const double> qbar, const std::array<MediatorLaw, 2>& laws,
                                      Measure measure) {
  const auto mass = measure_mass(laws, measure);
  if (mass.size() != qbar.size()) throw std::invalid_argument("outcome grid does not match mediator support");
  double total = 0.0;
  for (std::size_t k = 0; k < mass.size(); ++k) total += qbar[k] * mass[k];
  return total;
}

std::vector<double> partial_surface(std::span<const double> qbar, std::size_t levels_m1, std::size_t levels_m2,
                                    std::size_t over, std::span<const double> marginal) {
  std::vector<double> out(over == 0 ? levels_m2 : levels_m1, 0.0);
  for (std::size_t i = 0; i < levels_m1; ++i) {
    for (std::size_t j = 0; j < levels_m2; ++j) {
      const double q = qbar[i * levels_m2 + j];
      if (over == 0) {
        out[j] += q * marginal[i];
      } else {
        out[i] += q * marginal[j];
      }
    }
  }
  return out;
}

SubjectFunctionals compute_functionals(const SubjectNuisance& s, const MediatorSupport& support) {
  if (support.num_mediators() != 2) throw std::invalid_argument("two-mediator functionals need t = 2");
  const std::size_t l1 = support.num_levels(0), l2 = support.num_levels(1);
  const auto& qa = s.qbar[1];
  const auto& qs = s.qbar[0];
  const auto& a1 = s.law[1].marginals[0];
  const auto& a2 = s.law[1].marginals[1];
  const auto& s1 = s.law[0].marginals[0];
  const auto& s2 = s.law[0].marginals[1];

  SubjectFunctionals f;
  f.over_m1_a = partial_surface(qa, l1, l2, 0, a1);
  f.over_m1_astar = partial_surface(qa, l1, l2, 0, s1);
  f.over_m2_a = partial_surface(qa, l1, l2, 1, a2);
  f.over_m2_astar = partial_surface(qa, l1, l2, 1, s2);
  for (std::size_t k = 0; k < qa.size(); ++k) {
    f.total_a += qa[k] * s.law[1].joint[k];
    f.total_astar += qs[k] * s.law[0].joint[k];
    f.cross += qa[k] * s.law[0].joint[k];
  }
  for (std::size_t j = 0; j < l2; ++j) {
    f.x += f.over_m1_a[j] * s2[j];
    f.y += f.over_m1_astar[j] * s2[j];
    f.z += f.over_m1_a[j] * a2[j];
  }
  return f;
}

MarginalizedRegressions compute_functionals(const std::vector<SubjectNuisance>& subjects,
                                            const MediatorSupport& support) {
  MarginalizedRegressions out;
  out.reserve(subjects.size());
  for (const auto& s : subjects) out.push_back(compute_functionals(s, support));
  return out;
}

EffectVector conditional_effects(const SubjectFunctionals& f) {
  EffectVector e{};
  e[kTotal] = f.total_a - f.total_astar;
  e[kDirect] = f.cross - f.total_astar;
  e[kIndirectM1] = f.x - f.y;
  e[kIndirectM2] = f.z - f.x;
  e[kCovariant] = e[kTotal] - e[kDirect] - e[kIndirectM1] - e[kIndirectM2];
  return e;
}

EffectVector plugin_effects(const MarginalizedRegressions& marginalized) {
  if (marginalized.empty()) throw std::invalid_argument("no subjects to average over");
  EffectVector sum{};
  for (const auto& f : marginalized) {
    const auto e = conditional_effects(f);
    for (std::size_t k = 0; k < 4; ++k) sum[k] += e[k];
  }
  const auto n = static_cast<double>(marginalized.size());
  EffectVector out{};
  for (std::size_t k = 0; k < 4; ++k) out[k] = sum[k] / n;
  out[kCovariant] = out[kTotal] - out[kDirect] - out[kIndirectM1] - out[kIndirectM2];
  return out;
}

}  // namespace medfx
