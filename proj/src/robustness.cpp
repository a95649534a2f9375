#include "medfx/density.hpp"
#include "medfx/eif.hpp"
#include "medfx/numeric.hpp"
#include "medfx/parallel.hpp"
#include "medfx/simulation.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace medfx {

std::string to_string(Nuisance nuisance) {
  static const std::array<const char*, kNumNuisances> names{
      "g_a", "g_astar", "qbar_a", "qbar_astar", "q_a_joint", "q_astar_joint", "q_a_m1", "q_a_m2", "q_astar_m1",
      "q_astar_m2"};
  return names[static_cast<std::size_t>(nuisance)];
}

std::string to_string(RobustnessCombo::Kind kind) {
  switch (kind) {
    case RobustnessCombo::Kind::theorem: return "theorem";
    case RobustnessCombo::Kind::corrected: return "corrected";
    case RobustnessCombo::Kind::negative_control: return "negative_control";
  }
  return "";
}

const std::vector<RobustnessCombo>& robustness_combos() {
  using N = Nuisance;
  using K = RobustnessCombo::Kind;
  static const std::vector<RobustnessCombo> combos{
      {"total.1", K::theorem, {kTotal}, {N::qbar_a, N::qbar_astar, N::q_a_joint, N::q_astar_joint}},
      {"total.2", K::theorem, {kTotal}, {N::g_a, N::g_astar}},
      {"direct.1", K::theorem, {kDirect}, {N::qbar_a, N::qbar_astar, N::g_astar}},
      {"direct.2", K::theorem, {kDirect}, {N::qbar_a, N::qbar_astar, N::q_a_joint, N::q_astar_joint}},
      {"direct.3", K::theorem, {kDirect}, {N::q_a_joint, N::q_astar_joint, N::g_astar, N::g_a}},
      {"indirect_m1.1", K::theorem, {kIndirectM1}, {N::qbar_a, N::q_a_m1, N::q_astar_m1, N::q_astar_m2}},
      {"indirect_m1.2", K::theorem, {kIndirectM1}, {N::g_a, N::g_astar, N::q_a_joint, N::q_astar_m1, N::q_astar_m2}},
      {"indirect_m1.3", K::theorem, {kIndirectM1}, {N::qbar_a, N::g_a, N::g_astar, N::q_astar_m2}},
      {"indirect_m1.4", K::theorem, {kIndirectM1}, {N::qbar_a, N::g_a, N::g_astar, N::q_a_m1}},
      {"indirect_m2.1", K::theorem, {kIndirectM2}, {N::qbar_a, N::q_a_m2, N::q_astar_m2, N::q_a_m1}},
      {"indirect_m2.2", K::theorem, {kIndirectM2}, {N::g_a, N::g_astar, N::q_a_joint, N::q_astar_m2}},
      {"indirect_m2.3", K::theorem, {kIndirectM2}, {N::qbar_a, N::g_a, N::g_astar, N::q_a_m1}},
      {"indirect_m2.4", K::theorem, {kIndirectM2}, {N::qbar_a, N::g_a, N::g_astar, N::q_a_m2}},
      {"covariant.1", K::theorem, {kCovariant}, {N::qbar_a, N::qbar_astar, N::q_a_joint, N::q_astar_joint}},
      {"covariant.2", K::theorem, {kCovariant},
       {N::g_a, N::g_astar, N::qbar_a, N::qbar_astar, N::q_a_m1, N::q_astar_m2}},
      {"covariant.3", K::theorem, {kCovariant}, {N::g_a, N::g_astar, N::q_a_joint, N::q_astar_m1, N::q_astar_m2}},
      // Repairs: the M1 one-step also needs Q_{a*,M1}, the M2 one needs Q_{a*,M2}, and the
      // covariant effect needs the whole a* joint rather than its two marginals.
      {"indirect_m1.4c", K::corrected, {kIndirectM1}, {N::qbar_a, N::g_a, N::g_astar, N::q_a_m1, N::q_astar_m1}},
      {"indirect_m2.4c", K::corrected, {kIndirectM2}, {N::qbar_a, N::g_a, N::g_astar, N::q_a_m2, N::q_astar_m2}},
      {"covariant.3c", K::corrected, {kCovariant}, {N::g_a, N::g_astar, N::q_a_joint, N::q_astar_joint}},
      {"all_corrupted", K::negative_control, {kTotal, kDirect, kIndirectM1, kIndirectM2, kCovariant}, {}},
  };
  return combos;
}

const RobustnessCombo& find_combo(const std::string& id) {
  for (const auto& c : robustness_combos()) {
    if (c.id == id) return c;
  }
  throw std::out_of_range("unknown robustness combination '" + id + "'");
}

CorruptedNuisances::CorruptedNuisances(DgpConfig config, std::vector<Nuisance> correct, double shift, double tilt)
    : truth_(std::move(config)), shift_(shift), tilt_(tilt) {
  if (truth_.config().t() != 2) throw std::invalid_argument("the robustness suite uses two mediators");
  for (Nuisance n : correct) correct_[static_cast<std::size_t>(n)] = true;
}

double CorruptedNuisances::treatment_probability(int arm, std::span<const double> c) const {
  const double g = truth_.treatment_probability(arm, c);
  const bool ok = is_correct(arm == 1 ? Nuisance::g_a : Nuisance::g_astar);
  return ok ? g : expit(logit(g) - shift_);
}

void CorruptedNuisances::outcome_grid(int arm, std::span<const double> c, std::span<double> out) const {
  truth_.outcome_grid(arm, c, out);
  if (is_correct(arm == 1 ? Nuisance::qbar_a : Nuisance::qbar_astar)) return;
  const double s = arm == 1 ? -shift_ : shift_;
  for (double& q : out) q = expit(logit(q) + s);
}

MediatorLaw CorruptedNuisances::mediator_law(int arm, std::span<const double> c) const {
  MediatorLaw law = truth_.mediator_law(arm, c);
  const bool joint_ok = is_correct(arm == 1 ? Nuisance::q_a_joint : Nuisance::q_astar_joint);
  if (joint_ok) return law;

  const auto& support = truth_.support();
  const int trunc = truth_.config().truncation;
  std::array<std::vector<double>, 2> shifted;
  for (std::size_t j = 0; j < 2; ++j) {
    shifted[j] = truncated_geometric_pmf(expit(logit(truth_.mediator_success(j, arm, c)) + shift_), trunc);
  }
  const std::size_t l2 = support.num_levels(1);
  const double centre = 0.5 * trunc;
  std::vector<double> joint(support.num_cells());
  double total = 0.0;
  for (std::size_t k1 = 0; k1 < support.num_levels(0); ++k1) {
    for (std::size_t k2 = 0; k2 < l2; ++k2) {
      const double assoc = std::exp(tilt_ * (support.levels[0][k1] - centre) * (support.levels[1][k2] - centre) /
                                    (centre * centre));
      joint[k1 * l2 + k2] = shifted[0][k1] * shifted[1][k2] * assoc;
      total += joint[k1 * l2 + k2];
    }
  }
  for (double& v : joint) v /= total;
  const auto corrupted = marginals_of(support, joint);
  const bool m1_ok = is_correct(arm == 1 ? Nuisance::q_a_m1 : Nuisance::q_astar_m1);
  const bool m2_ok = is_correct(arm == 1 ? Nuisance::q_a_m2 : Nuisance::q_astar_m2);
  law.joint = joint;
  if (!m1_ok) law.marginals[0] = corrupted[0];
  if (!m2_ok) law.marginals[1] = corrupted[1];
  return law;
}

EffectVector population_bias(const DgpConfig& config, const RobustnessCombo& combo, int nodes) {
  const AnalyticNuisances truth(config);
  const CorruptedNuisances model(config, combo.correct);
  const auto& support = truth.support();
  auto integrand = [&](double c1, double c2) {
    const std::array<double, 2> c{c1, c2};
    const auto p = evaluate_subject(truth, c);
    const auto s = evaluate_subject(model, c);
    const auto f = compute_functionals(s, support);
    const auto tf = compute_functionals(p, support);
    const auto psi = conditional_effects(tf);
    EffectVector v{};
    // EIFs are linear in y, so E[D | A, M, C] replaces y by the true Qbar.
    for (int arm = 0; arm <= 1; ++arm) {
      const auto a = static_cast<std::size_t>(arm);
      for (std::size_t cell = 0; cell < support.num_cells(); ++cell) {
        const double w = p.g[a] * p.law[a].joint[cell];
        const auto d = eif_row(s, f, support, arm, cell, p.qbar[a][cell]);
        for (std::size_t k = 0; k < kNumEffects; ++k) v[k] += w * d[k];
      }
    }
    for (std::size_t k = 0; k < kNumEffects; ++k) v[k] -= psi[k];
    return v;
  };
  return integrate_covariates(nodes, integrand);
}

RobustnessReport robustness_suite(const RobustnessConfig& config) {
  config.dgp.validate();
  if (config.replicates < 1) throw std::invalid_argument("need at least one replicate");
  std::vector<const RobustnessCombo*> combos;
  if (config.combos.empty()) {
    for (const auto& c : robustness_combos()) combos.push_back(&c);
  } else {
    for (const auto& id : config.combos) combos.push_back(&find_combo(id));
  }

  RobustnessReport report;
  report.truth = true_effects_oracle(config.dgp).effects;

  struct Result {
    bool ok = false;
    EffectVector estimate{};
  };
  const std::size_t reps = config.replicates;
  const std::size_t per_combo = config.sample_sizes.size() * reps;
  std::vector<Result> results(combos.size() * per_combo);
  std::vector<std::unique_ptr<CorruptedNuisances>> models;
  for (const auto* c : combos) models.push_back(std::make_unique<CorruptedNuisances>(config.dgp, c->correct));

  parallel_for(results.size(), resolve_threads(config.threads), [&](std::size_t task) {
    const std::size_t ci = task / per_combo;
    const std::size_t ni = (task % per_combo) / reps;
    const std::size_t r = task % reps;
    DgpConfig dgp = config.dgp;
    dgp.n = config.sample_sizes[ni];
    // Common random numbers across combinations: the same data sets for every combo.
    dgp.seed = derive_seed(config.seed, dgp.n, r);
    try {
      const auto table = draw_dgp(dgp);
      EstimatorOptions options;
      options.contrasts.clear();
      results[task].estimate = onestep(*models[ci], table, options).report.estimates;
      results[task].ok = true;
    } catch (const std::exception&) {
      results[task].ok = false;
    }
  });

  for (std::size_t ci = 0; ci < combos.size(); ++ci) {
    const auto& combo = *combos[ci];
    const auto pop = population_bias(config.dgp, combo);
    for (std::size_t effect : combo.effects) {
      RobustnessVerdict verdict;
      verdict.combo = combo.id;
      verdict.kind = combo.kind;
      verdict.effect = effect;
      verdict.population_bias = pop[effect];
      for (std::size_t ni = 0; ni < config.sample_sizes.size(); ++ni) {
        RobustnessRow row;
        row.combo = combo.id;
        row.kind = combo.kind;
        row.effect = effect;
        row.n = config.sample_sizes[ni];
        row.population_bias = pop[effect];
        double sum = 0.0, ss = 0.0;
        std::vector<double> errs;
        for (std::size_t r = 0; r < reps; ++r) {
          const auto& res = results[ci * per_combo + ni * reps + r];
          if (!res.ok) {
            ++row.failures;
            continue;
          }
          errs.push_back(res.estimate[effect] - report.truth[effect]);
          sum += errs.back();
        }
        row.replicates = errs.size();
        if (!errs.empty()) {
          row.bias = sum / static_cast<double>(errs.size());
          for (double e : errs) ss += (e - row.bias) * (e - row.bias);
          row.sd = std::sqrt(ss / static_cast<double>(errs.size()));
          row.mc_se = row.sd / std::sqrt(static_cast<double>(errs.size()));
        }
        report.rows.push_back(row);
        if (ni + 1 == config.sample_sizes.size()) verdict.bias_at_largest_n = row.bias;
      }
      const double b = std::abs(verdict.bias_at_largest_n);
      verdict.pass = combo.kind == RobustnessCombo::Kind::negative_control ? b >= config.control_bias
                                                                            : b <= config.pass_bias;
      report.verdicts.push_back(verdict);
    }
  }
  return report;
}

}  // namespace medfx
