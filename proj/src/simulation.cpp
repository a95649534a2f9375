#include "medfx/simulation.hpp"

#include "medfx/density.hpp"
#include "medfx/functionals.hpp"
#include "medfx/multimediator.hpp"
#include "medfx/numeric.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace medfx {

void DgpConfig::validate() const {
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  if (truncation < 1) throw std::invalid_argument("truncation level must be at least 1");
  if (mediators.size() < 2) throw std::invalid_argument("the DGP needs at least two mediators");
  if (y_m.size() != mediators.size()) throw std::invalid_argument("one outcome coefficient per mediator required");
  auto finite = [](double v) { return std::isfinite(v); };
  bool ok = finite(g_intercept) && finite(g_c1) && finite(g_c2) && finite(y_intercept) && finite(y_c1) &&
            finite(y_c2) && finite(y_a);
  for (const auto& m : mediators) ok = ok && finite(m.intercept) && finite(m.c1) && finite(m.a);
  for (double b : y_m) ok = ok && finite(b);
  if (!ok) throw std::invalid_argument("DGP coefficients must be finite");
}

DgpConfig DgpConfig::paper(std::size_t t) {
  DgpConfig c;
  if (t == 3) {
    c.mediators.push_back({-1.0, 0.25, 0.3});
    c.y_m.push_back(0.5);
  } else if (t != 2) {
    throw std::invalid_argument("the reference DGP is defined for t = 2 or 3");
  }
  return c;
}

DgpConfig DgpConfig::null_world() const {
  DgpConfig c = *this;
  for (auto& m : c.mediators) m.a = 0.0;
  c.y_a = 0.0;
  return c;
}

std::vector<double> truncated_geometric_pmf(double p, int truncation) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("geometric success probability must lie in (0, 1]");
  std::vector<double> pmf(static_cast<std::size_t>(truncation) + 1);
  double tail = 1.0;  // (1-p)^k
  for (int k = 0; k < truncation; ++k) {
    pmf[static_cast<std::size_t>(k)] = tail * p;
    tail *= 1.0 - p;
  }
  pmf.back() = tail;
  return pmf;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(master) ^ a) ^ b);
}

int Rng::discrete(const std::vector<double>& pmf) {
  const double u = uniform();
  double cum = 0.0;
  for (std::size_t k = 0; k + 1 < pmf.size(); ++k) {
    cum += pmf[k];
    if (u < cum) return static_cast<int>(k);
  }
  return static_cast<int>(pmf.size()) - 1;
}

namespace {

double mediator_p(const DgpConfig& cfg, std::size_t j, int arm, double c1) {
  const auto& m = cfg.mediators[j];
  return expit(m.intercept + m.c1 * c1 + m.a * arm);
}

double outcome_mean(const DgpConfig& cfg, int arm, double c1, double c2, const std::vector<int>& m) {
  double eta = cfg.y_intercept + cfg.y_c1 * c1 + cfg.y_c2 * c2 + cfg.y_a * arm;
  for (std::size_t j = 0; j < m.size(); ++j) eta += cfg.y_m[j] * m[j];
  return expit(eta);
}

MediatorSupport dgp_support(const DgpConfig& cfg) {
  MediatorSupport s;
  std::vector<int> levels(static_cast<std::size_t>(cfg.truncation) + 1);
  for (int k = 0; k <= cfg.truncation; ++k) levels[static_cast<std::size_t>(k)] = k;
  s.levels.assign(cfg.t(), levels);
  s.bin_edges.assign(cfg.t(), std::nullopt);
  return s;
}

}  // namespace

ObservationTable draw_dgp(const DgpConfig& config) {
  config.validate();
  const std::size_t t = config.t();
  const auto n = static_cast<Eigen::Index>(config.n);
  RawData raw;
  raw.covariates.resize(n, 2);
  raw.treatment.resize(n);
  raw.mediators.resize(n, static_cast<Eigen::Index>(t));
  raw.outcome.resize(n);
  raw.covariate_names = {"c1", "c2"};
  for (std::size_t j = 0; j < t; ++j) raw.mediator_names.push_back("m" + std::to_string(j + 1));

  Rng rng(config.seed);
  std::vector<int> m(t);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c1 = rng.uniform();
    const double c2 = rng.uniform();
    const int a = rng.bernoulli(expit(config.g_intercept + config.g_c1 * c1 + config.g_c2 * c2)) ? 1 : 0;
    for (std::size_t j = 0; j < t; ++j) {
      m[j] = rng.discrete(truncated_geometric_pmf(mediator_p(config, j, a, c1), config.truncation));
    }
    const int y = rng.bernoulli(outcome_mean(config, a, c1, c2, m)) ? 1 : 0;
    raw.covariates(i, 0) = c1;
    raw.covariates(i, 1) = c2;
    raw.treatment[i] = a;
    for (std::size_t j = 0; j < t; ++j) raw.mediators(i, static_cast<Eigen::Index>(j)) = m[j];
    raw.outcome[i] = y;
  }

  SupportSpec spec;
  const auto support = dgp_support(config);
  for (const auto& levels : support.levels) spec.levels.emplace_back(levels);
  spec.bin_edges.assign(t, std::nullopt);
  spec.y_min = 0.0;
  spec.y_max = 1.0;
  return validate_dataset(raw, spec);
}

AnalyticNuisances::AnalyticNuisances(DgpConfig config) : config_(std::move(config)), support_(dgp_support(config_)) {
  config_.validate();
}

double AnalyticNuisances::treatment_probability(int arm, std::span<const double> c) const {
  const double g1 = expit(config_.g_intercept + config_.g_c1 * c[0] + config_.g_c2 * c[1]);
  return arm == 1 ? g1 : 1.0 - g1;
}

double AnalyticNuisances::mediator_success(std::size_t j, int arm, std::span<const double> c) const {
  return mediator_p(config_, j, arm, c[0]);
}

void AnalyticNuisances::outcome_grid(int arm, std::span<const double> c, std::span<double> out) const {
  const auto strides = cell_strides(support_);
  std::vector<int> m(config_.t());
  for (std::size_t cell = 0; cell < out.size(); ++cell) {
    for (std::size_t j = 0; j < m.size(); ++j) m[j] = static_cast<int>((cell / strides[j]) % support_.num_levels(j));
    out[cell] = outcome_mean(config_, arm, c[0], c[1], m);
  }
}

MediatorLaw AnalyticNuisances::mediator_law(int arm, std::span<const double> c) const {
  MediatorLaw law;
  for (std::size_t j = 0; j < config_.t(); ++j) {
    law.marginals.push_back(truncated_geometric_pmf(mediator_success(j, arm, c), config_.truncation));
  }
  const auto strides = cell_strides(support_);
  law.joint.assign(support_.num_cells(), 1.0);
  for (std::size_t cell = 0; cell < law.joint.size(); ++cell) {
    for (std::size_t j = 0; j < config_.t(); ++j) {
      law.joint[cell] *= law.marginals[j][(cell / strides[j]) % support_.num_levels(j)];
    }
  }
  return law;
}

namespace {

template <std::size_t N>
std::vector<std::pair<double, double>> expand_rule() {
  using rule = boost::math::quadrature::gauss<double, N>;
  const auto& x = rule::abscissa();
  const auto& w = rule::weights();
  std::vector<std::pair<double, double>> out;
  for (std::size_t k = 0; k < x.size(); ++k) {
    out.emplace_back(0.5 * (1.0 + x[k]), 0.5 * w[k]);
    if (x[k] != 0.0) out.emplace_back(0.5 * (1.0 - x[k]), 0.5 * w[k]);
  }
  return out;
}

}  // namespace

std::vector<std::pair<double, double>> gauss_legendre_unit(int nodes) {
  switch (nodes) {
    case 10: return expand_rule<10>();
    case 20: return expand_rule<20>();
    case 40: return expand_rule<40>();
    case 80: return expand_rule<80>();
    default: throw std::invalid_argument("Gauss-Legendre rule available for 10, 20, 40 or 80 nodes");
  }
}

TruthReport true_effects_oracle(const DgpConfig& config) {
  const AnalyticNuisances model(config);
  const std::size_t t = config.t();
  const auto& support = model.support();
  // Layout: total, direct, M1, M2, covariant, x, y, multi direct, multi indirect 1..t.
  auto integrand = [&](double c1, double c2) {
    const std::array<double, 2> c{c1, c2};
    const auto s = evaluate_subject(model, c);
    std::vector<double> v(7, 0.0);
    if (t == 2) {
      const auto f = compute_functionals(s, support);
      const auto e = conditional_effects(f);
      for (std::size_t k = 0; k < kNumEffects; ++k) v[k] = e[k];
      v[5] = f.x;
      v[6] = f.y;
    } else {
      for (std::size_t k = 0; k < s.qbar[1].size(); ++k) {
        v[kTotal] += s.qbar[1][k] * s.law[1].joint[k] - s.qbar[0][k] * s.law[0].joint[k];
      }
    }
    const auto multi = multi_conditional_effects(s, support);
    v.insert(v.end(), multi.begin(), multi.end());
    return v;
  };

  TruthReport r;
  std::vector<double> previous;
  std::vector<double> current;
  for (int nodes : {10, 20, 40, 80}) {
    current = integrate_covariates(nodes, integrand);
    r.nodes = nodes;
    if (!previous.empty()) {
      double change = 0.0;
      for (std::size_t k = 0; k < current.size(); ++k) change = std::max(change, std::abs(current[k] - previous[k]));
      r.refinement_change = change;
      if (change < 1e-8) break;
    }
    previous = current;
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.multi_direct = current[7];
  r.multi_indirect.assign(current.begin() + 8, current.end());
  if (t == 2) {
    for (std::size_t k = 0; k < kNumEffects; ++k) r.effects[k] = current[k];
    r.ratio_numerator = current[5];
    r.ratio_denominator = current[6];
    r.ratio = current[5] / current[6];
  } else {
    r.effects = {current[kTotal], r.multi_direct, nan, nan, nan};
    r.ratio_numerator = r.ratio_denominator = r.ratio = nan;
  }
  return r;
}

}  // namespace medfx
