#pragma once

// Brute-force oracles shared by the unit tests. Nothing here calls library code apart
// from the plain data structures it fills in; effects are enumerated from their
// definitions and influence functions are numerical Gateaux derivatives.

#include "medfx/data.hpp"
#include "medfx/nuisance.hpp"

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace oracle {

/// A fully discrete law of O = (C, A, M_1..M_t, Y) with Y binary, stored as a pmf.
/// Index layout: ((c * 2 + a) * cells + cell) * 2 + y, cells row-major (last mediator fastest).
struct World {
  std::vector<double> c_values;
  std::vector<std::size_t> levels;
  std::vector<double> pmf;

  std::size_t cells() const {
    std::size_t k = 1;
    for (auto l : levels) k *= l;
    return k;
  }
  std::size_t index(std::size_t c, int a, std::size_t cell, int y) const {
    return ((c * 2 + static_cast<std::size_t>(a)) * cells() + cell) * 2 + static_cast<std::size_t>(y);
  }
  std::vector<std::size_t> unravel(std::size_t cell) const {
    std::vector<std::size_t> m(levels.size());
    for (std::size_t j = levels.size(); j-- > 0;) {
      m[j] = cell % levels[j];
      cell /= levels[j];
    }
    return m;
  }

  double p_c(std::size_t c) const {
    double s = 0;
    for (int a = 0; a < 2; ++a)
      for (std::size_t k = 0; k < cells(); ++k)
        for (int y = 0; y < 2; ++y) s += pmf[index(c, a, k, y)];
    return s;
  }
  double p_ca(std::size_t c, int a) const {
    double s = 0;
    for (std::size_t k = 0; k < cells(); ++k)
      for (int y = 0; y < 2; ++y) s += pmf[index(c, a, k, y)];
    return s;
  }
  double g(std::size_t c, int a) const { return p_ca(c, a) / p_c(c); }
  double q(std::size_t c, int a, std::size_t cell) const {
    return (pmf[index(c, a, cell, 0)] + pmf[index(c, a, cell, 1)]) / p_ca(c, a);
  }
  /// Marginal of mediator j under arm a at level l.
  double q_marginal(std::size_t c, int a, std::size_t j, std::size_t l) const {
    double s = 0;
    for (std::size_t k = 0; k < cells(); ++k) {
      if (unravel(k)[j] == l) s += q(c, a, k);
    }
    return s;
  }
  double qbar(std::size_t c, int a, std::size_t cell) const {
    const double m = pmf[index(c, a, cell, 0)] + pmf[index(c, a, cell, 1)];
    return pmf[index(c, a, cell, 1)] / m;
  }
};

/// Random world with every cell strictly positive.
inline World random_world(std::vector<std::size_t> levels, std::size_t num_c, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  World w;
  w.levels = std::move(levels);
  for (std::size_t c = 0; c < num_c; ++c) w.c_values.push_back(0.1 + 0.3 * static_cast<double>(c));
  w.pmf.resize(num_c * 2 * w.cells() * 2);
  double total = 0;
  for (auto& p : w.pmf) total += (p = u(gen));
  for (auto& p : w.pmf) p /= total;
  return w;
}

/// E_C[ sum_m Qbar(qbar_arm, m, C) prod_j q_j(m_j | arms[j], C) ].
inline double product_functional(const World& w, int qbar_arm, const std::vector<int>& arms) {
  double psi = 0;
  for (std::size_t c = 0; c < w.c_values.size(); ++c) {
    double inner = 0;
    for (std::size_t k = 0; k < w.cells(); ++k) {
      const auto m = w.unravel(k);
      double mass = 1;
      for (std::size_t j = 0; j < m.size(); ++j) mass *= w.q_marginal(c, arms[j], j, m[j]);
      inner += w.qbar(c, qbar_arm, k) * mass;
    }
    psi += w.p_c(c) * inner;
  }
  return psi;
}

inline double joint_functional(const World& w, int qbar_arm, int law_arm) {
  double psi = 0;
  for (std::size_t c = 0; c < w.c_values.size(); ++c) {
    double inner = 0;
    for (std::size_t k = 0; k < w.cells(); ++k) inner += w.qbar(c, qbar_arm, k) * w.q(c, law_arm, k);
    psi += w.p_c(c) * inner;
  }
  return psi;
}

/// Two-mediator effects straight from the definitions: total, direct, M1, M2, covariant.
inline std::vector<double> effects(const World& w) {
  const double own_a = joint_functional(w, 1, 1);
  const double own_s = joint_functional(w, 0, 0);
  const double cross = joint_functional(w, 1, 0);
  const double x = product_functional(w, 1, {1, 0});
  const double y = product_functional(w, 1, {0, 0});
  const double z = product_functional(w, 1, {1, 1});
  const double total = own_a - own_s, direct = cross - own_s, m1 = x - y, m2 = z - x;
  return {total, direct, m1, m2, total - direct - m1 - m2};
}

/// Ratio numerator psi(a; M1 under a, M2 under a*) and denominator psi(a; both under a*).
inline std::vector<double> ratio_parts(const World& w) {
  return {product_functional(w, 1, {1, 0}), product_functional(w, 1, {0, 0})};
}

/// t-mediator effects: direct, then indirect through each mediator s. The indirect effect
/// moves M_s from a* to a with M_u under a for u < s and under a* for u > s.
inline std::vector<double> multi_effects(const World& w) {
  const std::size_t t = w.levels.size();
  std::vector<double> out{joint_functional(w, 1, 0) - joint_functional(w, 0, 0)};
  for (std::size_t s = 0; s < t; ++s) {
    std::vector<int> hi(t), lo(t);
    for (std::size_t u = 0; u < t; ++u) hi[u] = lo[u] = u < s ? 1 : 0;
    hi[s] = 1;
    out.push_back(product_functional(w, 1, hi) - product_functional(w, 1, lo));
  }
  return out;
}

/// d/de Psi((1 - e) P + e delta_o) at e = 0: central differences at h and h/2 combined by
/// Richardson extrapolation (error O(h^4) relative to the point's mass).
template <class Psi>
std::vector<double> gateaux(const World& w, std::size_t c, int a, std::size_t cell, int y, Psi&& psi,
                            double h = 1e-4) {
  auto shifted = [&](double e) {
    World v = w;
    for (auto& p : v.pmf) p *= 1 - e;
    v.pmf[w.index(c, a, cell, y)] += e;
    return psi(v);
  };
  const auto up = shifted(h), down = shifted(-h), up2 = shifted(h / 2), down2 = shifted(-h / 2);
  std::vector<double> d(up.size());
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double coarse = (up[k] - down[k]) / (2 * h), fine = (up2[k] - down2[k]) / h;
    d[k] = (4 * fine - coarse) / 3;
  }
  return d;
}

inline medfx::MediatorSupport support_of(const World& w) {
  medfx::MediatorSupport s;
  for (auto l : w.levels) {
    std::vector<int> v(l);
    for (std::size_t k = 0; k < l; ++k) v[k] = static_cast<int>(k);
    s.levels.push_back(v);
    s.bin_edges.emplace_back();
  }
  return s;
}

/// The world's true nuisances at covariate level c.
inline medfx::SubjectNuisance subject(const World& w, std::size_t c) {
  medfx::SubjectNuisance s;
  for (int a = 0; a < 2; ++a) {
    s.g[a] = w.g(c, a);
    for (std::size_t k = 0; k < w.cells(); ++k) {
      s.qbar[a].push_back(w.qbar(c, a, k));
      s.law[a].joint.push_back(w.q(c, a, k));
    }
    for (std::size_t j = 0; j < w.levels.size(); ++j) {
      std::vector<double> marg;
      for (std::size_t l = 0; l < w.levels[j]; ++l) marg.push_back(w.q_marginal(c, a, j, l));
      s.law[a].marginals.push_back(marg);
    }
  }
  return s;
}

/// One row per support point of the world (c, a, cell, y), in pmf order.
struct Enumerated {
  medfx::ObservationTable table;
  std::vector<medfx::SubjectNuisance> subjects;
  std::vector<std::size_t> c_index;
};

inline Enumerated enumerate(const World& w) {
  Enumerated e;
  const std::size_t n = w.pmf.size(), t = w.levels.size();
  e.table.covariates.resize(static_cast<Eigen::Index>(n), 1);
  e.table.mediators.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t));
  e.table.outcome.resize(static_cast<Eigen::Index>(n));
  e.table.support = support_of(w);
  for (std::size_t j = 0; j < t; ++j) e.table.mediator_names.push_back("m" + std::to_string(j + 1));
  e.table.covariate_names = {"c"};
  std::size_t row = 0;
  for (std::size_t c = 0; c < w.c_values.size(); ++c) {
    const auto s = subject(w, c);
    for (int a = 0; a < 2; ++a) {
      for (std::size_t k = 0; k < w.cells(); ++k) {
        const auto m = w.unravel(k);
        for (int y = 0; y < 2; ++y, ++row) {
          const auto r = static_cast<Eigen::Index>(row);
          e.table.covariates(r, 0) = w.c_values[c];
          e.table.treatment.push_back(a);
          for (std::size_t j = 0; j < t; ++j) e.table.mediators(r, static_cast<Eigen::Index>(j)) = static_cast<int>(m[j]);
          e.table.outcome[r] = y;
          e.subjects.push_back(s);
          e.c_index.push_back(c);
        }
      }
    }
  }
  return e;
}

inline double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Population SD (divisor n).
inline double sd(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace oracle
