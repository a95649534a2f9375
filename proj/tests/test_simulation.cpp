#include "oracle.hpp"

#include "medfx/simulation.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace medfx;

namespace {

// Independent truth: midpoint rule over C, explicit sums over the mediators, using the
// generating formulas written out again here.
struct Truth {
  std::vector<double> two;    // total, direct, m1, m2, covariant (t = 2)
  std::vector<double> multi;  // direct, indirect per mediator
  double ratio = 0;
};

std::vector<double> geometric(double p, int trunc) {
  std::vector<double> out;
  for (int k = 0; k < trunc; ++k) out.push_back(std::pow(1 - p, k) * p);
  out.push_back(std::pow(1 - p, trunc));
  return out;
}

Truth midpoint_truth(const DgpConfig& cfg, int grid = 200) {
  const std::size_t t = cfg.t();
  const int L = cfg.truncation + 1;
  std::size_t cells = 1;
  for (std::size_t j = 0; j < t; ++j) cells *= static_cast<std::size_t>(L);
  // functional(qbar_arm, arms per mediator)
  auto functional = [&](double c1, double c2, int qarm, const std::vector<int>& arms) {
    std::vector<std::vector<double>> marg(t);
    for (std::size_t j = 0; j < t; ++j) {
      const auto& m = cfg.mediators[j];
      marg[j] = geometric(oracle::expit(m.intercept + m.c1 * c1 + m.a * arms[j]), cfg.truncation);
    }
    double s = 0;
    for (std::size_t cell = 0; cell < cells; ++cell) {
      std::size_t rest = cell;
      double eta = cfg.y_intercept + cfg.y_c1 * c1 + cfg.y_c2 * c2 + cfg.y_a * qarm, mass = 1;
      for (std::size_t j = t; j-- > 0;) {
        const int k = static_cast<int>(rest % static_cast<std::size_t>(L));
        rest /= static_cast<std::size_t>(L);
        eta += cfg.y_m[j] * k;
        mass *= marg[j][static_cast<std::size_t>(k)];
      }
      s += oracle::expit(eta) * mass;
    }
    return s;
  };
  Truth out;
  out.two.assign(5, 0.0);
  out.multi.assign(t + 1, 0.0);
  double num = 0, den = 0;
  const double h = 1.0 / grid;
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      const double c1 = (i + 0.5) * h, c2 = (j + 0.5) * h, w = h * h;
      const std::vector<int> all_a(t, 1), all_s(t, 0);
      // mediators are independent given (A, C), so joint laws are products
      const double own_a = functional(c1, c2, 1, all_a), own_s = functional(c1, c2, 0, all_s);
      const double cross = functional(c1, c2, 1, all_s);
      out.multi[0] += w * (cross - own_s);
      for (std::size_t s = 0; s < t; ++s) {
        std::vector<int> hi(t), lo(t);
        for (std::size_t u = 0; u < t; ++u) hi[u] = lo[u] = u < s ? 1 : 0;
        hi[s] = 1;
        out.multi[s + 1] += w * (functional(c1, c2, 1, hi) - functional(c1, c2, 1, lo));
      }
      if (t == 2) {
        const double x = functional(c1, c2, 1, {1, 0}), y = functional(c1, c2, 1, {0, 0});
        const double z = functional(c1, c2, 1, {1, 1});
        out.two[0] += w * (own_a - own_s);
        out.two[1] += w * (cross - own_s);
        out.two[2] += w * (x - y);
        out.two[3] += w * (z - x);
        num += w * x;
        den += w * y;
      }
    }
  }
  out.two[4] = out.two[0] - out.two[1] - out.two[2] - out.two[3];
  out.ratio = num / den;
  return out;
}

}  // namespace

TEST_SUITE("simulation") {

TEST_CASE("truncated geometric") {
  const auto pmf = truncated_geometric_pmf(0.3, 5);
  REQUIRE(pmf.size() == 6);
  CHECK(pmf[0] == doctest::Approx(0.3));
  CHECK(pmf[2] == doctest::Approx(0.49 * 0.3));
  CHECK(pmf[5] == doctest::Approx(std::pow(0.7, 5)));
  CHECK(std::accumulate(pmf.begin(), pmf.end(), 0.0) == doctest::Approx(1.0));
  CHECK_THROWS(truncated_geometric_pmf(0.0, 5));
}

TEST_CASE("truth oracle against an independent midpoint-rule enumeration") {
  const auto truth = true_effects_oracle(DgpConfig::paper());
  const auto mine = midpoint_truth(DgpConfig::paper());
  for (std::size_t k = 0; k < 5; ++k) CHECK(truth.effects[k] == doctest::Approx(mine.two[k]).epsilon(1e-4));
  CHECK(std::abs(truth.effects[kCovariant]) < 1e-12);
  CHECK(truth.ratio == doctest::Approx(mine.ratio).epsilon(1e-5));
  CHECK(truth.ratio == doctest::Approx(truth.ratio_numerator / truth.ratio_denominator));
  CHECK(truth.refinement_change < 1e-8);
}

TEST_CASE("published effect sizes") {
  // Rounded values reported for the reference design: 0.10, 0.15, -0.02, -0.03, 0.
  const auto truth = true_effects_oracle(DgpConfig::paper());
  const double published[5] = {0.10, 0.15, -0.02, -0.03, 0.0};
  for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(truth.effects[k] - published[k]) <= 0.005);
}

TEST_CASE("three-mediator truth") {
  const auto cfg = DgpConfig::paper(3);
  const auto truth = true_effects_oracle(cfg);
  const auto mine = midpoint_truth(cfg, 120);
  CHECK(truth.multi_direct == doctest::Approx(mine.multi[0]).epsilon(1e-4));
  for (std::size_t s = 0; s < 3; ++s) CHECK(truth.multi_indirect[s] == doctest::Approx(mine.multi[s + 1]).epsilon(1e-4));
}

TEST_CASE("null world has no effects") {
  const auto truth = true_effects_oracle(DgpConfig::paper().null_world());
  for (double e : truth.effects) CHECK(std::abs(e) < 1e-12);
}

TEST_CASE("draws are deterministic and follow the design") {
  DgpConfig cfg;
  cfg.n = 40000;
  cfg.seed = 99;
  const auto a = draw_dgp(cfg);
  const auto b = draw_dgp(cfg);
  CHECK(a == b);
  cfg.seed = 100;
  CHECK_FALSE(a == draw_dgp(cfg));

  // P(A = 1) = E[expit(-1 + c1 + c2)]
  double pa = 0;
  const int grid = 400;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) pa += oracle::expit(-1 + (i + 0.5) / grid + (j + 0.5) / grid) / (grid * grid);
  const double freq = std::accumulate(a.treatment.begin(), a.treatment.end(), 0.0) / 40000.0;
  CHECK(std::abs(freq - pa) < 4 * std::sqrt(pa * (1 - pa) / 40000.0));
  CHECK(a.support.levels[0] == std::vector<int>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
  CHECK(derive_seed(1, 2) != derive_seed(2, 2));
  Rng rng(5);
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 30000; ++i) ++counts[static_cast<std::size_t>(rng.discrete({0.2, 0.5, 0.3}))];
  CHECK(counts[1] / 30000.0 == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("Monte Carlo harness: determinism, thread invariance, failure isolation") {
  MonteCarloConfig mc;
  mc.sample_sizes = {200};
  mc.replicates = 6;
  mc.seed = 17;
  mc.methods = {Method::one_step, Method::tmle};
  const auto one = run_monte_carlo(mc);
  mc.threads = 3;
  const auto three = run_monte_carlo(mc);
  REQUIRE(one.records.size() == 12);
  for (std::size_t i = 0; i < one.records.size(); ++i) {
    CHECK(one.records[i].estimate == three.records[i].estimate);
    CHECK(one.records[i].seed == three.records[i].seed);
  }
  const auto& cell = one.cell(Method::one_step, 200, kTotal);
  std::vector<double> est;
  for (const auto& r : one.records)
    if (r.method == Method::one_step && r.ok) est.push_back(r.estimate[kTotal]);
  CHECK(cell.mean == doctest::Approx(oracle::mean(est)));
  CHECK(cell.sd == doctest::Approx(oracle::sd(est)));
  CHECK(cell.bias == doctest::Approx(oracle::mean(est) - one.truth.effects[kTotal]));

  // Tiny samples run through; a cell cap below the 36-cell support makes every fit throw,
  // and the run must still finish and count the failures.
  mc.sample_sizes = {3};
  mc.replicates = 8;
  const auto tiny = run_monte_carlo(mc);
  for (const auto& r : tiny.records) CHECK(r.ok);
  mc.sample_sizes = {100};
  mc.nuisance.density.cell_cap = 10;
  const auto broken = run_monte_carlo(mc);
  CHECK(broken.records.size() == 16);
  for (const auto& r : broken.records) CHECK_FALSE(r.ok);
  CHECK(broken.cell(Method::tmle, 100, kTotal).failures == 8);
  CHECK(broken.cell(Method::tmle, 100, kTotal).replicates == 0);
}

TEST_CASE("corrupted nuisances with everything correct are the truth") {
  const DgpConfig cfg;
  std::vector<Nuisance> all;
  for (std::size_t k = 0; k < kNumNuisances; ++k) all.push_back(static_cast<Nuisance>(k));
  const CorruptedNuisances same(cfg, all);
  const AnalyticNuisances truth(cfg);
  const std::vector<double> c{0.3, 0.6};
  for (int a = 0; a < 2; ++a) {
    CHECK(same.treatment_probability(a, c) == truth.treatment_probability(a, c));
    const auto l1 = same.mediator_law(a, c), l2 = truth.mediator_law(a, c);
    for (std::size_t k = 0; k < l1.joint.size(); ++k) CHECK(l1.joint[k] == doctest::Approx(l2.joint[k]));
  }
  const CorruptedNuisances none(cfg, {});
  CHECK(none.treatment_probability(1, c) != doctest::Approx(truth.treatment_probability(1, c)));
  const auto tilted = none.mediator_law(1, c);
  CHECK(std::accumulate(tilted.joint.begin(), tilted.joint.end(), 0.0) == doctest::Approx(1.0));
}

TEST_CASE("population bias of the robustness combinations") {
  const DgpConfig cfg;
  for (const auto& combo : robustness_combos()) {
    const auto bias = population_bias(cfg, combo, 20);
    if (combo.kind == RobustnessCombo::Kind::negative_control) {
      for (double b : bias) CHECK(std::abs(b) >= 0.02);
      continue;
    }
    for (std::size_t e : combo.effects) {
      const bool listed_but_insufficient =
          combo.id == "indirect_m1.4" || combo.id == "indirect_m2.4" || combo.id == "covariant.3";
      INFO(combo.id, " effect ", e, " bias ", bias[e]);
      if (listed_but_insufficient) {
        CHECK(std::abs(bias[e]) > 0.01);
      } else {
        CHECK(std::abs(bias[e]) < 1e-10);
      }
    }
  }
}

}
