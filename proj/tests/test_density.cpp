#include "medfx/density.hpp"
#include "medfx/simulation.hpp"

#include <doctest.h>

#include <numeric>

using namespace medfx;

TEST_SUITE("density") {

TEST_CASE("hazards to a density") {
  const auto q = density_from_hazards(std::vector<double>{0.5, 0.5, 0.5});
  CHECK(q[0] == doctest::Approx(4.0 / 7.0));
  CHECK(q[1] == doctest::Approx(2.0 / 7.0));
  CHECK(q[2] == doctest::Approx(1.0 / 7.0));
  const auto top = density_from_hazards(std::vector<double>{0.2, 0.5, 1.0});
  CHECK(top[0] == doctest::Approx(0.2));
  CHECK(top[1] == doctest::Approx(0.4));
  CHECK(top[2] == doctest::Approx(0.4));
  CHECK_THROWS_AS(density_from_hazards(std::vector<double>{0.0, 0.0}), DataError);
}

TEST_CASE("floor and renormalize") {
  std::vector<double> p{0.9, 0.08, 0.015, 0.005};
  floor_and_renormalize(p, 0.02);
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0));
  for (double v : p) CHECK(v >= 0.02 - 1e-15);
  CHECK(p[2] == 0.02);
  CHECK(p[3] == 0.02);
  CHECK(p[0] / p[1] == doctest::Approx(0.9 / 0.08));
}

TEST_CASE("long form expansion") {
  DgpConfig cfg;
  cfg.n = 50;
  cfg.seed = 4;
  const auto t = draw_dgp(cfg);
  const auto lf = expand_long_form(t, LongFormKind::m1_given_m2);
  std::size_t expected = 0;
  for (std::size_t i = 0; i < t.size(); ++i) expected += static_cast<std::size_t>(t.mediator_level(i, 0)) + 1;
  CHECK(lf.size() == expected);
  CHECK(lf.mediator == 0);
  CHECK(lf.conditioning == std::vector<std::size_t>{1});
  for (std::size_t r = 0; r < lf.size(); ++r) {
    const int observed = t.mediator_level(lf.parent_row[r], 0);
    CHECK(lf.event[r] == (lf.bin[r] == observed ? 1 : 0));
  }
}

TEST_CASE("correctly specified hazards recover the generating law") {
  // The truncated geometric has a constant hazard whose logit is linear in (c, a).
  DgpConfig cfg;
  cfg.n = 20000;
  cfg.seed = 8;
  const auto table = draw_dgp(cfg);
  const auto model = fit_mediator_density(table, LearnerSpec{}, DensityOptions{});
  const AnalyticNuisances truth(cfg);
  double worst = 0;
  for (int a = 0; a < 2; ++a) {
    for (double c1 : {0.2, 0.8}) {
      const std::vector<double> c{c1, 0.5};
      const auto fitted = model.law(a, c);
      const auto exact = truth.mediator_law(a, c);
      for (std::size_t k = 0; k < exact.joint.size(); ++k) worst = std::max(worst, std::abs(fitted.joint[k] - exact.joint[k]));
      CHECK(std::accumulate(fitted.joint.begin(), fitted.joint.end(), 0.0) == doctest::Approx(1.0));
    }
  }
  CHECK(worst < 0.02);
}

TEST_CASE("cell cap") {
  DgpConfig cfg;
  cfg.n = 30;
  const auto table = draw_dgp(cfg);
  DensityOptions opt;
  opt.cell_cap = 10;
  CHECK_THROWS_AS(fit_mediator_density(table, LearnerSpec{}, opt), DataError);
}

}
