#include "oracle.hpp"

#include "medfx/eif.hpp"
#include "medfx/functionals.hpp"
#include "medfx/multimediator.hpp"
#include "medfx/simulation.hpp"

#include <doctest.h>

using namespace medfx;

TEST_SUITE("multimediator") {

TEST_CASE("arm split around the target mediator") {
  CHECK(split_arms(3, 2, 1) == std::vector<int>{1, 1, 0});
  CHECK(split_arms(3, 2, 0) == std::vector<int>{1, 0, 0});
  CHECK(split_arms(2, 1, 1) == std::vector<int>{1, 0});
  CHECK(split_arms(2, 2, 0) == std::vector<int>{1, 0});
}

TEST_CASE("three-mediator conditional effects match enumeration") {
  const auto w = oracle::random_world({2, 3, 2}, 1, 31);
  const auto got = multi_conditional_effects(oracle::subject(w, 0), oracle::support_of(w));
  const auto truth = oracle::multi_effects(w);
  REQUIRE(got.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) CHECK(got[k] == doctest::Approx(truth[k]).epsilon(1e-12));
}

TEST_CASE("three-mediator influence functions equal Gateaux derivatives") {
  const auto w = oracle::random_world({2, 3, 2}, 2, 32);
  const auto en = oracle::enumerate(w);
  std::vector<MultiEffectResult> results{onestep_multi_direct(en.subjects, en.table)};
  for (std::size_t s = 1; s <= 3; ++s) results.push_back(onestep_multi_indirect(en.subjects, s, en.table));

  // The library centres each column at its own estimate; differences between rows cancel that.
  std::vector<std::vector<double>> num;
  for (std::size_t c = 0; c < 2; ++c)
    for (int a = 0; a < 2; ++a)
      for (std::size_t k = 0; k < w.cells(); ++k)
        for (int y = 0; y < 2; ++y) num.push_back(oracle::gateaux(w, c, a, k, y, oracle::multi_effects));
  double worst = 0;
  for (std::size_t e = 0; e < 4; ++e) {
    const auto& eif = results[e].eif;
    for (std::size_t i = 1; i < num.size(); ++i) {
      const double lib = eif[static_cast<Eigen::Index>(i)] - eif[0];
      worst = std::max(worst, std::abs(lib - (num[i][e] - num[0][e])));
    }
  }
  CHECK(worst < 1e-7);
}

TEST_CASE("two-mediator special case agrees with the dedicated influence functions") {
  const auto w = oracle::random_world({3, 2}, 2, 33);
  const auto en = oracle::enumerate(w);
  const auto marginalized = compute_functionals(en.subjects, en.table.support);
  const auto plugin = plugin_effects(marginalized);
  const auto eifs = eval_eifs(en.subjects, marginalized, plugin, en.table);
  const auto direct = onestep_multi_direct(en.subjects, en.table);
  const auto m1 = onestep_multi_indirect(en.subjects, 1, en.table);
  const auto m2 = onestep_multi_indirect(en.subjects, 2, en.table);
  const double shift_d = eifs.col(kDirect).mean(), shift_1 = eifs.col(kIndirectM1).mean(),
               shift_2 = eifs.col(kIndirectM2).mean();
  CHECK(direct.estimate == doctest::Approx(plugin[kDirect] + shift_d).epsilon(1e-13));
  CHECK(m1.estimate == doctest::Approx(plugin[kIndirectM1] + shift_1).epsilon(1e-13));
  CHECK(m2.estimate == doctest::Approx(plugin[kIndirectM2] + shift_2).epsilon(1e-13));
  for (Eigen::Index i = 0; i < eifs.rows(); ++i) {
    CHECK(std::abs(direct.eif[i] - (eifs(i, kDirect) - shift_d)) < 1e-12);
    CHECK(std::abs(m1.eif[i] - (eifs(i, kIndirectM1) - shift_1)) < 1e-12);
    CHECK(std::abs(m2.eif[i] - (eifs(i, kIndirectM2) - shift_2)) < 1e-12);
  }
}

TEST_CASE("invalid target mediator") {
  const auto w = oracle::random_world({2, 2, 2}, 1, 34);
  const auto en = oracle::enumerate(w);
  CHECK_THROWS(onestep_multi_indirect(en.subjects, 0, en.table));
  CHECK_THROWS(onestep_multi_indirect(en.subjects, 4, en.table));
}

}
