#include "medfx/data.hpp"

#include <doctest.h>

#include <cmath>

using namespace medfx;

namespace {

RawData toy() {
  RawData raw;
  raw.covariates.resize(6, 1);
  raw.covariates << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
  raw.treatment.resize(6);
  raw.treatment << 0, 1, 0, 1, 0, 1;
  raw.mediators.resize(6, 2);
  raw.mediators << 1, 0, 2, 1, 1, 1, 3, 0, 2, 1, 3, 0;
  raw.outcome.resize(6);
  raw.outcome << 2, 4, 3, 5, 2.5, 4.5;
  return raw;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("validation infers supports and scales the outcome") {
  const auto t = validate_dataset(toy(), {});
  CHECK(t.size() == 6);
  CHECK(t.support.levels[0] == std::vector<int>{1, 2, 3});
  CHECK(t.support.levels[1] == std::vector<int>{0, 1});
  CHECK(t.mediator_level(3, 0) == 2);
  CHECK(t.mediator_value(3, 0) == 3.0);
  CHECK(t.outcome_scale.y_min == 2.0);
  CHECK(t.outcome_scale.y_max == 5.0);
  CHECK(t.outcome[1] == doctest::Approx(2.0 / 3.0));
  CHECK(t.outcome_scale.unscale_mean(t.outcome[1]) == doctest::Approx(4.0));
  CHECK(t.outcome_scale.unscale_effect(0.5) == doctest::Approx(1.5));
  CHECK(validate_dataset(t) == t);
}

TEST_CASE("positivity screen flags levels missing in one arm") {
  const auto t = validate_dataset(toy(), {});
  // M1 = 1 only occurs with A = 0, M1 = 3 only with A = 1.
  bool m1_level1_treated = false;
  for (const auto& w : t.warnings) m1_level1_treated |= (w.arm == 1 && w.mediator == 1 && w.level == 1);
  CHECK(m1_level1_treated);
  CHECK(!describe(t.warnings.front()).empty());
}

TEST_CASE("declared supports and bins") {
  SupportSpec spec;
  spec.levels = {std::vector<int>{0, 1, 2, 3}, std::nullopt};
  spec.y_min = 0.0;
  spec.y_max = 10.0;
  const auto t = validate_dataset(toy(), spec);
  CHECK(t.support.levels[0] == std::vector<int>{0, 1, 2, 3});
  CHECK(t.outcome[0] == doctest::Approx(0.2));

  std::vector<double> edges{0.0, 1.0, 2.5, 4.0};
  CHECK(bin_values(std::vector<double>{0.0, 0.99, 1.0, 2.5, 4.0}, edges) == std::vector<int>{0, 0, 1, 2, 2});
  CHECK_THROWS_AS(bin_values(std::vector<double>{4.5}, edges), DataError);

  auto raw = toy();
  raw.mediators(0, 1) = 0.37;
  CHECK_THROWS_AS(validate_dataset(raw, {}), DataError);
  SupportSpec binned;
  binned.bin_edges = {std::nullopt, std::vector<double>{0.0, 0.5, 1.0}};
  const auto b = validate_dataset(raw, binned);
  CHECK(b.mediator_level(0, 1) == 0);
  CHECK(b.support.bin_edges[1].has_value());
}

TEST_CASE("invalid inputs") {
  auto raw = toy();
  raw.treatment[2] = 2;
  CHECK_THROWS_AS(validate_dataset(raw, {}), DataError);
  raw = toy();
  raw.covariates(1, 0) = std::nan("");
  CHECK_THROWS_AS(validate_dataset(raw, {}), DataError);
  raw = toy();
  SupportSpec spec;
  spec.y_min = 3.0;
  CHECK_THROWS_AS(validate_dataset(raw, spec), DataError);
  spec = {};
  spec.levels = {std::vector<int>{1, 2}, std::nullopt};
  CHECK_THROWS_AS(validate_dataset(raw, spec), DataError);
  raw.outcome.setConstant(1.0);
  CHECK_THROWS_AS(validate_dataset(raw, {}), DataError);
}

}
