#include "ptes/fit.hpp"

#include <cmath>

#include "doctest.h"
#include "ptes/errors.hpp"

using namespace ptes;

TEST_CASE("noiseless round trip recovers the reference coefficients") {
  const ModelACoefficients truth;
  const std::vector<double> levels = {0.3, 0.5, 0.75, 1.0};

  const auto ch_samples = sample_reference_curves(Side::charge, levels, 101, truth);
  const auto ch_fit = fit_capability_params(ch_samples, Side::charge);
  REQUIRE(ch_fit.levels.size() == 4);
  for (const auto& lf : ch_fit.levels) {
    CHECK(std::abs(lf.a - truth.a_ch(lf.p)) < 1e-3);
    CHECK(std::abs(lf.b - truth.b_ch(lf.p)) < 1e-3);
  }
  CHECK(std::abs(ch_fit.a_of_p.slope - truth.a_ch_slope) < 1e-3);
  CHECK(std::abs(ch_fit.a_of_p.intercept) < 1e-3);
  CHECK(std::abs(ch_fit.b_of_p.slope - truth.b_ch_slope) < 1e-3);
  CHECK(std::abs(ch_fit.b_of_p.intercept - truth.b_ch_intercept) < 1e-3);

  const auto dis_samples = sample_reference_curves(Side::discharge, levels, 101, truth);
  const auto dis_fit = fit_capability_params(dis_samples, Side::discharge);
  CHECK(std::abs(dis_fit.a_of_p.slope - truth.a_dis_slope) < 1e-3);
  CHECK(std::abs(dis_fit.a_of_p.intercept - truth.a_dis_intercept) < 1e-3);
  CHECK(std::abs(dis_fit.b_of_p.slope - truth.b_dis_slope) < 1e-3);
  CHECK(std::abs(dis_fit.b_of_p.intercept - truth.b_dis_intercept) < 1e-3);

  const ModelACoefficients rebuilt = coefficients_from_fits(ch_fit, dis_fit);
  CHECK(std::abs(rebuilt.a_ch_slope - truth.a_ch_slope) < 1e-3);
  CHECK(std::abs(rebuilt.b_dis_intercept - truth.b_dis_intercept) < 1e-3);
}

TEST_CASE("constant curves degenerate instead of fitting") {
  LevelSamples level;
  level.p = 1.0;
  for (int i = 0; i < 40; ++i) level.samples.push_back({i * 2.5, 1.0});
  const auto fit = fit_capability_params({level}, Side::charge);
  REQUIRE(fit.levels.size() == 1);
  CHECK(fit.levels[0].degenerate);
  CHECK(fit.levels[0].a == 100.0);
  CHECK(fit.a_of_p.underdetermined);
}

TEST_CASE("single level fit leaves the linear stage underdetermined") {
  const auto samples = sample_reference_curves(Side::charge, {1.0}, 101);
  const auto fit = fit_capability_params(samples, Side::charge);
  REQUIRE(fit.levels.size() == 1);
  CHECK(std::abs(fit.levels[0].a - 41.4) < 1e-3);
  CHECK(std::abs(fit.levels[0].b - 3.668) < 1e-3);
  CHECK(fit.a_of_p.underdetermined);
  CHECK(fit.b_of_p.underdetermined);
}

TEST_CASE("too few samples per level is rejected") {
  LevelSamples level;
  level.p = 1.0;
  for (int i = 0; i < 5; ++i) level.samples.push_back({i * 20.0, 0.5});
  CHECK_THROWS_AS(fit_capability_params({level}, Side::charge), FitDiverged);
}

TEST_CASE("residual bound triggers FitDiverged") {
  // data from a shape the model cannot express
  LevelSamples level;
  level.p = 1.0;
  for (int i = 0; i <= 100; ++i) {
    const double soc = i * 1.0;
    level.samples.push_back({soc, soc < 50.0 ? 1.0 : 0.0});  // step function
  }
  FitOptions opt;
  opt.max_residual_norm = 0.05;
  CHECK_THROWS_AS(fit_capability_params({level}, Side::charge, opt), FitDiverged);
}
