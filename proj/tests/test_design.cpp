#include "ptes/design.hpp"

#include <cmath>

#include "doctest.h"
#include "ptes/capability.hpp"
#include "ptes/errors.hpp"

using namespace ptes;

TEST_CASE("cop factors reproduce the configuration table") {
  const auto cop = compute_cop(OperatingTemperatures::reference(), 0.5203);
  // table rounds 565/299 and 565/200
  CHECK(std::abs(cop.alpha_ch - 1.89) <= 0.005 + 1e-9);
  CHECK(std::abs(cop.alpha_dis - 2.83) <= 0.005 + 1e-9);
  CHECK(cop.alpha_ch == doctest::Approx(565.0 / 299.0).epsilon(1e-12));
  CHECK(cop.alpha_dis == doctest::Approx(565.0 / 200.0).epsilon(1e-12));
}

TEST_CASE("cop collapses to 1 when the expander term vanishes") {
  OperatingTemperatures t = OperatingTemperatures::reference();
  t.t_ch_exp_in = celsius_to_kelvin(100.0);
  t.t_ch_exp_out = celsius_to_kelvin(100.0);
  t.t_ch_comp_out = celsius_to_kelvin(600.0);
  t.t_ch_comp_in = celsius_to_kelvin(100.0);
  const auto cop = compute_cop(t, 1.0);
  CHECK(cop.alpha_ch == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cp cancels out of the cop ratio") {
  const auto a = compute_cop(OperatingTemperatures::reference(), 0.5203);
  const auto b = compute_cop(OperatingTemperatures::reference(), 2 * 0.5203);
  CHECK(a.alpha_ch == b.alpha_ch);
  CHECK(a.alpha_dis == b.alpha_dis);
}

TEST_CASE("cop is invariant under a uniform temperature offset") {
  OperatingTemperatures t = OperatingTemperatures::reference();
  const auto base = compute_cop(t, 0.5203);
  const double delta = 37.0;
  t.t_ch_comp_in += delta;
  t.t_ch_comp_out += delta;
  t.t_ch_exp_in += delta;
  t.t_ch_exp_out += delta;
  t.t_dis_comp_in += delta;
  t.t_dis_comp_out1 += delta;
  t.t_dis_comp_out2 += delta;
  t.t_dis_exp_in += delta;
  t.t_dis_exp_out += delta;
  const auto shifted = compute_cop(t, 0.5203);
  CHECK(shifted.alpha_ch == doctest::Approx(base.alpha_ch).epsilon(1e-12));
  CHECK(shifted.alpha_dis == doctest::Approx(base.alpha_dis).epsilon(1e-12));
}

TEST_CASE("degenerate cycle is rejected") {
  OperatingTemperatures t = OperatingTemperatures::reference();
  // expander gain exceeds compressor work
  t.t_ch_exp_in = celsius_to_kelvin(500.0);
  CHECK_THROWS_AS(compute_cop(t, 0.5203), DegenerateCycle);
}

TEST_CASE("packed bed energy capacity matches the table") {
  const double c = storage_energy_capacity(PackedBedSpec::reference());
  CHECK(std::abs(c - 11021.0) / 11021.0 <= 0.01);
  // hand calculation: 30 * 0.575 * 4800 * 0.848 * 565 / 3600
  CHECK(c == doctest::Approx(11019.76).epsilon(1e-6));
}

TEST_CASE("energy capacity is linear in volume and span") {
  PackedBedSpec bed = PackedBedSpec::reference();
  const double base = storage_energy_capacity(bed);
  bed.volume_m3 /= 2.0;
  CHECK(storage_energy_capacity(bed) == doctest::Approx(base / 2.0).epsilon(1e-12));
  bed = PackedBedSpec::reference();
  bed.delta_t_k = 0.0;
  CHECK(storage_energy_capacity(bed) == 0.0);
  bed.delta_t_k = 3 * 565.0;
  CHECK(storage_energy_capacity(bed) == doctest::Approx(3 * base).epsilon(1e-12));
}

TEST_CASE("d2 rescale matches the closed-form mean of the full-load curves") {
  const ModelACoefficients c;
  auto eta_ch = [&](double soc) { return eval_b(soc, Side::charge, BLoad::full, c); };
  auto eta_dis = [&](double soc) { return eval_b(soc, Side::discharge, BLoad::full, c); };

  // analytic means: flat branch + 58.6*b/(b+1) style integral of the tail
  const double b_ch = c.b_ch(1.0);
  const double mean_ch = (41.4 + 58.6 * b_ch / (b_ch + 1.0)) / 100.0;
  const double b_dis = c.b_dis(1.0);
  const double a_dis = c.a_dis(1.0);
  const double mean_dis = ((100.0 - a_dis) + a_dis * b_dis / (b_dis + 1.0)) / 100.0;

  CHECK(mean_capability(eta_ch) == doctest::Approx(mean_ch).epsilon(1e-7));
  CHECK(mean_capability(eta_dis) == doctest::Approx(mean_dis).epsilon(1e-7));

  const PtesDesign d2 = rescale_design_d2(PtesDesign::reference(), eta_ch, eta_dis);
  CHECK(d2.w_ch_max_kw == doctest::Approx(437.232).epsilon(2e-3));
  CHECK(d2.w_dis_max_kw == doctest::Approx(160.0 * mean_dis / 0.5).epsilon(1e-6));
  CHECK(d2.cost_mult_ch == doctest::Approx(mean_ch / 0.5).epsilon(1e-6));

  // untouched fields
  const PtesDesign ref = PtesDesign::reference();
  CHECK(d2.energy_capacity_kwh == ref.energy_capacity_kwh);
  CHECK(d2.gamma_per_hour == ref.gamma_per_hour);
  CHECK(d2.eta_mg == ref.eta_mg);
  CHECK(d2.alpha_ch == ref.alpha_ch);
  CHECK(d2.alpha_dis == ref.alpha_dis);
}

TEST_CASE("d2 rescale identity and constant cases") {
  auto one = [](double) { return 1.0; };
  auto eta_d_ch = [](double soc) { return eval_d(soc, Side::charge); };
  auto eta_d_dis = [](double soc) { return eval_d(soc, Side::discharge); };

  const PtesDesign ref = PtesDesign::reference();
  const PtesDesign doubled = rescale_design_d2(ref, one, one);
  CHECK(doubled.w_ch_max_kw == doctest::Approx(2 * ref.w_ch_max_kw).epsilon(1e-9));
  CHECK(doubled.w_dis_max_kw == doctest::Approx(2 * ref.w_dis_max_kw).epsilon(1e-9));

  const PtesDesign same = rescale_design_d2(ref, eta_d_ch, eta_d_dis);
  CHECK(same.w_ch_max_kw == doctest::Approx(ref.w_ch_max_kw).epsilon(1e-9));
  CHECK(same.w_dis_max_kw == doctest::Approx(ref.w_dis_max_kw).epsilon(1e-9));
}

TEST_CASE("round trip efficiency") {
  CHECK(round_trip_efficiency(PtesDesign::reference()) ==
        doctest::Approx(0.641).epsilon(1e-3));
  PtesDesign d = PtesDesign::reference();
  d.eta_mg = 1.0;
  d.alpha_ch = d.alpha_dis = 2.0;
  CHECK(round_trip_efficiency(d) == doctest::Approx(1.0).epsilon(1e-12));
  d.eta_mg = 0.5;
  CHECK(round_trip_efficiency(d) == doctest::Approx(0.25).epsilon(1e-12));
}
