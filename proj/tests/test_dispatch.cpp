#include "ptes/dispatch.hpp"

#include <cmath>

#include "doctest.h"
#include "ptes/errors.hpp"

using namespace ptes;

namespace {

PriceSeries flat_series(int hours, double price) {
  PriceSeries s;
  s.label = "flat";
  s.usd_per_mwh.assign(hours, price);
  return s;
}

}  // namespace

TEST_CASE("soc_step hand arithmetic") {
  const PtesDesign d = PtesDesign::reference();
  CHECK(soc_step(0.5, 0.0, 0.0, d) == doctest::Approx(0.4999).epsilon(1e-12));
  // 0.5*0.9998 + 1.89*250*0.98/11021
  CHECK(soc_step(0.5, 250.0, 0.0, d) ==
        doctest::Approx(0.5419152436).epsilon(1e-9));
  CHECK(std::abs(soc_step(0.5, 250.0, 0.0, d) - 0.54192) < 1e-5);
  // 0.5*0.9998 - 2.83*160/0.98/11021
  CHECK(soc_step(0.5, 0.0, 160.0, d) ==
        doctest::Approx(0.4579763255).epsilon(1e-9));
}

TEST_CASE("price series validation") {
  PriceSeries s;
  s.usd_per_mwh = {10.0};
  CHECK_THROWS_AS(s.validate_or_throw(), InputError);
  s.usd_per_mwh = {10.0, std::nan("")};
  CHECK_THROWS_AS(s.validate_or_throw(), InputError);
  s.usd_per_mwh = {10.0, 20.0};
  CHECK_NOTHROW(s.validate_or_throw());
}

TEST_CASE("model E problem shape") {
  const auto problem = build_problem(PtesDesign::reference(),
                                     CapabilitySpec::model_e(), flat_series(2, 10.0));
  const DispatchLp built = build_dispatch_lp(problem);
  CHECK(built.lp.num_vars() == 6);  // w_ch, w_dis, soc per hour
  CHECK(built.lp.num_rows() == 2);  // balance rows only, hour 0 wraps
  CHECK(built.capability_row_count == 0);
  // cyclic closure: hour 0's row touches soc of hour H-1
  bool wraps = false;
  for (int k = 0; k < built.lp.row_nnz(0); ++k)
    if (built.lp.row_cols(0)[k] == DispatchLp::soc(1)) wraps = true;
  CHECK(wraps);
}

TEST_CASE("model C3 capability row count") {
  const auto problem = build_problem(PtesDesign::reference(),
                                     parse_capability_tag("C3"),
                                     flat_series(8760, 10.0));
  const DispatchLp built = build_dispatch_lp(problem);
  CHECK(built.capability_row_count == 2 * 3 * 8760);
  CHECK(built.lp.num_rows() == 8760 + 2 * 3 * 8760);
}

TEST_CASE("model A is flagged nonlinear") {
  const CapabilitySpec spec = CapabilitySpec::model_a();
  CHECK(!spec.is_linear());
  CHECK(spec.is_p_dependent());
  CHECK(CapabilitySpec::model_b(BLoad::full).is_linear() == false);
  CHECK(parse_capability_tag("C2:75").is_linear());
}

TEST_CASE("d2 problems carry the rescaled design") {
  const auto problem = build_problem(PtesDesign::reference(),
                                     CapabilitySpec::model_d2(), flat_series(4, 10.0));
  CHECK(problem.effective_design.w_ch_max_kw ==
        doctest::Approx(437.232).epsilon(2e-3));
  CHECK(problem.design.w_ch_max_kw == 250.0);
}

TEST_CASE("profit arithmetic") {
  PriceSeries prices;
  prices.usd_per_mwh = {50.0, 0.0};
  DispatchSolution sol;
  sol.w_ch_kw = {0.0, 0.0};
  sol.w_dis_kw = {160.0, 0.0};
  sol.soc = {0.5, 0.5};
  CHECK(profit(sol, prices) == doctest::Approx(8.0).epsilon(1e-12));
  sol.w_dis_kw = {0.0, 0.0};
  CHECK(profit(sol, prices) == 0.0);
  sol.w_dis_kw = {0.0};
  CHECK_THROWS_AS(profit(sol, prices), LengthMismatch);
}

TEST_CASE("validate: zero solution with decaying soc is feasible") {
  const auto problem = build_problem(PtesDesign::reference(),
                                     CapabilitySpec::model_b(BLoad::full),
                                     flat_series(24, 30.0));
  DispatchSolution sol;
  sol.w_ch_kw.assign(24, 0.0);
  sol.w_dis_kw.assign(24, 0.0);
  sol.soc.assign(24, 0.0);
  const auto rep = validate_solution(problem, sol, 1e-6);
  CHECK(rep.within_tol);
  CHECK(rep.max_capability_violation_frac <= 0.0);
  CHECK(rep.profit_usd == 0.0);
  CHECK(rep.simultaneity_kw == 0.0);
}

TEST_CASE("validate: full-power charging at high soc violates B:M") {
  const auto problem = build_problem(PtesDesign::reference(),
                                     CapabilitySpec::model_e(), flat_series(4, 30.0));
  DispatchSolution sol;
  sol.w_ch_kw = {250.0, 0.0, 0.0, 0.0};
  sol.w_dis_kw.assign(4, 0.0);
  // arbitrary trajectory pinned at high soc where B:M cannot take full power
  sol.soc = {0.95, 0.95, 0.95, 0.95};
  const CapabilitySpec bm = CapabilitySpec::model_b(BLoad::full);
  const auto rep = validate_solution(problem, sol, 1e-6, &bm);
  CHECK(rep.max_capability_violation_kw > 10.0);
}

TEST_CASE("validate flags simultaneous charge and discharge") {
  const auto problem = build_problem(PtesDesign::reference(),
                                     CapabilitySpec::model_e(), flat_series(4, 30.0));
  DispatchSolution sol;
  sol.w_ch_kw = {100.0, 0.0, 0.0, 0.0};
  sol.w_dis_kw = {50.0, 0.0, 0.0, 0.0};
  sol.soc = {0.5, 0.5, 0.5, 0.5};
  const auto rep = validate_solution(problem, sol, 1e-6);
  CHECK(rep.simultaneity_kw == doctest::Approx(50.0));
}
