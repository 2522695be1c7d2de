#include "ptes/capability.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"
#include "ptes/errors.hpp"

using namespace ptes;

namespace {
const ModelACoefficients kC;

double fd_gradient(double soc, double p, Side side, double h = 1e-4) {
  auto f = [&](double s) {
    return side == Side::charge ? eval_charge_a(s, p, kC) : eval_discharge_a(s, p, kC);
  };
  return (f(soc + h) - f(soc - h)) / (2 * h);
}
}  // namespace

TEST_CASE("model A charge evaluations") {
  CHECK(eval_charge_a(20.0, 1.0, kC) == 1.0);          // below the knot a_ch(1)=41.4
  CHECK(eval_charge_a(100.0, 1.0, kC) == 0.0);
  CHECK(eval_charge_a(100.0, 0.4, kC) == 0.0);
  CHECK(eval_charge_a(70.7, 1.0, kC) == doctest::Approx(0.9213277).epsilon(1e-6));
}

TEST_CASE("model A discharge evaluations") {
  CHECK(eval_discharge_a(0.0, 1.0, kC) == 0.0);
  CHECK(eval_discharge_a(0.0, 0.7, kC) == 0.0);
  CHECK(eval_discharge_a(80.0, 1.0, kC) == 1.0);       // above a_dis(1)=60.718
  CHECK(eval_discharge_a(30.359, 1.0, kC) == doctest::Approx(0.9254682).epsilon(1e-6));
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(eval_charge_a(-1.0, 1.0, kC), DomainError);
  CHECK_THROWS_AS(eval_charge_a(101.0, 1.0, kC), DomainError);
  CHECK_THROWS_AS(eval_charge_a(50.0, 0.0, kC), DomainError);
  CHECK_THROWS_AS(eval_discharge_a(50.0, -0.2, kC), DomainError);
}

TEST_CASE("p below the fitted range extrapolates with a flag") {
  bool flagged = false;
  (void)eval_charge_a(50.0, 0.2, kC, &flagged);
  CHECK(flagged);
  flagged = false;
  (void)eval_charge_a(50.0, 0.5, kC, &flagged);
  CHECK(!flagged);
}

TEST_CASE("model B equals model A at the frozen load") {
  for (double soc = 0.0; soc <= 100.0; soc += 7.3) {
    CHECK(eval_b(soc, Side::charge, BLoad::full, kC) ==
          doctest::Approx(eval_charge_a(soc, 1.0, kC)).epsilon(1e-14));
    CHECK(eval_b(soc, Side::discharge, BLoad::half, kC) ==
          doctest::Approx(eval_discharge_a(soc, 0.5, kC)).epsilon(1e-14));
  }
  CHECK(eval_b(20.0, Side::charge, BLoad::full, kC) == 1.0);
  CHECK(eval_b(70.7, Side::charge, BLoad::full, kC) ==
        doctest::Approx(0.9213277).epsilon(1e-6));
  // a_ch(0.5)=20.7, b_ch(0.5)=4.5095
  const double expected = 1.0 - std::pow((30.0 - 20.7) / 79.3, 4.5095);
  CHECK(eval_b(30.0, Side::charge, BLoad::half, kC) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("analytic gradient matches central differences") {
  CHECK(gradient_a(20.0, 1.0, kC, Side::charge) == 0.0);
  CHECK(gradient_a(41.4, 1.0, kC, Side::charge) == 0.0);  // one-sided limit at the knot
  // frozen from the finite-difference oracle with h = 1e-4
  CHECK(gradient_a(70.7, 1.0, kC, Side::charge) ==
        doctest::Approx(-0.0098488).epsilon(1e-4));
  for (int i = 1; i < 100; ++i) {
    const double soc = i * 1.0;
    for (Side side : {Side::charge, Side::discharge}) {
      const double g = gradient_a(soc, 1.0, kC, side);
      CHECK(std::abs(g - fd_gradient(soc, 1.0, side)) < 1e-6);
      const double gh = gradient_a(soc, 0.5, kC, side);
      CHECK(std::abs(gh - fd_gradient(soc, 0.5, side)) < 1e-6);
    }
  }
}

TEST_CASE("model D and E") {
  CHECK(eval_d(0.0, Side::charge) == 1.0);
  CHECK(eval_d(100.0, Side::charge) == 0.0);
  CHECK(eval_d(50.0, Side::discharge) == 0.5);
  CHECK(eval_e() == 1.0);
}

TEST_CASE("C segments: two-segment variant matches the closed form") {
  const auto segs = build_segments_c({75.0}, Side::charge, kC);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].eval(0.0) == doctest::Approx(1.0).epsilon(1e-12));
  const double eta75 = eval_b(75.0, Side::charge, BLoad::full, kC);
  CHECK(eta75 == doctest::Approx(0.8700).epsilon(5e-4));
  CHECK(segs[1].eval(75.0) == doctest::Approx(eta75).epsilon(1e-12));
  CHECK(segs[1].eval(100.0) == doctest::Approx(0.0).epsilon(1e-12));
  // closed form of the second line: eta(75)/(100-75) * (100 - soc)
  for (double soc = 0.0; soc <= 100.0; soc += 10.0) {
    CHECK(segs[1].eval(soc) ==
          doctest::Approx(eta75 / 25.0 * (100.0 - soc)).epsilon(1e-12));
  }

  const auto dis = build_segments_c({75.0}, Side::discharge, kC);
  REQUIRE(dis.size() == 2);
  // discharge breakpoint mirrors to 25
  const double eta25 = eval_b(25.0, Side::discharge, BLoad::full, kC);
  CHECK(dis[0].eval(0.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(dis[0].eval(25.0) == doctest::Approx(eta25).epsilon(1e-12));
  CHECK(dis[1].eval(100.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("C3 uses the case-study breakpoints") {
  const CapabilitySpec spec = CapabilitySpec::model_c_uniform(3);
  CHECK(spec.breakpoints == std::vector<double>{60.0, 80.0});
  const auto segs = build_segments_c(spec.breakpoints, Side::charge, kC);
  CHECK(segs.size() == 3);
}

TEST_CASE("invalid breakpoints") {
  CHECK_THROWS_AS(build_segments_c({0.0}, Side::charge, kC), InvalidBreakpoints);
  CHECK_THROWS_AS(build_segments_c({100.0}, Side::charge, kC), InvalidBreakpoints);
  CHECK_THROWS_AS(build_segments_c({60.0, 60.0}, Side::charge, kC), InvalidBreakpoints);
  CHECK_THROWS_AS(build_segments_c({80.0, 60.0}, Side::charge, kC), InvalidBreakpoints);
}

TEST_CASE("tag parsing round trip") {
  for (const char* tag : {"A", "B:M", "B:H", "C2:50", "C2:60", "C2:75", "C3",
                          "C10", "C30", "D", "D2", "E"}) {
    const CapabilitySpec spec = parse_capability_tag(tag);
    CHECK(spec.tag() == tag);
  }
  CHECK_THROWS_AS(parse_capability_tag("F"), UnsupportedSpec);
  CHECK_THROWS_AS(parse_capability_tag("C"), UnsupportedSpec);
}

TEST_CASE("monotonicity on a 1000-point grid") {
  for (double p : {0.3, 0.5, 0.75, 1.0}) {
    double prev_ch = 2.0, prev_dis = -1.0;
    for (int i = 0; i <= 1000; ++i) {
      const double soc = i * 0.1;
      const double ch = eval_charge_a(soc, p, kC);
      const double dis = eval_discharge_a(soc, p, kC);
      CHECK(ch <= prev_ch + 1e-9);
      CHECK(dis >= prev_dis - 1e-9);
      prev_ch = ch;
      prev_dis = dis;
    }
  }
}

TEST_CASE("dominance chain on the grid") {
  const std::vector<std::vector<double>> c_breakpoints = {
      {50.0}, {60.0}, {75.0}, {60.0, 80.0},
      CapabilitySpec::model_c_uniform(10).breakpoints,
      CapabilitySpec::model_c_uniform(30).breakpoints};
  std::vector<std::pair<std::vector<LinearSegment>, std::vector<LinearSegment>>> segs;
  for (const auto& bps : c_breakpoints)
    segs.emplace_back(build_segments_c(bps, Side::charge, kC),
                      build_segments_c(bps, Side::discharge, kC));

  for (int i = 0; i <= 1000; ++i) {
    const double soc = i * 0.1;
    const double bm_ch = eval_b(soc, Side::charge, BLoad::full, kC);
    const double bm_dis = eval_b(soc, Side::discharge, BLoad::full, kC);
    CHECK(eval_e() >= bm_ch - 1e-9);
    CHECK(eval_e() >= bm_dis - 1e-9);
    for (const auto& [ch, dis] : segs) {
      const double c_ch = eval_segments_min(ch, soc);
      const double c_dis = eval_segments_min(dis, soc);
      CHECK(bm_ch >= c_ch - 1e-9);
      CHECK(bm_dis >= c_dis - 1e-9);
      CHECK(c_ch >= eval_d(soc, Side::charge) - 1e-9);
      CHECK(c_dis >= eval_d(soc, Side::discharge) - 1e-9);
    }
    for (double p = 0.3; p <= 1.0 + 1e-12; p += 0.05) {
      CHECK(bm_ch >= eval_charge_a(soc, p, kC) - 1e-9);
      CHECK(bm_dis >= eval_discharge_a(soc, p, kC) - 1e-9);
    }
  }
}

TEST_CASE("concavity of the curved branch (second differences)") {
  const double h = 0.1;
  for (Side side : {Side::charge, Side::discharge}) {
    for (int i = 1; i < 1000; ++i) {
      const double soc = i * h;
      const double f0 = eval_b(soc - h, side, BLoad::full, kC);
      const double f1 = eval_b(soc, side, BLoad::full, kC);
      const double f2 = eval_b(soc + h, side, BLoad::full, kC);
      CHECK(f2 - 2 * f1 + f0 <= 1e-9);
    }
  }
}

TEST_CASE("chords stay below the concave capability") {
  const std::vector<std::vector<double>> sets = {
      {50.0}, {75.0}, {60.0, 80.0}, CapabilitySpec::model_c_uniform(30).breakpoints};
  for (const auto& bps : sets) {
    for (Side side : {Side::charge, Side::discharge}) {
      const auto segs = build_segments_c(bps, side, kC);
      for (int i = 0; i <= 1000; ++i) {
        const double soc = i * 0.1;
        const double truth = eval_b(soc, side, BLoad::full, kC);
        for (const auto& s : segs) {
          // each chord under-approximates on its own span; the min does globally
          (void)s;
        }
        CHECK(eval_segments_min(segs, soc) <= truth + 1e-9);
      }
    }
  }
}

TEST_CASE("min over segments equals the piecewise-by-region function") {
  const std::vector<std::vector<double>> sets = {
      {50.0}, {75.0}, {60.0, 80.0}, CapabilitySpec::model_c_uniform(10).breakpoints};
  for (const auto& bps : sets) {
    for (Side side : {Side::charge, Side::discharge}) {
      const auto segs = build_segments_c(bps, side, kC);
      const auto anchors = segment_anchors(bps, side);
      for (int i = 0; i <= 2000; ++i) {
        const double soc = i * 0.05;
        CHECK(std::abs(eval_segments_min(segs, soc) -
                       eval_segments_piecewise(segs, anchors, soc)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("capability facade dispatches per family") {
  const Capability cap_a{CapabilitySpec::model_a()};
  const Capability cap_c{parse_capability_tag("C2:75")};
  const Capability cap_e{CapabilitySpec::model_e()};
  CHECK(cap_a.charge(70.7, 1.0) == doctest::Approx(0.9213277).epsilon(1e-6));
  CHECK(cap_c.charge(75.0) == doctest::Approx(0.8699938).epsilon(1e-6));
  CHECK(cap_e.charge(99.0) == 1.0);
  CHECK(cap_e.discharge(1.0) == 1.0);
  CHECK(cap_c.segments(Side::charge).size() == 2);
}
