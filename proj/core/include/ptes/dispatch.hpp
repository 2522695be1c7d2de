#pragma once

#include <string>
#include <vector>

#include "ptes/capability.hpp"
#include "ptes/design.hpp"
#include "ptes/lp.hpp"
#include "ptes/stats.hpp"

namespace ptes {

// Hourly day-ahead price series; one entry per hour.
struct PriceSeries {
  std::string label;
  std::vector<double> usd_per_mwh;

  int hours() const { return static_cast<int>(usd_per_mwh.size()); }
  void validate_or_throw() const;  // >= 2 finite entries
};

// The cyclic closure always holds; `fixed` additionally pins the wrap state
// SoC_H (the state entering hour 1).
enum class InitialSocMode { free_cyclic, fixed };

struct DispatchBuildOptions {
  InitialSocMode initial_soc = InitialSocMode::free_cyclic;
  double fixed_initial_soc = 0.5;
};

// Price-taker problem for one model variant. For D2 the effective design
// carries the rescaled nameplate powers; all other variants use the design
// as given.
struct DispatchProblem {
  PtesDesign design;
  PtesDesign effective_design;
  CapabilitySpec spec;
  Capability capability;
  PriceSeries prices;
  DispatchBuildOptions options;

  int hours() const { return prices.hours(); }
};

DispatchProblem build_problem(const PtesDesign& design, const CapabilitySpec& spec,
                              const PriceSeries& prices,
                              const DispatchBuildOptions& options = {});

struct DispatchSolution {
  std::vector<double> w_ch_kw;
  std::vector<double> w_dis_kw;
  std::vector<double> soc;  // fraction of energy capacity, end of hour
  double objective_usd = 0.0;
  SolveStats stats;
};

// One hour of the SoC balance: (1-gamma)*soc + (a_ch*w_ch*eta - a_dis*w_dis/eta)/C.
// May leave [0,1]; bounds are the optimizer's job.
double soc_step(double soc_prev, double w_ch_kw, double w_dis_kw,
                const PtesDesign& design);

// Objective recomputation: sum (w_dis - w_ch) * price * 1e-3 dollars.
double profit(const DispatchSolution& sol, const PriceSeries& prices);

// LP image of the problem's linear part: balance rows first (one per hour,
// hour 0 wrapping to hour H-1), then the static capability rows of the
// variant. Models A and B get no static capability rows; the cutting-plane
// solvers append them.
struct DispatchLp {
  lp::LpInstance lp;
  int horizon = 0;
  int capability_row_begin = 0;  // first static capability row
  int capability_row_count = 0;
  lp::Basis crash_basis;         // soc chain basic, feasible at zero operation

  static int wch(int h) { return 3 * h; }
  static int wdis(int h) { return 3 * h + 1; }
  static int soc(int h) { return 3 * h + 2; }
};

DispatchLp build_dispatch_lp(const DispatchProblem& problem);

// Extracts a DispatchSolution from LP variable values.
DispatchSolution extract_solution(const DispatchProblem& problem,
                                  const std::vector<double>& x);

struct ValidationReport {
  double max_power_bound_violation_kw = 0.0;
  double max_soc_bound_violation = 0.0;      // fraction
  double max_balance_residual = 0.0;         // fraction
  double cyclic_residual = 0.0;              // fraction
  double max_capability_violation_kw = 0.0;
  double max_capability_violation_frac = 0.0;  // normalized by nameplate
  double simultaneity_kw = 0.0;              // max_h min(w_ch, w_dis)
  double profit_usd = 0.0;
  bool within_tol = false;

  bool feasible(double tol_frac) const;
};

// Re-checks a solution against the true constraints of `against` (defaults to
// the problem's own variant). Model A is checked at p clamped to the fitted
// range, matching the solver's bounding semantics. Report-only.
ValidationReport validate_solution(const DispatchProblem& problem,
                                   const DispatchSolution& sol, double tol,
                                   const CapabilitySpec* against = nullptr);

}  // namespace ptes
