#include "ptes/dispatch.hpp"

#include <algorithm>
#include <cmath>

#include "ptes/errors.hpp"

namespace ptes {

void PriceSeries::validate_or_throw() const {
  if (hours() < 2) throw InputError("price series needs at least two hours");
  for (std::size_t i = 0; i < usd_per_mwh.size(); ++i) {
    if (!std::isfinite(usd_per_mwh[i]))
      throw InputError("non-finite price at hour " + std::to_string(i + 1) +
                       " of series " + label);
  }
}

double soc_step(double soc_prev, double w_ch_kw, double w_dis_kw,
                const PtesDesign& d) {
  const double delta = (d.alpha_ch * w_ch_kw * d.eta_mg -
                        d.alpha_dis * w_dis_kw / d.eta_mg) /
                       d.energy_capacity_kwh;
  return (1.0 - d.gamma_per_hour) * soc_prev + delta;
}

DispatchProblem build_problem(const PtesDesign& design, const CapabilitySpec& spec,
                              const PriceSeries& prices,
                              const DispatchBuildOptions& options) {
  design.validate_or_throw();
  prices.validate_or_throw();
  PtesDesign effective = design;
  if (spec.family == ModelFamily::d2) {
    const ModelACoefficients& c = spec.coeffs;
    effective = rescale_design_d2(
        design,
        [&c](double soc) { return eval_b(soc, Side::charge, BLoad::full, c); },
        [&c](double soc) { return eval_b(soc, Side::discharge, BLoad::full, c); });
  }
  return DispatchProblem{design, effective, spec, Capability{spec}, prices, options};
}

DispatchLp build_dispatch_lp(const DispatchProblem& problem) {
  const PtesDesign& d = problem.effective_design;
  const PriceSeries& prices = problem.prices;
  const int H = problem.hours();
  const double k_ch = d.alpha_ch * d.eta_mg / d.energy_capacity_kwh;
  const double k_dis = d.alpha_dis / (d.eta_mg * d.energy_capacity_kwh);
  const double decay = 1.0 - d.gamma_per_hour;

  DispatchLp out;
  out.horizon = H;
  lp::LpInstance& lp = out.lp;

  for (int h = 0; h < H; ++h) {
    // objective: minimize -profit in dollars (kW * $/MWh * 1e-3)
    lp.add_variable(0.0, d.w_ch_max_kw, prices.usd_per_mwh[h] * 1e-3);
    lp.add_variable(0.0, d.w_dis_max_kw, -prices.usd_per_mwh[h] * 1e-3);
    lp.add_variable(0.0, 1.0, 0.0);
  }
  if (problem.options.initial_soc == InitialSocMode::fixed) {
    const double v = problem.options.fixed_initial_soc;
    lp.set_var_bounds(DispatchLp::soc(H - 1), v, v);
  }

  // soc_h - (1-gamma) soc_{h-1} - k_ch w_ch + k_dis w_dis = 0, hour 0 wraps
  for (int h = 0; h < H; ++h) {
    const int prev = h == 0 ? H - 1 : h - 1;
    lp.add_row(0.0, 0.0,
               {{DispatchLp::soc(h), 1.0},
                {DispatchLp::soc(prev), -decay},
                {DispatchLp::wch(h), -k_ch},
                {DispatchLp::wdis(h), k_dis}});
  }

  out.capability_row_begin = lp.num_rows();
  switch (problem.spec.family) {
    case ModelFamily::e:
      break;  // nameplate bounds only
    case ModelFamily::d:
    case ModelFamily::d2:
      for (int h = 0; h < H; ++h) {
        // w_ch <= (1 - soc) W ; w_dis <= soc W
        lp.add_row(-lp::kInf, d.w_ch_max_kw,
                   {{DispatchLp::wch(h), 1.0},
                    {DispatchLp::soc(h), d.w_ch_max_kw}});
        lp.add_row(-lp::kInf, 0.0,
                   {{DispatchLp::wdis(h), 1.0},
                    {DispatchLp::soc(h), -d.w_dis_max_kw}});
      }
      break;
    case ModelFamily::c: {
      const auto& ch = problem.capability.segments(Side::charge);
      const auto& dis = problem.capability.segments(Side::discharge);
      if (ch.empty() || dis.empty())
        throw UnsupportedSpec("C variant with no segments");
      for (int h = 0; h < H; ++h) {
        for (const LinearSegment& s : ch)
          lp.add_row(-lp::kInf, s.intercept * d.w_ch_max_kw,
                     {{DispatchLp::wch(h), 1.0},
                      {DispatchLp::soc(h), -100.0 * s.slope * d.w_ch_max_kw}});
        for (const LinearSegment& s : dis)
          lp.add_row(-lp::kInf, s.intercept * d.w_dis_max_kw,
                     {{DispatchLp::wdis(h), 1.0},
                      {DispatchLp::soc(h), -100.0 * s.slope * d.w_dis_max_kw}});
      }
      break;
    }
    case ModelFamily::a:
    case ModelFamily::b:
      break;  // nonlinear; the cut loop owns these rows
  }
  out.capability_row_count = lp.num_rows() - out.capability_row_begin;

  // crash basis: the soc chain is basic against the balance rows, everything
  // else slack; feasible at zero operation
  const int n = lp.num_vars();
  const int m = lp.num_rows();
  out.crash_basis.basic.resize(m);
  out.crash_basis.status.assign(n + m, lp::VarStatus::at_lower);
  for (int h = 0; h < H; ++h) {
    out.crash_basis.basic[h] = DispatchLp::soc(h);
    out.crash_basis.status[DispatchLp::soc(h)] = lp::VarStatus::basic;
  }
  for (int r = H; r < m; ++r) {
    out.crash_basis.basic[r] = n + r;
    out.crash_basis.status[n + r] = lp::VarStatus::basic;
  }
  return out;
}

DispatchSolution extract_solution(const DispatchProblem& problem,
                                  const std::vector<double>& x) {
  const int H = problem.hours();
  DispatchSolution sol;
  sol.w_ch_kw.resize(H);
  sol.w_dis_kw.resize(H);
  sol.soc.resize(H);
  for (int h = 0; h < H; ++h) {
    sol.w_ch_kw[h] = std::max(0.0, x[DispatchLp::wch(h)]);
    sol.w_dis_kw[h] = std::max(0.0, x[DispatchLp::wdis(h)]);
    sol.soc[h] = std::clamp(x[DispatchLp::soc(h)], 0.0, 1.0);
  }
  sol.objective_usd = profit(sol, problem.prices);
  return sol;
}

double profit(const DispatchSolution& sol, const PriceSeries& prices) {
  if (static_cast<int>(sol.w_ch_kw.size()) != prices.hours() ||
      static_cast<int>(sol.w_dis_kw.size()) != prices.hours())
    throw LengthMismatch("solution and price horizons differ");
  double p = 0.0;
  for (int h = 0; h < prices.hours(); ++h)
    p += (sol.w_dis_kw[h] - sol.w_ch_kw[h]) * prices.usd_per_mwh[h] * 1e-3;
  return p;
}

bool ValidationReport::feasible(double tol_frac) const {
  return max_capability_violation_frac <= tol_frac &&
         max_balance_residual <= tol_frac && max_soc_bound_violation <= tol_frac;
}

ValidationReport validate_solution(const DispatchProblem& problem,
                                   const DispatchSolution& sol, double tol,
                                   const CapabilitySpec* against) {
  const int H = problem.hours();
  if (static_cast<int>(sol.w_ch_kw.size()) != H ||
      static_cast<int>(sol.w_dis_kw.size()) != H ||
      static_cast<int>(sol.soc.size()) != H)
    throw LengthMismatch("solution horizon does not match the problem");

  const CapabilitySpec& spec = against ? *against : problem.spec;
  const Capability cap = against ? Capability{*against} : problem.capability;
  // capability of a D2 problem is judged against the rescaled powers
  const PtesDesign& d =
      spec.family == ModelFamily::d2 ? problem.effective_design : problem.design;
  const PtesDesign& eff = problem.effective_design;

  ValidationReport rep;
  for (int h = 0; h < H; ++h) {
    const double wch = sol.w_ch_kw[h];
    const double wdis = sol.w_dis_kw[h];
    rep.max_power_bound_violation_kw =
        std::max({rep.max_power_bound_violation_kw, -wch, -wdis,
                  wch - eff.w_ch_max_kw, wdis - eff.w_dis_max_kw});
    rep.max_soc_bound_violation = std::max(
        {rep.max_soc_bound_violation, -sol.soc[h], sol.soc[h] - 1.0});

    const int prev = h == 0 ? H - 1 : h - 1;
    const double expected = soc_step(sol.soc[prev], wch, wdis, eff);
    const double residual = std::abs(sol.soc[h] - expected);
    if (h == 0) rep.cyclic_residual = residual;
    rep.max_balance_residual = std::max(rep.max_balance_residual, residual);

    const double soc_pct = std::clamp(sol.soc[h], 0.0, 1.0) * 100.0;
    double eta_ch, eta_dis;
    if (spec.family == ModelFamily::a) {
      const double p_ch = std::clamp(wch / d.w_ch_max_kw, 0.3, 1.0);
      const double p_dis = std::clamp(wdis / d.w_dis_max_kw, 0.3, 1.0);
      eta_ch = cap.charge(soc_pct, p_ch);
      eta_dis = cap.discharge(soc_pct, p_dis);
    } else {
      eta_ch = cap.charge(soc_pct);
      eta_dis = cap.discharge(soc_pct);
    }
    const double v_ch = wch - eta_ch * d.w_ch_max_kw;
    const double v_dis = wdis - eta_dis * d.w_dis_max_kw;
    rep.max_capability_violation_kw =
        std::max({rep.max_capability_violation_kw, v_ch, v_dis});
    rep.max_capability_violation_frac =
        std::max({rep.max_capability_violation_frac, v_ch / d.w_ch_max_kw,
                  v_dis / d.w_dis_max_kw});
    rep.simultaneity_kw = std::max(rep.simultaneity_kw, std::min(wch, wdis));
  }
  rep.profit_usd = profit(sol, problem.prices);
  rep.within_tol = rep.feasible(tol);
  return rep;
}

}  // namespace ptes
