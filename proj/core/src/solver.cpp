#include "ptes/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <queue>

#include "ptes/errors.hpp"

namespace ptes {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

SolveStatus from_lp(lp::LpStatus s) {
  switch (s) {
    case lp::LpStatus::optimal: return SolveStatus::optimal;
    case lp::LpStatus::infeasible: return SolveStatus::infeasible;
    case lp::LpStatus::time_limit: return SolveStatus::time_limit;
    default: return SolveStatus::iteration_limit;
  }
}

lp::LpOptions lp_options(const SolveOptions& options) {
  lp::LpOptions o;
  o.feas_tol = options.feasibility_tol;
  o.max_iterations = options.lp_max_iterations;
  o.time_limit_s = options.time_limit_s;
  return o;
}

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::iteration_limit: return "iteration_limit";
    case SolveStatus::time_limit: return "time_limit";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

LinearSegment tangent_cut(const Capability& cap, Side side, double p,
                          double soc0_pct) {
  const double eta0 = cap.eval(side, soc0_pct, p);
  const double g = cap.gradient(side, soc0_pct, p);
  LinearSegment cut;
  cut.slope = g;
  cut.intercept = eta0 - g * soc0_pct;
  return cut;
}

DispatchSolution solve_piecewise_lp(const DispatchProblem& problem,
                                    const SolveOptions& options) {
  if (!problem.spec.is_linear())
    throw UnsupportedSpec("variant " + problem.spec.tag() +
                          " is not linear-representable");
  const auto t0 = Clock::now();
  DispatchLp built = build_dispatch_lp(problem);
  const lp::LpResult res = solve_lp(built.lp, lp_options(options), &built.crash_basis);
  DispatchSolution sol = extract_solution(problem, res.x);
  sol.stats.wall_time_s = seconds_since(t0);
  sol.stats.lp_iterations = res.iterations;
  sol.stats.status = from_lp(res.status);
  const ValidationReport rep =
      validate_solution(problem, sol, options.cut_violation_tol);
  sol.stats.final_max_violation = rep.max_capability_violation_frac;
  return sol;
}

namespace {

// Cut loop for the concave capability bound at a fixed part-load profile.
// Model B runs it once with constant p; Model A keeps one instance alive and
// re-derives every registered tangent when the load profile moves, so the
// basis survives across fixed-point iterations.
class CutLoop {
 public:
  CutLoop(const DispatchProblem& problem, const SolveOptions& options)
      : problem_(problem),
        options_(options),
        built_(build_dispatch_lp(problem)) {}

  SolveStatus run(const std::vector<double>& p_ch,
                  const std::vector<double>& p_dis, SolveStats& stats,
                  Clock::time_point t0) {
    const PtesDesign& d = problem_.effective_design;
    const Capability& cap = problem_.capability;
    const int H = problem_.hours();
    lp::LpInstance& lp = built_.lp;

    if (!seeded_) {
      for (int h = 0; h < H; ++h) {
        if (!options_.initial_cut_socs.empty()) {
          for (double s0 : options_.initial_cut_socs) {
            add_cut(h, Side::charge, s0, p_ch[h], stats);
            add_cut(h, Side::discharge, s0, p_dis[h], stats);
          }
        } else {
          const double a_ch = problem_.spec.coeffs.a_ch(p_ch[h]);
          const double a_dis = problem_.spec.coeffs.a_dis(p_dis[h]);
          add_cut(h, Side::charge, 0.5 * (a_ch + 100.0), p_ch[h], stats);
          add_cut(h, Side::charge, 100.0, p_ch[h], stats);
          add_cut(h, Side::discharge, 0.0, p_dis[h], stats);
          add_cut(h, Side::discharge, 0.5 * a_dis, p_dis[h], stats);
        }
      }
      seeded_ = true;
    } else {
      for (const Cut& cut : cuts_)
        write_cut(cut, cut.side == Side::charge ? p_ch[cut.hour] : p_dis[cut.hour]);
    }

    for (int round = 0; round < options_.max_cut_rounds; ++round) {
      const lp::Basis* warm =
          has_solution_ ? &last_.basis : &built_.crash_basis;
      last_ = lp::solve_lp(lp, lp_options(options_), warm);
      has_solution_ = true;
      stats.lp_iterations += last_.iterations;
      ++stats.cut_rounds;
      if (last_.status != lp::LpStatus::optimal) return from_lp(last_.status);

      double max_violation = 0.0;
      int cuts_this_round = 0;
      for (int h = 0; h < H; ++h) {
        const double soc_pct =
            std::clamp(last_.x[DispatchLp::soc(h)], 0.0, 1.0) * 100.0;
        const double v_ch = (last_.x[DispatchLp::wch(h)] -
                             cap.charge(soc_pct, p_ch[h]) * d.w_ch_max_kw) /
                            d.w_ch_max_kw;
        const double v_dis =
            (last_.x[DispatchLp::wdis(h)] -
             cap.discharge(soc_pct, p_dis[h]) * d.w_dis_max_kw) /
            d.w_dis_max_kw;
        const double v = std::max(v_ch, v_dis);
        max_violation = std::max(max_violation, v);
        if (v > options_.cut_violation_tol) {
          add_cut(h, v_ch >= v_dis ? Side::charge : Side::discharge, soc_pct,
                  v_ch >= v_dis ? p_ch[h] : p_dis[h], stats);
          ++cuts_this_round;
        }
      }
      stats.round_objectives.push_back(-last_.objective);
      stats.round_max_violations.push_back(max_violation);
      stats.final_max_violation = max_violation;

      if (cuts_this_round == 0) return SolveStatus::optimal;
      if (std::isfinite(options_.time_limit_s) &&
          seconds_since(t0) > options_.time_limit_s)
        return SolveStatus::time_limit;
    }
    return SolveStatus::iteration_limit;
  }

  DispatchSolution solution() const {
    return extract_solution(problem_, last_.x);
  }

 private:
  struct Cut {
    int row;
    int hour;
    Side side;
    double soc0;
  };

  void write_cut(const Cut& cut, double p) {
    const PtesDesign& d = problem_.effective_design;
    const LinearSegment line =
        tangent_cut(problem_.capability, cut.side, p, cut.soc0);
    const double w_max =
        cut.side == Side::charge ? d.w_ch_max_kw : d.w_dis_max_kw;
    const int wvar = cut.side == Side::charge ? DispatchLp::wch(cut.hour)
                                              : DispatchLp::wdis(cut.hour);
    const std::vector<lp::RowEntry> entries{
        {wvar, 1.0},
        {DispatchLp::soc(cut.hour), -100.0 * line.slope * w_max}};
    built_.lp.set_row_entries(cut.row, entries);
    built_.lp.set_row_bounds(cut.row, -lp::kInf, line.intercept * w_max);
  }

  void add_cut(int h, Side side, double s0, double p, SolveStats& stats) {
    const int wvar =
        side == Side::charge ? DispatchLp::wch(h) : DispatchLp::wdis(h);
    Cut cut{0, h, side, s0};
    // placeholder coefficients, immediately rewritten
    cut.row = built_.lp.add_row(
        -lp::kInf, 0.0, {{wvar, 1.0}, {DispatchLp::soc(h), -1.0}});
    cuts_.push_back(cut);
    write_cut(cut, p);
    ++stats.cuts_added;
  }

  const DispatchProblem& problem_;
  SolveOptions options_;
  DispatchLp built_;
  std::vector<Cut> cuts_;
  lp::LpResult last_;
  bool has_solution_ = false;
  bool seeded_ = false;
};

}  // namespace

DispatchSolution solve_convex_b(const DispatchProblem& problem,
                                const SolveOptions& options) {
  if (problem.spec.family != ModelFamily::b)
    throw UnsupportedSpec("solve_convex_b expects a Model B variant");
  const auto t0 = Clock::now();
  const double p = problem.spec.b_load == BLoad::full ? 1.0 : 0.5;
  const std::vector<double> p_ch(problem.hours(), p);
  const std::vector<double> p_dis(problem.hours(), p);

  SolveStats stats;
  CutLoop loop(problem, options);
  stats.status = loop.run(p_ch, p_dis, stats, t0);
  DispatchSolution sol = loop.solution();
  stats.wall_time_s = seconds_since(t0);
  sol.stats = std::move(stats);
  return sol;
}

DispatchSolution solve_model_a(const DispatchProblem& problem,
                               const SolveOptions& options) {
  if (problem.spec.family != ModelFamily::a)
    throw UnsupportedSpec("solve_model_a expects Model A");
  const auto t0 = Clock::now();
  const PtesDesign& d = problem.effective_design;
  const int H = problem.hours();
  constexpr double kPFloor = 0.3;

  std::vector<double> p_ch(H, 1.0), p_dis(H, 1.0);
  SolveStats stats;
  CutLoop loop(problem, options);
  DispatchSolution best;
  double best_dp = lp::kInf;
  double prev_dp = lp::kInf;
  double theta = options.damping;
  SolveStatus inner_status = SolveStatus::optimal;

  for (int outer = 0; outer < options.max_fixed_point_iterations; ++outer) {
    SolveStats inner_stats;
    inner_status = loop.run(p_ch, p_dis, inner_stats, t0);
    DispatchSolution inner_solution = loop.solution();
    stats.lp_iterations += inner_stats.lp_iterations;
    stats.cut_rounds += inner_stats.cut_rounds;
    stats.cuts_added += inner_stats.cuts_added;
    stats.final_max_violation = inner_stats.final_max_violation;
    ++stats.fixed_point_iterations;

    // idle hours keep their p: the constraint is slack there and the load
    // ratio is undefined at w = 0
    double max_dp = 0.0;
    auto update_p = [&](double& p, double w, double w_max) {
      if (w <= 1e-9 * w_max) return;
      const double ratio = w / w_max;
      if (ratio < kPFloor) stats.p_floor_used = true;
      const double target = std::clamp(ratio, kPFloor, 1.0);
      const double next = (1.0 - theta) * p + theta * target;
      max_dp = std::max(max_dp, std::abs(next - p));
      p = next;
    };
    for (int h = 0; h < H; ++h) {
      update_p(p_ch[h], inner_solution.w_ch_kw[h], d.w_ch_max_kw);
      update_p(p_dis[h], inner_solution.w_dis_kw[h], d.w_dis_max_kw);
    }
    // a stalled residual means the load profile is cycling between degenerate
    // optima; shrinking the step settles it
    if (max_dp > 0.9 * prev_dp) theta = std::max(theta * 0.5, options.damping / 64.0);
    prev_dp = max_dp;

    if (std::getenv("PTES_A_DEBUG"))
      std::fprintf(stderr, "model A outer %d: max_dp=%.3e theta=%.4f rounds=%d obj=%.4f\n",
                   outer, max_dp, theta, inner_stats.cut_rounds,
                   profit(inner_solution, problem.prices));

    if (max_dp < best_dp) {
      best_dp = max_dp;
      best = std::move(inner_solution);
    }
    if (max_dp <= options.p_tol) {
      stats.status = inner_status;
      stats.wall_time_s = seconds_since(t0);
      best.stats = std::move(stats);
      return best;
    }
    if (std::isfinite(options.time_limit_s) &&
        seconds_since(t0) > options.time_limit_s) {
      stats.status = SolveStatus::time_limit;
      stats.wall_time_s = seconds_since(t0);
      best.stats = std::move(stats);
      return best;
    }
  }
  stats.status = SolveStatus::iteration_limit;  // never reported as optimal
  stats.wall_time_s = seconds_since(t0);
  best.stats = std::move(stats);
  return best;
}

// --- MILP formulation of the C variants --------------------------------------

DispatchSolution solve_milp_piecewise(const DispatchProblem& problem,
                                      const SolveOptions& options) {
  if (problem.spec.family != ModelFamily::c)
    throw UnsupportedSpec("the integer formulation applies to C variants");
  const int H = problem.hours();
  if (H > options.milp_max_horizon)
    throw UnsupportedSpec("horizon exceeds the integer-formulation cap");

  const auto t0 = Clock::now();
  const PtesDesign& d = problem.effective_design;

  // incumbent straight from the multi-inequality LP; the concave piecewise
  // bound makes the two formulations share their optimum
  const DispatchSolution lp_sol = solve_piecewise_lp(problem, options);
  double incumbent_obj = -lp_sol.objective_usd;  // minimization image
  DispatchSolution incumbent = lp_sol;

  SolveStats stats;
  stats.cuts_added = 0;

  DispatchLp base;
  {
    // rebuild without the static capability rows: balance only
    DispatchProblem relaxed = problem;
    relaxed.spec = CapabilitySpec::model_e();
    relaxed.capability = Capability{relaxed.spec};
    base = build_dispatch_lp(relaxed);
  }
  lp::LpInstance& lp = base.lp;

  const auto& ch_segments = problem.capability.segments(Side::charge);
  const int N = static_cast<int>(ch_segments.size());
  std::vector<const std::vector<double>*> anchors = {
      &problem.capability.anchors(Side::charge),
      &problem.capability.anchors(Side::discharge)};
  std::vector<std::vector<double>> eta_at_anchor(2);
  for (int side = 0; side < 2; ++side)
    for (double s : *anchors[side])
      eta_at_anchor[side].push_back(
          eval_b(s, side == 0 ? Side::charge : Side::discharge, BLoad::full,
                 problem.spec.coeffs));

  std::vector<int> z_vars;
  for (int h = 0; h < H; ++h) {
    for (int side = 0; side < 2; ++side) {
      const double w_max = side == 0 ? d.w_ch_max_kw : d.w_dis_max_kw;
      const int wvar = side == 0 ? DispatchLp::wch(h) : DispatchLp::wdis(h);
      std::vector<int> lam(N + 1), z(N);
      for (int k = 0; k <= N; ++k) lam[k] = lp.add_variable(0.0, 1.0, 0.0);
      for (int n = 0; n < N; ++n) {
        z[n] = lp.add_variable(0.0, 1.0, 0.0);
        z_vars.push_back(z[n]);
      }
      // interpolation identity and capability bound
      std::vector<lp::RowEntry> sum_row, soc_row, cap_row;
      for (int k = 0; k <= N; ++k) {
        sum_row.push_back({lam[k], 1.0});
        soc_row.push_back({lam[k], (*anchors[side])[k]});
        cap_row.push_back({lam[k], -w_max * eta_at_anchor[side][k]});
      }
      soc_row.push_back({DispatchLp::soc(h), -100.0});
      cap_row.push_back({wvar, 1.0});
      lp.add_row(1.0, 1.0, sum_row);
      lp.add_row(0.0, 0.0, soc_row);
      lp.add_row(-lp::kInf, 0.0, cap_row);
      // adjacency: lambda_k active only next to the chosen segment
      for (int k = 0; k <= N; ++k) {
        std::vector<lp::RowEntry> adj{{lam[k], 1.0}};
        if (k > 0) adj.push_back({z[k - 1], -1.0});
        if (k < N) adj.push_back({z[k], -1.0});
        lp.add_row(-lp::kInf, 0.0, adj);
      }
      std::vector<lp::RowEntry> zsum;
      for (int n = 0; n < N; ++n) zsum.push_back({z[n], 1.0});
      lp.add_row(1.0, 1.0, zsum);
    }
  }

  struct Node {
    double bound;
    std::int64_t id;
    std::vector<std::pair<int, int>> fixes;
    lp::Basis basis;
  };
  auto cmp = [](const Node& a, const Node& b) {
    return a.bound > b.bound || (a.bound == b.bound && a.id > b.id);
  };
  std::priority_queue<Node, std::vector<Node>, decltype(cmp)> open(cmp);

  std::int64_t next_id = 0;
  open.push(Node{-lp::kInf, next_id++, {}, lp::Basis{}});

  const double prune_tol = 1e-7 * std::max(1.0, std::abs(incumbent_obj));
  const lp::LpOptions lpo = lp_options(options);
  bool exhausted = true;

  while (!open.empty()) {
    if (stats.bb_nodes >= options.milp_node_limit) {
      exhausted = false;
      break;
    }
    if (std::isfinite(options.time_limit_s) &&
        seconds_since(t0) > options.time_limit_s) {
      exhausted = false;
      break;
    }
    Node node = open.top();
    open.pop();
    if (node.bound >= incumbent_obj - prune_tol && node.bound != -lp::kInf)
      continue;
    ++stats.bb_nodes;

    for (int zv : z_vars) lp.set_var_bounds(zv, 0.0, 1.0);
    for (const auto& [var, val] : node.fixes)
      lp.set_var_bounds(var, val, val);

    const lp::LpResult res =
        lp::solve_lp(lp, lpo, node.basis.empty() ? nullptr : &node.basis);
    stats.lp_iterations += res.iterations;
    if (res.status == lp::LpStatus::infeasible) continue;
    if (res.status != lp::LpStatus::optimal) {
      exhausted = false;
      continue;
    }
    if (res.objective >= incumbent_obj - prune_tol) continue;

    int branch_var = -1;
    double best_frac = 0.0;
    for (int zv : z_vars) {
      const double frac = std::min(res.x[zv], 1.0 - res.x[zv]);
      if (frac > 1e-6 && frac > best_frac + 1e-12) {
        best_frac = frac;
        branch_var = zv;
      }
    }
    if (branch_var < 0) {
      // integral: new incumbent
      incumbent_obj = res.objective;
      incumbent = extract_solution(problem, res.x);
      continue;
    }
    for (int val : {0, 1}) {
      Node child;
      child.bound = res.objective;
      child.id = next_id++;
      child.fixes = node.fixes;
      child.fixes.emplace_back(branch_var, val);
      child.basis = res.basis;
      open.push(std::move(child));
    }
  }

  incumbent.stats = stats;
  incumbent.stats.status =
      exhausted ? SolveStatus::optimal
                : (stats.bb_nodes >= options.milp_node_limit
                       ? SolveStatus::iteration_limit
                       : SolveStatus::time_limit);
  incumbent.stats.wall_time_s = seconds_since(t0);
  incumbent.objective_usd = profit(incumbent, problem.prices);
  return incumbent;
}

DispatchSolution solve_dispatch(const DispatchProblem& problem,
                                const SolveOptions& options) {
  switch (problem.spec.family) {
    case ModelFamily::a: return solve_model_a(problem, options);
    case ModelFamily::b: return solve_convex_b(problem, options);
    default: return solve_piecewise_lp(problem, options);
  }
}

TimingResult time_solve(const DispatchProblem& problem,
                        const SolveOptions& options, int repetitions) {
  TimingResult out;
  for (int rep = 0; rep < repetitions; ++rep) {
    DispatchSolution sol = solve_dispatch(problem, options);
    out.runs.push_back(sol.stats);
    out.objectives.push_back(sol.objective_usd);
    if (rep + 1 == repetitions) out.last = std::move(sol);
  }
  return out;
}

}  // namespace ptes
