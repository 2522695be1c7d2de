#pragma once

#include <vector>

#include "ptes/dispatch.hpp"
#include "ptes/stats.hpp"

namespace ptes {

// Tangent line to the capability at soc0 (percent): for a concave side,
// eta(s) <= slope*s + intercept everywhere, so w <= (slope*s + intercept)*W
// is a valid relaxation of the capability bound.
LinearSegment tangent_cut(const Capability& cap, Side side, double p,
                          double soc0_pct);

// Direct LP path for the linear-representable variants C, D, D2 and E.
DispatchSolution solve_piecewise_lp(const DispatchProblem& problem,
                                    const SolveOptions& options = {});

// Outer approximation for the concave Model B variants: tangent cuts of the
// capability curve are valid relaxations; the most violated hour gets one new
// cut per round until the capability violation drops under tolerance.
DispatchSolution solve_convex_b(const DispatchProblem& problem,
                                const SolveOptions& options = {});

// Model A: damped fixed point on the part-load profile around the Model B
// cut loop. Starts from p == 1 (the B:M relaxation).
DispatchSolution solve_model_a(const DispatchProblem& problem,
                               const SolveOptions& options = {});

// Integer-variable formulation of the C variants (interpolation weights with
// adjacency binaries), solved by best-bound branch and bound. Horizon capped
// by options.milp_max_horizon.
DispatchSolution solve_milp_piecewise(const DispatchProblem& problem,
                                      const SolveOptions& options = {});

// Routes to the right solver for the problem's variant.
DispatchSolution solve_dispatch(const DispatchProblem& problem,
                                const SolveOptions& options = {});

struct TimingResult {
  std::vector<SolveStats> runs;
  std::vector<double> objectives;
  DispatchSolution last;
};

// Repeats the full solve; every run is cold. Wall times feed the trade-off
// analysis, objectives double as a determinism check.
TimingResult time_solve(const DispatchProblem& problem,
                        const SolveOptions& options = {}, int repetitions = 5);

}  // namespace ptes
