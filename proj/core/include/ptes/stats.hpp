#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace ptes {

enum class SolveStatus { optimal, iteration_limit, time_limit, infeasible };

std::string to_string(SolveStatus s);

// Options shared by the dispatch solvers.
struct SolveOptions {
  double feasibility_tol = 1e-7;
  double cut_violation_tol = 1e-5;  // on the capability fraction
  int max_cut_rounds = 200;
  double damping = 0.5;             // theta of the part-load fixed point
  double p_tol = 1e-4;
  int max_fixed_point_iterations = 60;
  double time_limit_s = std::numeric_limits<double>::infinity();

  // tangent seed locations (percent SoC, both sides); empty = per-side default
  std::vector<double> initial_cut_socs;

  int milp_max_horizon = 336;
  std::int64_t milp_node_limit = 200000;
  std::int64_t lp_max_iterations = 0;  // 0: scale with size
};

struct SolveStats {
  double wall_time_s = 0.0;
  std::int64_t lp_iterations = 0;
  int cut_rounds = 0;
  int cuts_added = 0;
  int fixed_point_iterations = 0;
  std::int64_t bb_nodes = 0;
  double final_max_violation = 0.0;  // capability fraction
  SolveStatus status = SolveStatus::optimal;
  bool p_floor_used = false;  // part-load clamped to the fitted range

  // per cut round, for convergence inspection
  std::vector<double> round_objectives;
  std::vector<double> round_max_violations;
};

}  // namespace ptes
