#pragma once

#include <string>
#include <vector>

#include "ptes/capability.hpp"
#include "ptes/design.hpp"
#include "ptes/dispatch.hpp"
#include "ptes/stats.hpp"

namespace ptes {

struct VreResource {
  std::string name;
  int zone = 0;
  double inv_cost_usd_per_kw_yr = 0.0;
  double var_cost_usd_per_mwh = 0.0;
  std::vector<double> capacity_factor;  // hourly, full year
};

enum class StorageKind { li_ion, ptes };

struct StorageResource {
  std::string name;
  int zone = 0;
  StorageKind kind = StorageKind::li_ion;
  double inv_cost_power_usd_per_kw_yr = 0.0;   // on discharge capacity
  double inv_cost_energy_usd_per_kwh_yr = 0.0;
  double var_cost_usd_per_mwh = 0.0;           // on discharge
  double charge_ratio = 1.0;                   // charge cap over discharge cap
  // li-ion conversion; PTES uses the design's alpha/eta_mg/gamma instead
  double charge_efficiency = 0.95;
  double discharge_efficiency = 0.95;
  double leakage_per_hour = 0.0;
  PtesDesign ptes;  // alpha_ch/alpha_dis/eta_mg/gamma when kind == ptes
};

struct TransmissionLine {
  int zone_from = 0;
  int zone_to = 0;
  double limit_kw = 0.0;
};

struct CemSystem {
  std::vector<std::string> zone_names;
  std::vector<std::vector<double>> demand_kw;  // [zone][hour], full year
  std::vector<VreResource> vre;
  std::vector<StorageResource> storage;
  std::vector<TransmissionLine> lines;
  double voll_usd_per_mwh = 20000.0;  // lost-load penalty

  int hours() const { return demand_kw.empty() ? 0 : (int)demand_kw[0].size(); }
  void validate_or_throw() const;
};

// Bundled three-zone test system with synthetic demand and weather, two PTES
// and two Li-ion units, solar and wind in every zone.
CemSystem toy_three_zone_system();

struct RepresentativePeriods {
  int period_hours = 168;
  std::vector<int> representative_week;  // period -> calendar week
  std::vector<double> weight;            // weeks represented, sums to 52
  std::vector<int> assignment;           // calendar week -> period

  int count() const { return static_cast<int>(weight.size()); }
  void validate_or_throw() const;
};

// k-means over min-max normalized weekly profiles; the representative of a
// cluster is its member week closest to the centroid. Deterministic for a
// fixed seed; empty clusters re-seed deterministically a bounded number of
// times before EmptyCluster is thrown.
RepresentativePeriods cluster_weeks(const std::vector<std::vector<double>>& streams,
                                    int k, unsigned seed = 17);

struct CemProblem {
  CemSystem system;
  RepresentativePeriods periods;
  CapabilitySpec ptes_spec;
  bool is_linear = false;  // true only for Model E (no bilinear rows)
};

CemProblem build_cem(const CemSystem& system, const RepresentativePeriods& periods,
                     const CapabilitySpec& ptes_spec);

struct CemOptions {
  double trust_initial = 0.2;     // +-20% around the incumbent capacities
  double trust_shrink = 0.5;
  double trust_expand = 1.5;
  double trust_min = 1e-4;
  double obj_tol_rel = 1e-3;      // SLP termination on relative cost change
  int max_slp_iterations = 40;
  int max_inner_rounds = 12;      // violated-point rows per linearization
  double cut_violation_tol = 1e-5;
  double feasibility_tol = 1e-7;
  double time_limit_s = std::numeric_limits<double>::infinity();
};

struct CemSolution {
  std::vector<double> vre_capacity_kw;
  std::vector<double> storage_power_kw;    // discharge basis
  std::vector<double> storage_energy_kwh;

  // dispatch of the representative periods: [resource][period][hour]
  std::vector<std::vector<std::vector<double>>> gen_kw;
  std::vector<std::vector<std::vector<double>>> ch_kw, dis_kw;
  std::vector<std::vector<std::vector<double>>> soc_kwh;  // hour 0 = period start
  std::vector<std::vector<double>> week_boundary_kwh;     // [storage][52]

  double total_cost_usd = 0.0;
  double investment_cost_usd = 0.0;
  double operating_cost_usd = 0.0;
  double nse_cost_usd = 0.0;
  double nse_kwh = 0.0;

  SolveStatus status = SolveStatus::optimal;
  int slp_iterations = 0;
  std::int64_t lp_iterations = 0;
  double wall_time_s = 0.0;
  double max_capability_violation = 0.0;  // against the true constraint
  double max_balance_residual_kw = 0.0;

  // energy-capacity weighted mean SoC over all weighted weeks, percent
  double mean_ptes_soc_pct = 0.0;
};

// Successive linearization with a trust region on the bilinear capability
// rows, initialized from the Model E solution. Model E itself is one LP.
CemSolution solve_cem(const CemProblem& problem, const CemOptions& options = {});

// Full-year hourly operation of one storage unit, stitched from the
// representative periods over the 52-week assignment with the boundary-state
// offsets applied.
struct StitchedOperation {
  std::vector<double> ch_kw, dis_kw, soc_kwh;
};
StitchedOperation stitch_year(const CemProblem& problem, const CemSolution& sol,
                              int storage_index);

struct CemReportRow {
  std::string model_tag;
  double total_cost_usd = 0.0;
  double delta_vs_e_pct = 0.0;
  double mean_ptes_soc_pct = 0.0;
};

struct CemReport {
  std::vector<CemReportRow> costs;
  // capacity per (model, resource name)
  struct CapacityRow {
    std::string model_tag, resource;
    double power_kw = 0.0, energy_kwh = 0.0;
  };
  std::vector<CapacityRow> capacities;
};

CemReport cem_report(const std::vector<std::pair<std::string, CemSolution>>& runs,
                     const CemSystem& system);

}  // namespace ptes
