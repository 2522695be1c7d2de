#pragma once

#include <string>
#include <vector>

#include "ptes/design.hpp"
#include "ptes/dispatch.hpp"

namespace ptes {

// Accuracy and speed of one model run against the Model A reference.
struct TradeoffRecord {
  std::string model_tag;
  std::string series_label;
  int run_index = 0;
  double rmsd_soc_pct = 0.0;
  double rmsd_w_pct = 0.0;
  double time_ratio = 0.0;  // wall time over Model A's on the same instance
  double fom_equal = 0.0;
  double fom_speed = 0.0;   // computation weighted ten times higher
};

// RMSD of the SoC trajectories in percentage points.
double rmsd_soc(const DispatchSolution& sol, const DispatchSolution& ref);

// RMSD of operations: charge and discharge deviations are normalized by their
// nameplates, scaled to percent and summed inside the square per hour.
double rmsd_w(const DispatchSolution& sol, const DispatchSolution& ref,
              const PtesDesign& design);

// Inverse distance from the origin in (rmsd_soc/100, rmsd_w/100,
// speed_weight * time_ratio) space. speed_weight = 1 treats accuracy and
// speed equally; 10 is the speed-favoring variant.
double fom(double rmsd_soc_pct, double rmsd_w_pct, double time_ratio,
           double speed_weight = 1.0);

// Cumulative distribution of how long discharged energy sat in the store.
struct DurationEcdf {
  std::vector<double> duration_h;       // non-decreasing
  std::vector<double> energy_fraction;  // non-decreasing into 1.0
  double total_discharged_kwh = 0.0;

  // fraction of discharged energy stored at most `hours`
  double fraction_at(double hours) const;
  double mean_duration_h() const;
};

// FIFO ledger over thermal parcels: each charge hour books
// alpha_ch*w_ch*eta_mg, every live parcel decays by (1-gamma) per hour, and
// discharge consumes alpha_dis*w_dis/eta_mg from the oldest parcels. The
// store's initial content (the wrap state) is booked at hour zero.
// Throws LedgerUnderflow if discharge exceeds content beyond tolerance.
DurationEcdf storage_duration_ecdf(const DispatchSolution& sol,
                                   const PtesDesign& design,
                                   double tolerance_kwh = 1e-6);

TradeoffRecord make_tradeoff_record(const std::string& model_tag,
                                    const std::string& series_label,
                                    int run_index,
                                    const DispatchSolution& sol,
                                    const DispatchSolution& reference,
                                    const PtesDesign& design,
                                    double wall_time_s,
                                    double reference_wall_time_s);

// Per-model aggregate over datasets and runs.
struct TradeoffSummary {
  std::string model_tag;
  int count = 0;
  double mean_rmsd_soc = 0.0, min_rmsd_soc = 0.0, max_rmsd_soc = 0.0;
  double mean_rmsd_w = 0.0, min_rmsd_w = 0.0, max_rmsd_w = 0.0;
  double mean_time_ratio = 0.0, min_time_ratio = 0.0, max_time_ratio = 0.0;
  double mean_fom_equal = 0.0, min_fom_equal = 0.0, max_fom_equal = 0.0;
  double mean_fom_speed = 0.0, min_fom_speed = 0.0, max_fom_speed = 0.0;
  // 2x2 covariances of (time_ratio, rmsd); population convention
  double cov_tt = 0.0, cov_t_soc = 0.0, cov_soc_soc = 0.0;
  double cov_t_w = 0.0, cov_w_w = 0.0;
};

std::vector<TradeoffSummary> tradeoff_table(
    const std::vector<TradeoffRecord>& records);

}  // namespace ptes
