#include "ptes/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#include "ptes/errors.hpp"

namespace ptes {

double rmsd_soc(const DispatchSolution& sol, const DispatchSolution& ref) {
  const std::size_t H = sol.soc.size();
  if (H != ref.soc.size()) throw LengthMismatch("rmsd_soc: horizons differ");
  double acc = 0.0;
  for (std::size_t h = 0; h < H; ++h) {
    const double d = 100.0 * (sol.soc[h] - ref.soc[h]);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(H));
}

double rmsd_w(const DispatchSolution& sol, const DispatchSolution& ref,
              const PtesDesign& design) {
  const std::size_t H = sol.w_ch_kw.size();
  if (H != ref.w_ch_kw.size() || sol.w_dis_kw.size() != ref.w_dis_kw.size() ||
      H != sol.w_dis_kw.size())
    throw LengthMismatch("rmsd_w: horizons differ");
  double acc = 0.0;
  for (std::size_t h = 0; h < H; ++h) {
    const double d = 100.0 / design.w_ch_max_kw * (sol.w_ch_kw[h] - ref.w_ch_kw[h]) +
                     100.0 / design.w_dis_max_kw * (sol.w_dis_kw[h] - ref.w_dis_kw[h]);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(H));
}

double fom(double rmsd_soc_pct, double rmsd_w_pct, double time_ratio,
           double speed_weight) {
  const double a = rmsd_soc_pct / 100.0;
  const double b = rmsd_w_pct / 100.0;
  const double c = speed_weight * time_ratio;
  return 1.0 / std::sqrt(a * a + b * b + c * c);
}

double DurationEcdf::fraction_at(double hours) const {
  double f = 0.0;
  for (std::size_t i = 0; i < duration_h.size(); ++i) {
    if (duration_h[i] <= hours + 1e-12) f = energy_fraction[i];
    else break;
  }
  return f;
}

double DurationEcdf::mean_duration_h() const {
  double mean = 0.0, prev = 0.0;
  for (std::size_t i = 0; i < duration_h.size(); ++i) {
    mean += duration_h[i] * (energy_fraction[i] - prev);
    prev = energy_fraction[i];
  }
  return mean;
}

DurationEcdf storage_duration_ecdf(const DispatchSolution& sol,
                                   const PtesDesign& d, double tolerance_kwh) {
  const int H = static_cast<int>(sol.w_ch_kw.size());
  struct Parcel {
    int born;
    double kwh;
  };
  std::deque<Parcel> ledger;
  // wrap state: whatever the cyclic solution stores entering hour 1
  if (!sol.soc.empty() && sol.soc.back() > 0.0)
    ledger.push_back({0, sol.soc.back() * d.energy_capacity_kwh});

  std::map<double, double> energy_by_duration;
  double discharged_total = 0.0;

  for (int h = 0; h < H; ++h) {
    for (Parcel& p : ledger) p.kwh *= 1.0 - d.gamma_per_hour;
    const double charged = d.alpha_ch * sol.w_ch_kw[h] * d.eta_mg;
    if (charged > 0.0) ledger.push_back({h + 1, charged});
    double to_discharge = d.alpha_dis * sol.w_dis_kw[h] / d.eta_mg;
    discharged_total += to_discharge;
    while (to_discharge > tolerance_kwh) {
      if (ledger.empty())
        throw LedgerUnderflow("discharge exceeds stored energy at hour " +
                              std::to_string(h + 1));
      Parcel& oldest = ledger.front();
      const double take = std::min(oldest.kwh, to_discharge);
      energy_by_duration[static_cast<double>(h + 1 - oldest.born)] += take;
      oldest.kwh -= take;
      to_discharge -= take;
      if (oldest.kwh <= tolerance_kwh) ledger.pop_front();
    }
  }

  DurationEcdf ecdf;
  ecdf.total_discharged_kwh = discharged_total;
  double cum = 0.0;
  for (const auto& [duration, kwh] : energy_by_duration) {
    cum += kwh;
    ecdf.duration_h.push_back(duration);
    ecdf.energy_fraction.push_back(discharged_total > 0.0 ? cum / discharged_total
                                                          : 0.0);
  }
  if (!ecdf.energy_fraction.empty()) ecdf.energy_fraction.back() = 1.0;
  return ecdf;
}

TradeoffRecord make_tradeoff_record(const std::string& model_tag,
                                    const std::string& series_label,
                                    int run_index, const DispatchSolution& sol,
                                    const DispatchSolution& reference,
                                    const PtesDesign& design, double wall_time_s,
                                    double reference_wall_time_s) {
  TradeoffRecord rec;
  rec.model_tag = model_tag;
  rec.series_label = series_label;
  rec.run_index = run_index;
  rec.rmsd_soc_pct = rmsd_soc(sol, reference);
  rec.rmsd_w_pct = rmsd_w(sol, reference, design);
  rec.time_ratio = reference_wall_time_s > 0.0
                       ? wall_time_s / reference_wall_time_s
                       : 0.0;
  rec.fom_equal = fom(rec.rmsd_soc_pct, rec.rmsd_w_pct, rec.time_ratio, 1.0);
  rec.fom_speed = fom(rec.rmsd_soc_pct, rec.rmsd_w_pct, rec.time_ratio, 10.0);
  return rec;
}

std::vector<TradeoffSummary> tradeoff_table(
    const std::vector<TradeoffRecord>& records) {
  std::map<std::string, std::vector<const TradeoffRecord*>> by_model;
  std::vector<std::string> order;
  for (const TradeoffRecord& r : records) {
    if (by_model.find(r.model_tag) == by_model.end()) order.push_back(r.model_tag);
    by_model[r.model_tag].push_back(&r);
  }

  std::vector<TradeoffSummary> out;
  for (const std::string& tag : order) {
    const auto& rs = by_model[tag];
    TradeoffSummary s;
    s.model_tag = tag;
    s.count = static_cast<int>(rs.size());
    auto fold = [&](auto get, double& mean, double& lo, double& hi) {
      mean = 0.0;
      lo = get(*rs.front());
      hi = lo;
      for (const TradeoffRecord* r : rs) {
        const double v = get(*r);
        mean += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      mean /= static_cast<double>(rs.size());
    };
    fold([](const TradeoffRecord& r) { return r.rmsd_soc_pct; }, s.mean_rmsd_soc,
         s.min_rmsd_soc, s.max_rmsd_soc);
    fold([](const TradeoffRecord& r) { return r.rmsd_w_pct; }, s.mean_rmsd_w,
         s.min_rmsd_w, s.max_rmsd_w);
    fold([](const TradeoffRecord& r) { return r.time_ratio; }, s.mean_time_ratio,
         s.min_time_ratio, s.max_time_ratio);
    fold([](const TradeoffRecord& r) { return r.fom_equal; }, s.mean_fom_equal,
         s.min_fom_equal, s.max_fom_equal);
    fold([](const TradeoffRecord& r) { return r.fom_speed; }, s.mean_fom_speed,
         s.min_fom_speed, s.max_fom_speed);
    for (const TradeoffRecord* r : rs) {
      const double dt = r->time_ratio - s.mean_time_ratio;
      const double ds = r->rmsd_soc_pct - s.mean_rmsd_soc;
      const double dw = r->rmsd_w_pct - s.mean_rmsd_w;
      s.cov_tt += dt * dt;
      s.cov_t_soc += dt * ds;
      s.cov_soc_soc += ds * ds;
      s.cov_t_w += dt * dw;
      s.cov_w_w += dw * dw;
    }
    const double n = static_cast<double>(rs.size());
    s.cov_tt /= n;
    s.cov_t_soc /= n;
    s.cov_soc_soc /= n;
    s.cov_t_w /= n;
    s.cov_w_w /= n;
    out.push_back(s);
  }
  return out;
}

}  // namespace ptes
