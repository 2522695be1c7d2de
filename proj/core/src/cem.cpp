#include "ptes/cem.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <random>

#include "ptes/errors.hpp"
#include "ptes/lp.hpp"

namespace ptes {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr int kWeekHours = 168;
constexpr int kWeeks = 52;

double hash01(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a * 0x9E3779B97F4A7C15ull ^ (b + 0xD1B54A32D192ED03ull);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

}  // namespace

void CemSystem::validate_or_throw() const {
  if (zone_names.empty()) throw InconsistentNetwork("no zones");
  if (demand_kw.size() != zone_names.size())
    throw InconsistentNetwork("demand series count does not match zones");
  const int H = hours();
  if (H < kWeekHours) throw InconsistentNetwork("demand shorter than a week");
  for (const auto& d : demand_kw)
    if (static_cast<int>(d.size()) != H)
      throw InconsistentNetwork("zone demand lengths differ");
  const int Z = static_cast<int>(zone_names.size());
  for (const VreResource& r : vre) {
    if (r.zone < 0 || r.zone >= Z)
      throw InconsistentNetwork("vre resource " + r.name + " in unknown zone");
    if (static_cast<int>(r.capacity_factor.size()) != H)
      throw InconsistentNetwork("capacity factor length mismatch for " + r.name);
    for (double cf : r.capacity_factor)
      if (!(cf >= 0.0 && cf <= 1.0))
        throw InconsistentNetwork("capacity factor outside [0,1] for " + r.name);
    if (r.inv_cost_usd_per_kw_yr < 0.0 || r.var_cost_usd_per_mwh < 0.0)
      throw InconsistentNetwork("negative cost for " + r.name);
  }
  for (const StorageResource& s : storage) {
    if (s.zone < 0 || s.zone >= Z)
      throw InconsistentNetwork("storage " + s.name + " in unknown zone");
    if (s.charge_ratio <= 0.0)
      throw InconsistentNetwork("non-positive charge ratio for " + s.name);
    if (s.kind == StorageKind::ptes) s.ptes.validate_or_throw();
  }
  for (const TransmissionLine& l : lines) {
    if (l.zone_from < 0 || l.zone_from >= Z || l.zone_to < 0 || l.zone_to >= Z ||
        l.zone_from == l.zone_to)
      throw InconsistentNetwork("line endpoints invalid");
    if (l.limit_kw < 0.0) throw InconsistentNetwork("negative line limit");
  }
}

void RepresentativePeriods::validate_or_throw() const {
  if (period_hours != kWeekHours)
    throw InconsistentNetwork("periods must be one week long");
  if (weight.size() != representative_week.size() || weight.empty())
    throw InconsistentNetwork("period metadata inconsistent");
  if (static_cast<int>(assignment.size()) != kWeeks)
    throw InconsistentNetwork("assignment must cover 52 weeks");
  double total = 0.0;
  for (double w : weight) {
    if (w < 1.0) throw InconsistentNetwork("period weight below one");
    total += w;
  }
  if (std::abs(total - kWeeks) > 1e-9)
    throw InconsistentNetwork("period weights must sum to 52");
  for (int a : assignment)
    if (a < 0 || a >= count())
      throw InconsistentNetwork("assignment references unknown period");
}

// --- clustering ---------------------------------------------------------------

RepresentativePeriods cluster_weeks(const std::vector<std::vector<double>>& streams,
                                    int k, unsigned seed) {
  if (streams.empty()) throw InconsistentNetwork("no series to cluster");
  if (k < 1 || k > kWeeks) throw InconsistentNetwork("period count outside 1..52");
  const int H = static_cast<int>(streams[0].size());
  if (H < kWeeks * kWeekHours)
    throw InconsistentNetwork("series shorter than 52 weeks");

  // min-max normalize each stream, then concatenate weekly slices
  const int F = static_cast<int>(streams.size()) * kWeekHours;
  std::vector<std::vector<double>> features(kWeeks, std::vector<double>(F, 0.0));
  for (std::size_t s = 0; s < streams.size(); ++s) {
    double lo = streams[s][0], hi = streams[s][0];
    for (double v : streams[s]) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double span = hi - lo > 1e-12 ? hi - lo : 1.0;
    for (int w = 0; w < kWeeks; ++w)
      for (int t = 0; t < kWeekHours; ++t)
        features[w][s * kWeekHours + t] =
            (streams[s][w * kWeekHours + t] - lo) / span;
  }

  auto dist2 = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (int i = 0; i < F; ++i) {
      const double d = a[i] - b[i];
      acc += d * d;
    }
    return acc;
  };

  for (unsigned attempt = 0; attempt < 8; ++attempt) {
    std::mt19937 rng(seed + attempt);
    // k-means++ seeding
    std::vector<std::vector<double>> centroids;
    std::uniform_int_distribution<int> first(0, kWeeks - 1);
    centroids.push_back(features[first(rng)]);
    std::vector<double> d2(kWeeks);
    while (static_cast<int>(centroids.size()) < k) {
      double total = 0.0;
      for (int w = 0; w < kWeeks; ++w) {
        d2[w] = dist2(features[w], centroids[0]);
        for (std::size_t c = 1; c < centroids.size(); ++c)
          d2[w] = std::min(d2[w], dist2(features[w], centroids[c]));
        total += d2[w];
      }
      std::uniform_real_distribution<double> pick(0.0, total);
      double r = pick(rng);
      int chosen = kWeeks - 1;
      for (int w = 0; w < kWeeks; ++w) {
        r -= d2[w];
        if (r <= 0.0) {
          chosen = w;
          break;
        }
      }
      centroids.push_back(features[chosen]);
    }

    std::vector<int> assign(kWeeks, 0);
    bool empty_cluster = false;
    for (int iter = 0; iter < 200; ++iter) {
      bool changed = false;
      for (int w = 0; w < kWeeks; ++w) {
        int best = 0;
        double best_d = dist2(features[w], centroids[0]);
        for (int c = 1; c < k; ++c) {
          const double d = dist2(features[w], centroids[c]);
          if (d < best_d) {
            best_d = d;
            best = c;
          }
        }
        if (assign[w] != best) {
          assign[w] = best;
          changed = true;
        }
      }
      std::vector<int> sizes(k, 0);
      for (int w = 0; w < kWeeks; ++w) sizes[assign[w]]++;
      empty_cluster = std::any_of(sizes.begin(), sizes.end(),
                                  [](int s) { return s == 0; });
      if (empty_cluster) break;
      for (int c = 0; c < k; ++c) {
        std::fill(centroids[c].begin(), centroids[c].end(), 0.0);
      }
      for (int w = 0; w < kWeeks; ++w)
        for (int i = 0; i < F; ++i) centroids[assign[w]][i] += features[w][i];
      for (int c = 0; c < k; ++c)
        for (int i = 0; i < F; ++i) centroids[c][i] /= sizes[c];
      if (!changed) break;
    }
    if (empty_cluster) continue;  // deterministic re-seed

    RepresentativePeriods out;
    out.period_hours = kWeekHours;
    out.assignment = assign;
    out.weight.assign(k, 0.0);
    out.representative_week.assign(k, -1);
    std::vector<double> best_d(k, std::numeric_limits<double>::infinity());
    for (int w = 0; w < kWeeks; ++w) {
      const int c = assign[w];
      out.weight[c] += 1.0;
      const double d = dist2(features[w], centroids[c]);
      if (d < best_d[c]) {
        best_d[c] = d;
        out.representative_week[c] = w;
      }
    }
    out.validate_or_throw();
    return out;
  }
  throw EmptyCluster("k-means produced an empty cluster in every attempt");
}

// --- toy system ----------------------------------------------------------------

CemSystem toy_three_zone_system() {
  CemSystem sys;
  sys.zone_names = {"MA", "CT", "ME"};
  const int H = 8760;
  const double base[3] = {950.0, 620.0, 310.0};

  sys.demand_kw.assign(3, std::vector<double>(H, 0.0));
  for (int z = 0; z < 3; ++z) {
    for (int h = 0; h < H; ++h) {
      const int t = h % 24;
      const int day = h / 24;
      const double diurnal = 0.16 * std::sin((t - 11.0) * 2.0 * M_PI / 24.0);
      const double weekly = 0.05 * std::sin((day % 7) * 2.0 * M_PI / 7.0);
      const double seasonal = 0.09 * std::cos((day - 15.0) * 2.0 * M_PI / 365.0) +
                              0.05 * std::cos((day - 15.0) * 4.0 * M_PI / 365.0);
      const double noise = 0.05 * (hash01(h, z) - 0.5);
      sys.demand_kw[z][h] = base[z] * (1.0 + diurnal + weekly + seasonal + noise);
    }
  }

  for (int z = 0; z < 3; ++z) {
    VreResource solar;
    solar.name = "solar_" + sys.zone_names[z];
    solar.zone = z;
    solar.inv_cost_usd_per_kw_yr = 55.0;
    solar.var_cost_usd_per_mwh = 0.1;
    solar.capacity_factor.resize(H);
    VreResource wind;
    wind.name = "wind_" + sys.zone_names[z];
    wind.zone = z;
    wind.inv_cost_usd_per_kw_yr = 95.0;
    wind.var_cost_usd_per_mwh = 0.2;
    wind.capacity_factor.resize(H);
    for (int h = 0; h < H; ++h) {
      const int t = h % 24;
      const int day = h / 24;
      const double daylight = std::max(0.0, std::sin((t - 6.0) * M_PI / 12.0));
      const double season = 0.72 + 0.28 * std::cos((day - 172.0) * 2.0 * M_PI / 365.0);
      const double weather = 0.55 + 0.45 * hash01(day, 10 + z);
      solar.capacity_factor[h] =
          std::clamp(std::pow(daylight, 1.2) * season * weather, 0.0, 1.0);
      // wind varies on 8-hour blocks, interpolated for smoothness
      const int block = h / 8;
      const double n0 = hash01(block, 20 + z), n1 = hash01(block + 1, 20 + z);
      const double frac = (h % 8) / 8.0;
      const double gust = n0 + (n1 - n0) * frac;
      const double wind_season =
          0.30 + 0.14 * std::cos((day - 20.0 - 30.0 * z) * 2.0 * M_PI / 365.0);
      wind.capacity_factor[h] = std::clamp(wind_season + 0.38 * gust, 0.01, 0.95);
    }
    sys.vre.push_back(std::move(solar));
    sys.vre.push_back(std::move(wind));
  }

  auto li_ion = [&](int z) {
    StorageResource s;
    s.name = "liion_" + sys.zone_names[z];
    s.zone = z;
    s.kind = StorageKind::li_ion;
    s.inv_cost_power_usd_per_kw_yr = 45.0;
    s.inv_cost_energy_usd_per_kwh_yr = 18.0;
    s.var_cost_usd_per_mwh = 0.5;
    s.charge_ratio = 1.0;
    s.charge_efficiency = 0.92;
    s.discharge_efficiency = 0.92;
    s.leakage_per_hour = 0.0;
    return s;
  };
  auto ptes = [&](int z) {
    StorageResource s;
    s.name = "ptes_" + sys.zone_names[z];
    s.zone = z;
    s.kind = StorageKind::ptes;
    s.inv_cost_power_usd_per_kw_yr = 110.0;
    s.inv_cost_energy_usd_per_kwh_yr = 2.2;
    s.var_cost_usd_per_mwh = 0.5;
    s.charge_ratio = 1.5;  // shared turbomachinery, grid-side asymmetry
    s.ptes = PtesDesign::reference();
    return s;
  };
  sys.storage.push_back(li_ion(0));
  sys.storage.push_back(li_ion(1));
  sys.storage.push_back(ptes(0));
  sys.storage.push_back(ptes(2));

  sys.lines.push_back({0, 1, 400.0});
  sys.lines.push_back({0, 2, 250.0});
  sys.voll_usd_per_mwh = 20000.0;
  return sys;
}

// --- problem -------------------------------------------------------------------

CemProblem build_cem(const CemSystem& system, const RepresentativePeriods& periods,
                     const CapabilitySpec& ptes_spec) {
  system.validate_or_throw();
  periods.validate_or_throw();
  CemProblem p;
  p.system = system;
  p.periods = periods;
  p.ptes_spec = ptes_spec;
  p.is_linear = ptes_spec.family == ModelFamily::e;
  return p;
}

namespace {

// conversion factors of one storage unit
struct StorageModel {
  double f_ch = 1.0;    // stored kWh per charged kWh-e
  double f_dis = 1.0;   // stored kWh per discharged kWh-e
  double decay = 1.0;   // per hour
};

StorageModel storage_model(const StorageResource& s) {
  StorageModel m;
  if (s.kind == StorageKind::ptes) {
    m.f_ch = s.ptes.alpha_ch * s.ptes.eta_mg;
    m.f_dis = s.ptes.alpha_dis / s.ptes.eta_mg;
    m.decay = 1.0 - s.ptes.gamma_per_hour;
  } else {
    m.f_ch = s.charge_efficiency;
    m.f_dis = 1.0 / s.discharge_efficiency;
    m.decay = 1.0 - s.leakage_per_hour;
  }
  return m;
}

struct CemIndex {
  int K = 0, T = kWeekHours, Z = 0, V = 0, S = 0, L = 0;
  int vre_cap0 = 0, sto_p0 = 0, sto_e0 = 0;
  int gen0 = 0, ch0 = 0, dis0 = 0, soc0 = 0, nse0 = 0, flow0 = 0;
  int q0 = 0, excmax0 = 0, excmin0 = 0;
  int total = 0;

  int vre_cap(int v) const { return vre_cap0 + v; }
  int sto_p(int s) const { return sto_p0 + s; }
  int sto_e(int s) const { return sto_e0 + s; }
  int gen(int v, int k, int t) const { return gen0 + (v * K + k) * T + t; }
  int ch(int s, int k, int t) const { return ch0 + (s * K + k) * T + t; }
  int dis(int s, int k, int t) const { return dis0 + (s * K + k) * T + t; }
  int soc(int s, int k, int t) const { return soc0 + (s * K + k) * (T + 1) + t; }
  int nse(int z, int k, int t) const { return nse0 + (z * K + k) * T + t; }
  int flow(int l, int k, int t) const { return flow0 + (l * K + k) * T + t; }
  int q(int s, int w) const { return q0 + s * kWeeks + w; }
  int excmax(int s, int k) const { return excmax0 + s * K + k; }
  int excmin(int s, int k) const { return excmin0 + s * K + k; }
};

// one linearized capability row; sigma anchors are kept so the row can be
// re-derived around a new incumbent
struct CapRow {
  int row = 0;
  int s = 0, k = 0, t = 0;   // t indexes the within-period hour (1..T in soc)
  Side side = Side::charge;
  double sigma_anchor = 0.0;  // percent
  double p_anchor = 1.0;      // Model A part load at the anchor
};

class CemSolver {
 public:
  CemSolver(const CemProblem& problem, const CemOptions& options)
      : problem_(problem), options_(options), cap_(problem.ptes_spec) {
    const CemSystem& sys = problem_.system;
    ix_.K = problem_.periods.count();
    ix_.Z = static_cast<int>(sys.zone_names.size());
    ix_.V = static_cast<int>(sys.vre.size());
    ix_.S = static_cast<int>(sys.storage.size());
    ix_.L = static_cast<int>(sys.lines.size());
    for (const StorageResource& s : sys.storage) models_.push_back(storage_model(s));
    peak_demand_ = 0.0;
    for (int t = 0; t < sys.hours(); ++t) {
      double d = 0.0;
      for (int z = 0; z < ix_.Z; ++z) d += sys.demand_kw[z][t];
      peak_demand_ = std::max(peak_demand_, d);
    }
  }

  CemSolution run() {
    const auto t0 = Clock::now();
    CemSolution sol;

    // stage 1: the fully linear Model E problem seeds the incumbent
    lp::LpInstance lp_e;
    std::vector<CapRow> no_rows;
    build_instance(lp_e, CapabilitySpec::model_e(), &no_rows);
    lp::LpResult res = lp::solve_lp(lp_e, lp_options());
    if (std::getenv("PTES_CEM_DEBUG"))
      std::fprintf(stderr,
                   "cem stage1: status=%d iters=%lld obj=%.2f bound_viol=%.3e\n",
                   static_cast<int>(res.status),
                   static_cast<long long>(res.iterations), res.objective,
                   res.max_bound_violation);
    sol.lp_iterations += res.iterations;
    if (res.status != lp::LpStatus::optimal) {
      sol.status = res.status == lp::LpStatus::time_limit
                       ? SolveStatus::time_limit
                       : SolveStatus::iteration_limit;
      extract(res.x, sol);
      sol.wall_time_s = seconds_since(t0);
      return sol;
    }
    std::vector<double> incumbent = res.x;

    if (problem_.is_linear) {
      extract(incumbent, sol);
      sol.status = SolveStatus::optimal;
      sol.max_capability_violation = true_violation(incumbent);
      sol.wall_time_s = seconds_since(t0);
      return sol;
    }

    // stage 2: successive linearization with a trust region
    lp::LpInstance lp;
    cap_rows_.clear();
    build_instance(lp, problem_.ptes_spec, &cap_rows_);

    double tau = options_.trust_initial;
    double last_accepted_cost = objective_of(incumbent);
    bool have_feasible = false;
    std::vector<double> best = incumbent;
    // the stage-2 instance shares the leading rows, so the Model E basis maps
    lp::Basis warm = res.basis;

    for (int it = 0; it < options_.max_slp_iterations; ++it) {
      ++sol.slp_iterations;
      rewrite_cap_rows(lp, incumbent);
      apply_trust_region(lp, incumbent, tau);

      res = lp::solve_lp(lp, lp_options(), warm.empty() ? nullptr : &warm);
      sol.lp_iterations += res.iterations;
      if (res.status != lp::LpStatus::optimal) break;

      // violated-point rows until the true constraint holds at the LP point
      int inner = 0;
      double viol = true_violation(res.x);
      while (viol > options_.cut_violation_tol &&
             inner < options_.max_inner_rounds) {
        add_violated_rows(lp, res.x);
        res = lp::solve_lp(lp, lp_options(), &res.basis);
        sol.lp_iterations += res.iterations;
        if (res.status != lp::LpStatus::optimal) break;
        viol = true_violation(res.x);
        ++inner;
      }
      if (res.status != lp::LpStatus::optimal) break;
      warm = res.basis;

      const double cost = objective_of(res.x);
      const bool feasible = viol <= options_.cut_violation_tol;
      const double rel_change =
          std::abs(cost - last_accepted_cost) / std::max(1.0, std::abs(cost));

      if (feasible) {
        const bool converged = have_feasible && rel_change <= options_.obj_tol_rel;
        best = res.x;
        have_feasible = true;
        last_accepted_cost = cost;
        incumbent = res.x;
        tau = std::min(options_.trust_initial, tau * options_.trust_expand);
        if (converged) {
          sol.status = SolveStatus::optimal;
          extract(best, sol);
          sol.max_capability_violation = true_violation(best);
          sol.wall_time_s = seconds_since(t0);
          return sol;
        }
      } else {
        incumbent = res.x;  // relinearize where the violation lives
        tau *= options_.trust_shrink;
        if (tau < options_.trust_min) break;
      }
      if (std::isfinite(options_.time_limit_s) &&
          seconds_since(t0) > options_.time_limit_s)
        break;
    }

    extract(have_feasible ? best : incumbent, sol);
    sol.max_capability_violation =
        true_violation(have_feasible ? best : incumbent);
    sol.status = SolveStatus::iteration_limit;  // exited without converging
    sol.wall_time_s = seconds_since(t0);
    return sol;
  }

 private:
  lp::LpOptions lp_options() const {
    lp::LpOptions o;
    o.feas_tol = options_.feasibility_tol;
    o.time_limit_s = options_.time_limit_s;
    return o;
  }

  int week_hour(int k, int t) const {
    return problem_.periods.representative_week[k] * kWeekHours + t;
  }

  bool is_ptes(int s) const {
    return problem_.system.storage[s].kind == StorageKind::ptes;
  }

  // Builds all structural variables and linear rows; capability rows for the
  // given spec are appended with placeholder coefficients and registered in
  // *rows for later rewriting (none for Model E).
  void build_instance(lp::LpInstance& lp, const CapabilitySpec& spec,
                      std::vector<CapRow>* rows) {
    const CemSystem& sys = problem_.system;
    const int K = ix_.K, T = ix_.T, Z = ix_.Z, V = ix_.V, S = ix_.S, L = ix_.L;

    ix_.vre_cap0 = 0;
    for (int v = 0; v < V; ++v)
      lp.add_variable(0.0, lp::kInf, sys.vre[v].inv_cost_usd_per_kw_yr);
    ix_.sto_p0 = lp.num_vars();
    for (int s = 0; s < S; ++s) {
      double cost = sys.storage[s].inv_cost_power_usd_per_kw_yr;
      // D2 prices nameplate so capability-weighted capacity cost is unchanged
      if (is_ptes(s) && spec.family == ModelFamily::d2)
        cost /= 2.0 * mean_capability([&](double soc) {
                 return eval_b(soc, Side::discharge, BLoad::full, spec.coeffs);
               });
      lp.add_variable(0.0, lp::kInf, cost);
    }
    ix_.sto_e0 = lp.num_vars();
    for (int s = 0; s < S; ++s)
      lp.add_variable(0.0, lp::kInf, sys.storage[s].inv_cost_energy_usd_per_kwh_yr);

    const auto& wt = problem_.periods.weight;
    ix_.gen0 = lp.num_vars();
    for (int v = 0; v < V; ++v)
      for (int k = 0; k < K; ++k)
        for (int t = 0; t < T; ++t)
          lp.add_variable(0.0, lp::kInf,
                          wt[k] * sys.vre[v].var_cost_usd_per_mwh * 1e-3);
    ix_.ch0 = lp.num_vars();
    for (int s = 0; s < S; ++s)
      for (int k = 0; k < K; ++k)
        for (int t = 0; t < T; ++t) lp.add_variable(0.0, lp::kInf, 0.0);
    ix_.dis0 = lp.num_vars();
    for (int s = 0; s < S; ++s)
      for (int k = 0; k < K; ++k)
        for (int t = 0; t < T; ++t)
          lp.add_variable(0.0, lp::kInf,
                          wt[k] * sys.storage[s].var_cost_usd_per_mwh * 1e-3);
    ix_.soc0 = lp.num_vars();
    for (int s = 0; s < S; ++s)
      for (int k = 0; k < K; ++k)
        for (int t = 0; t <= T; ++t) lp.add_variable(0.0, lp::kInf, 0.0);
    ix_.nse0 = lp.num_vars();
    for (int z = 0; z < Z; ++z)
      for (int k = 0; k < K; ++k)
        for (int t = 0; t < T; ++t)
          lp.add_variable(0.0, lp::kInf, wt[k] * sys.voll_usd_per_mwh * 1e-3);
    ix_.flow0 = lp.num_vars();
    for (int l = 0; l < L; ++l)
      for (int k = 0; k < K; ++k)
        for (int t = 0; t < T; ++t)
          lp.add_variable(-sys.lines[l].limit_kw, sys.lines[l].limit_kw, 0.0);
    ix_.q0 = lp.num_vars();
    for (int s = 0; s < S; ++s)
      for (int w = 0; w < kWeeks; ++w) lp.add_variable(0.0, lp::kInf, 0.0);
    ix_.excmax0 = lp.num_vars();
    for (int s = 0; s < S; ++s)
      for (int k = 0; k < K; ++k) lp.add_variable(0.0, lp::kInf, 0.0);
    ix_.excmin0 = lp.num_vars();
    for (int s = 0; s < S; ++s)
      for (int k = 0; k < K; ++k) lp.add_variable(-lp::kInf, 0.0, 0.0);
    ix_.total = lp.num_vars();

    // zone-hour balance
    for (int z = 0; z < Z; ++z) {
      for (int k = 0; k < K; ++k) {
        for (int t = 0; t < T; ++t) {
          std::vector<lp::RowEntry> row;
          for (int v = 0; v < V; ++v)
            if (sys.vre[v].zone == z) row.push_back({ix_.gen(v, k, t), 1.0});
          for (int s = 0; s < S; ++s)
            if (sys.storage[s].zone == z) {
              row.push_back({ix_.dis(s, k, t), 1.0});
              row.push_back({ix_.ch(s, k, t), -1.0});
            }
          for (int l = 0; l < L; ++l) {
            if (sys.lines[l].zone_from == z)
              row.push_back({ix_.flow(l, k, t), -1.0});
            else if (sys.lines[l].zone_to == z)
              row.push_back({ix_.flow(l, k, t), 1.0});
          }
          row.push_back({ix_.nse(z, k, t), 1.0});
          const double demand = sys.demand_kw[z][week_hour(k, t)];
          lp.add_row(demand, demand, row);
        }
      }
    }

    // vre availability
    for (int v = 0; v < V; ++v)
      for (int k = 0; k < K; ++k)
        for (int t = 0; t < T; ++t)
          lp.add_row(-lp::kInf, 0.0,
                     {{ix_.gen(v, k, t), 1.0},
                      {ix_.vre_cap(v), -sys.vre[v].capacity_factor[week_hour(k, t)]}});

    // nameplate power limits (capability rows tighten PTES further)
    for (int s = 0; s < S; ++s) {
      for (int k = 0; k < K; ++k) {
        for (int t = 0; t < T; ++t) {
          lp.add_row(-lp::kInf, 0.0,
                     {{ix_.dis(s, k, t), 1.0}, {ix_.sto_p(s), -1.0}});
          lp.add_row(-lp::kInf, 0.0,
                     {{ix_.ch(s, k, t), 1.0},
                      {ix_.sto_p(s), -sys.storage[s].charge_ratio}});
        }
      }
    }

    // storage dynamics and energy bounds
    for (int s = 0; s < S; ++s) {
      const StorageModel& m = models_[s];
      for (int k = 0; k < K; ++k) {
        for (int t = 1; t <= T; ++t) {
          lp.add_row(0.0, 0.0,
                     {{ix_.soc(s, k, t), 1.0},
                      {ix_.soc(s, k, t - 1), -m.decay},
                      {ix_.ch(s, k, t - 1), -m.f_ch},
                      {ix_.dis(s, k, t - 1), m.f_dis}});
        }
        for (int t = 0; t <= T; ++t)
          lp.add_row(-lp::kInf, 0.0,
                     {{ix_.soc(s, k, t), 1.0}, {ix_.sto_e(s), -1.0}});
        // excursion envelope relative to the period's own start
        for (int t = 0; t <= T; ++t) {
          const double decay_t = std::pow(m.decay, t);
          lp.add_row(-lp::kInf, 0.0,
                     {{ix_.soc(s, k, t), 1.0},
                      {ix_.soc(s, k, 0), -decay_t},
                      {ix_.excmax(s, k), -1.0}});
          lp.add_row(0.0, lp::kInf,
                     {{ix_.soc(s, k, t), 1.0},
                      {ix_.soc(s, k, 0), -decay_t},
                      {ix_.excmin(s, k), -1.0}});
        }
      }
      // chronological linkage across the 52-week assignment
      const double decay_week = std::pow(m.decay, kWeekHours);
      for (int w = 0; w < kWeeks; ++w) {
        const int prev = (w + kWeeks - 1) % kWeeks;
        const int k = problem_.periods.assignment[w];
        lp.add_row(0.0, 0.0,
                   {{ix_.q(s, w), 1.0},
                    {ix_.q(s, prev), -decay_week},
                    {ix_.soc(s, k, ix_.T), -1.0},
                    {ix_.soc(s, k, 0), decay_week}});
        // every realized week stays inside the store
        lp.add_row(0.0, lp::kInf,
                   {{ix_.q(s, prev), decay_week}, {ix_.excmin(s, k), 1.0}});
        lp.add_row(-lp::kInf, 0.0,
                   {{ix_.q(s, prev), 1.0},
                    {ix_.excmax(s, k), 1.0},
                    {ix_.sto_e(s), -1.0}});
        lp.add_row(-lp::kInf, 0.0,
                   {{ix_.q(s, w), 1.0}, {ix_.sto_e(s), -1.0}});
      }
    }

    // PTES capability rows, linearized around the running incumbent
    if (rows && spec.family != ModelFamily::e) {
      const Capability capability{spec};
      for (int s = 0; s < S; ++s) {
        if (!is_ptes(s)) continue;
        for (int k = 0; k < ix_.K; ++k) {
          for (int t = 1; t <= ix_.T; ++t) {
            auto seed = [&](Side side, double sigma) {
              CapRow r;
              r.s = s;
              r.k = k;
              r.t = t;
              r.side = side;
              r.sigma_anchor = sigma;
              const int wvar = side == Side::charge ? ix_.ch(s, k, t - 1)
                                                    : ix_.dis(s, k, t - 1);
              r.row = lp.add_row(-lp::kInf, 0.0,
                                 {{wvar, 1.0},
                                  {ix_.sto_p(s), -1.0},
                                  {ix_.soc(s, k, t), -1.0},
                                  {ix_.sto_e(s), -1.0}});
              rows->push_back(r);
            };
            switch (spec.family) {
              case ModelFamily::c: {
                const int n_ch = (int)capability.segments(Side::charge).size();
                for (int n = 0; n < n_ch; ++n) seed(Side::charge, -(n + 1));
                const int n_dis = (int)capability.segments(Side::discharge).size();
                for (int n = 0; n < n_dis; ++n) seed(Side::discharge, -(n + 1));
                break;
              }
              case ModelFamily::d:
              case ModelFamily::d2:
                seed(Side::charge, -1);
                seed(Side::discharge, -1);
                break;
              case ModelFamily::a:
              case ModelFamily::b:
                // tangents bracketing each curved branch
                seed(Side::charge, 70.0);
                seed(Side::charge, 100.0);
                seed(Side::discharge, 0.0);
                seed(Side::discharge, 30.0);
                break;
              default:
                break;
            }
          }
        }
      }
    }
  }

  // sigma_anchor < 0 encodes "segment index -(anchor)-1" for C/D variants
  void cap_row_coeffs(const CapRow& r, const std::vector<double>& x,
                      double& coef_w, double& coef_p, double& coef_soc,
                      double& coef_e) const {
    const CemSystem& sys = problem_.system;
    const StorageResource& st = sys.storage[r.s];
    const double ratio = r.side == Side::charge ? st.charge_ratio : 1.0;
    const double w_hat = std::max(x[ix_.sto_p(r.s)], 1e-3);
    const double e_hat = std::max(x[ix_.sto_e(r.s)], 1e-1);
    const double soc_hat = std::clamp(x[ix_.soc(r.s, r.k, r.t)], 0.0, e_hat);
    const double sigma_hat = 100.0 * soc_hat / e_hat;

    double eta_hat, slope;
    if (r.sigma_anchor < 0.0) {
      const int seg = static_cast<int>(-r.sigma_anchor) - 1;
      const LinearSegment& line = cap_.segments(r.side).empty()
                                      ? d_segment(r.side)
                                      : cap_.segments(r.side)[seg];
      slope = line.slope;
      eta_hat = line.eval(sigma_hat);
    } else {
      const LinearSegment line =
          tangent_line(r.side, r.p_anchor, r.sigma_anchor);
      slope = line.slope;
      eta_hat = line.eval(sigma_hat);
    }
    coef_w = -ratio * eta_hat;
    coef_soc = -ratio * w_hat * slope * 100.0 / e_hat;
    coef_e = ratio * w_hat * slope * sigma_hat / e_hat;
    coef_p = coef_w;
  }

  LinearSegment d_segment(Side side) const {
    LinearSegment line;
    if (side == Side::charge) {
      line.slope = -0.01;
      line.intercept = 1.0;
    } else {
      line.slope = 0.01;
      line.intercept = 0.0;
    }
    return line;
  }

  LinearSegment tangent_line(Side side, double p, double sigma0) const {
    const double eta0 = cap_.eval(side, sigma0, p);
    const double g = cap_.gradient(side, sigma0, p);
    LinearSegment line;
    line.slope = g;
    line.intercept = eta0 - g * sigma0;
    return line;
  }

  void rewrite_cap_rows(lp::LpInstance& lp, const std::vector<double>& x) {
    for (CapRow& r : cap_rows_) {
      if (problem_.ptes_spec.family == ModelFamily::a && r.sigma_anchor >= 0.0)
        r.p_anchor = anchor_p(r, x);
      double cw, cp, csoc, ce;
      cap_row_coeffs(r, x, cw, cp, csoc, ce);
      const int wvar = r.side == Side::charge ? ix_.ch(r.s, r.k, r.t - 1)
                                              : ix_.dis(r.s, r.k, r.t - 1);
      lp.set_row_entries(r.row, {{wvar, 1.0},
                                 {ix_.sto_p(r.s), cp},
                                 {ix_.soc(r.s, r.k, r.t), csoc},
                                 {ix_.sto_e(r.s), ce}});
      lp.set_row_bounds(r.row, -lp::kInf, 0.0);
    }
  }

  double anchor_p(const CapRow& r, const std::vector<double>& x) const {
    const CemSystem& sys = problem_.system;
    const double ratio = r.side == Side::charge
                             ? sys.storage[r.s].charge_ratio
                             : 1.0;
    const double cap_kw = std::max(ratio * x[ix_.sto_p(r.s)], 1e-3);
    const int wvar = r.side == Side::charge ? ix_.ch(r.s, r.k, r.t - 1)
                                            : ix_.dis(r.s, r.k, r.t - 1);
    const double w = x[wvar];
    if (w <= 1e-9 * cap_kw) return r.p_anchor;
    return std::clamp(w / cap_kw, 0.3, 1.0);
  }

  void apply_trust_region(lp::LpInstance& lp, const std::vector<double>& x,
                          double tau) {
    auto box = [&](int var, double scale) {
      const double v = x[var];
      const double lo = std::max(0.0, v * (1.0 - tau));
      const double hi = v * (1.0 + tau) + tau * scale * 0.5;
      lp.set_var_bounds(var, lo, hi);
    };
    for (int v = 0; v < ix_.V; ++v) box(ix_.vre_cap(v), peak_demand_ * 4.0);
    for (int s = 0; s < ix_.S; ++s) {
      box(ix_.sto_p(s), peak_demand_);
      box(ix_.sto_e(s), peak_demand_ * 48.0);
    }
  }

  double sigma_of(const std::vector<double>& x, int s, int k, int t) const {
    const double e = std::max(x[ix_.sto_e(s)], 1e-6);
    return std::clamp(100.0 * x[ix_.soc(s, k, t)] / e, 0.0, 100.0);
  }

  // worst true capability violation as a fraction of the nameplate
  double true_violation(const std::vector<double>& x) const {
    if (problem_.ptes_spec.family == ModelFamily::e) return 0.0;
    double worst = 0.0;
    for (int s = 0; s < ix_.S; ++s) {
      if (!is_ptes(s)) continue;
      const double ratio = problem_.system.storage[s].charge_ratio;
      const double p_cap = x[ix_.sto_p(s)];
      if (p_cap < 1e-6) continue;
      for (int k = 0; k < ix_.K; ++k) {
        for (int t = 1; t <= ix_.T; ++t) {
          const double sigma = sigma_of(x, s, k, t);
          const double w_ch = x[ix_.ch(s, k, t - 1)];
          const double w_dis = x[ix_.dis(s, k, t - 1)];
          const double cap_ch = ratio * p_cap;
          const double p_ch =
              std::clamp(w_ch / std::max(cap_ch, 1e-9), 0.3, 1.0);
          const double p_dis =
              std::clamp(w_dis / std::max(p_cap, 1e-9), 0.3, 1.0);
          const double eta_ch = cap_.charge(sigma, p_ch);
          const double eta_dis = cap_.discharge(sigma, p_dis);
          worst = std::max(worst, (w_ch - eta_ch * cap_ch) / cap_ch);
          worst = std::max(worst, (w_dis - eta_dis * p_cap) / p_cap);
        }
      }
    }
    return worst;
  }

  void add_violated_rows(lp::LpInstance& lp, const std::vector<double>& x) {
    for (int s = 0; s < ix_.S; ++s) {
      if (!is_ptes(s)) continue;
      const double ratio = problem_.system.storage[s].charge_ratio;
      const double p_cap = x[ix_.sto_p(s)];
      if (p_cap < 1e-6) continue;
      for (int k = 0; k < ix_.K; ++k) {
        for (int t = 1; t <= ix_.T; ++t) {
          const double sigma = sigma_of(x, s, k, t);
          const double w_ch = x[ix_.ch(s, k, t - 1)];
          const double w_dis = x[ix_.dis(s, k, t - 1)];
          const double cap_ch = ratio * p_cap;
          const double p_ch =
              std::clamp(w_ch / std::max(cap_ch, 1e-9), 0.3, 1.0);
          const double p_dis =
              std::clamp(w_dis / std::max(p_cap, 1e-9), 0.3, 1.0);
          const double v_ch = (w_ch - cap_.charge(sigma, p_ch) * cap_ch) / cap_ch;
          const double v_dis =
              (w_dis - cap_.discharge(sigma, p_dis) * p_cap) / p_cap;
          const double v = std::max(v_ch, v_dis);
          if (v <= options_.cut_violation_tol) continue;
          CapRow r;
          r.s = s;
          r.k = k;
          r.t = t;
          r.side = v_ch >= v_dis ? Side::charge : Side::discharge;
          r.p_anchor = v_ch >= v_dis ? p_ch : p_dis;
          r.sigma_anchor =
              problem_.ptes_spec.family == ModelFamily::d ||
                      problem_.ptes_spec.family == ModelFamily::d2
                  ? -1.0
                  : sigma;
          if (problem_.ptes_spec.family == ModelFamily::c) {
            // pick the most violated segment at this sigma
            const auto& segs = cap_.segments(r.side);
            int best = 0;
            double best_eta = segs[0].eval(sigma);
            for (int n = 1; n < static_cast<int>(segs.size()); ++n) {
              const double e = segs[n].eval(sigma);
              if (e < best_eta) {
                best_eta = e;
                best = n;
              }
            }
            r.sigma_anchor = -(best + 1);
          }
          const int wvar = r.side == Side::charge ? ix_.ch(s, k, t - 1)
                                                  : ix_.dis(s, k, t - 1);
          r.row = lp.add_row(-lp::kInf, 0.0,
                             {{wvar, 1.0},
                              {ix_.sto_p(s), -1.0},
                              {ix_.soc(s, k, t), -1.0},
                              {ix_.sto_e(s), -1.0}});
          cap_rows_.push_back(r);
          double cw, cp, csoc, ce;
          cap_row_coeffs(cap_rows_.back(), x, cw, cp, csoc, ce);
          lp.set_row_entries(r.row, {{wvar, 1.0},
                                     {ix_.sto_p(s), cp},
                                     {ix_.soc(s, k, t), csoc},
                                     {ix_.sto_e(s), ce}});
        }
      }
    }
  }

  double objective_of(const std::vector<double>& x) const {
    double invest = 0.0, operate = 0.0, nse_cost = 0.0;
    breakdown(x, invest, operate, nse_cost, nullptr);
    return invest + operate + nse_cost;
  }

  void breakdown(const std::vector<double>& x, double& invest, double& operate,
                 double& nse_cost, double* nse_kwh) const {
    const CemSystem& sys = problem_.system;
    invest = operate = nse_cost = 0.0;
    if (nse_kwh) *nse_kwh = 0.0;
    for (int v = 0; v < ix_.V; ++v)
      invest += sys.vre[v].inv_cost_usd_per_kw_yr * x[ix_.vre_cap(v)];
    for (int s = 0; s < ix_.S; ++s) {
      double cost = sys.storage[s].inv_cost_power_usd_per_kw_yr;
      if (is_ptes(s) && problem_.ptes_spec.family == ModelFamily::d2)
        cost /= 2.0 * mean_capability([&](double soc) {
                 return eval_b(soc, Side::discharge, BLoad::full,
                               problem_.ptes_spec.coeffs);
               });
      invest += cost * x[ix_.sto_p(s)] +
                sys.storage[s].inv_cost_energy_usd_per_kwh_yr * x[ix_.sto_e(s)];
    }
    const auto& wt = problem_.periods.weight;
    for (int k = 0; k < ix_.K; ++k) {
      for (int t = 0; t < ix_.T; ++t) {
        for (int v = 0; v < ix_.V; ++v)
          operate += wt[k] * sys.vre[v].var_cost_usd_per_mwh * 1e-3 *
                     x[ix_.gen(v, k, t)];
        for (int s = 0; s < ix_.S; ++s)
          operate += wt[k] * sys.storage[s].var_cost_usd_per_mwh * 1e-3 *
                     x[ix_.dis(s, k, t)];
        for (int z = 0; z < ix_.Z; ++z) {
          nse_cost += wt[k] * sys.voll_usd_per_mwh * 1e-3 * x[ix_.nse(z, k, t)];
          if (nse_kwh) *nse_kwh += wt[k] * x[ix_.nse(z, k, t)];
        }
      }
    }
  }

  void extract(const std::vector<double>& x, CemSolution& sol) const {
    const CemSystem& sys = problem_.system;
    sol.vre_capacity_kw.assign(ix_.V, 0.0);
    for (int v = 0; v < ix_.V; ++v) sol.vre_capacity_kw[v] = x[ix_.vre_cap(v)];
    sol.storage_power_kw.assign(ix_.S, 0.0);
    sol.storage_energy_kwh.assign(ix_.S, 0.0);
    for (int s = 0; s < ix_.S; ++s) {
      sol.storage_power_kw[s] = x[ix_.sto_p(s)];
      sol.storage_energy_kwh[s] = x[ix_.sto_e(s)];
    }
    auto cube = [&](int base, int first, bool include_t0) {
      std::vector<std::vector<std::vector<double>>> out(first);
      const int TT = include_t0 ? ix_.T + 1 : ix_.T;
      for (int a = 0; a < first; ++a) {
        out[a].assign(ix_.K, std::vector<double>(TT, 0.0));
        for (int k = 0; k < ix_.K; ++k)
          for (int t = 0; t < TT; ++t)
            out[a][k][t] = x[base + (a * ix_.K + k) * TT + t];
      }
      return out;
    };
    sol.gen_kw = cube(ix_.gen0, ix_.V, false);
    sol.ch_kw = cube(ix_.ch0, ix_.S, false);
    sol.dis_kw = cube(ix_.dis0, ix_.S, false);
    sol.soc_kwh = cube(ix_.soc0, ix_.S, true);
    sol.week_boundary_kwh.assign(ix_.S, std::vector<double>(kWeeks, 0.0));
    for (int s = 0; s < ix_.S; ++s)
      for (int w = 0; w < kWeeks; ++w)
        sol.week_boundary_kwh[s][w] = x[ix_.q(s, w)];

    breakdown(x, sol.investment_cost_usd, sol.operating_cost_usd,
              sol.nse_cost_usd, &sol.nse_kwh);
    sol.total_cost_usd =
        sol.investment_cost_usd + sol.operating_cost_usd + sol.nse_cost_usd;

    // balance residual of the reported dispatch
    sol.max_balance_residual_kw = 0.0;
    for (int z = 0; z < ix_.Z; ++z)
      for (int k = 0; k < ix_.K; ++k)
        for (int t = 0; t < ix_.T; ++t) {
          double lhs = x[ix_.nse(z, k, t)];
          for (int v = 0; v < ix_.V; ++v)
            if (sys.vre[v].zone == z) lhs += x[ix_.gen(v, k, t)];
          for (int s = 0; s < ix_.S; ++s)
            if (sys.storage[s].zone == z)
              lhs += x[ix_.dis(s, k, t)] - x[ix_.ch(s, k, t)];
          for (int l = 0; l < ix_.L; ++l) {
            if (sys.lines[l].zone_from == z) lhs -= x[ix_.flow(l, k, t)];
            else if (sys.lines[l].zone_to == z) lhs += x[ix_.flow(l, k, t)];
          }
          sol.max_balance_residual_kw =
              std::max(sol.max_balance_residual_kw,
                       std::abs(lhs - sys.demand_kw[z][week_hour(k, t)]));
        }

    // weighted mean PTES SoC
    double soc_sum = 0.0, weight_sum = 0.0;
    for (int s = 0; s < ix_.S; ++s) {
      if (!is_ptes(s)) continue;
      const double e = sol.storage_energy_kwh[s];
      if (e < 1e-6) continue;
      for (int k = 0; k < ix_.K; ++k)
        for (int t = 1; t <= ix_.T; ++t) {
          soc_sum += problem_.periods.weight[k] * 100.0 * sol.soc_kwh[s][k][t] / e;
          weight_sum += problem_.periods.weight[k];
        }
    }
    sol.mean_ptes_soc_pct = weight_sum > 0.0 ? soc_sum / weight_sum : 0.0;
  }

  const CemProblem& problem_;
  CemOptions options_;
  Capability cap_;
  CemIndex ix_;
  std::vector<StorageModel> models_;
  std::vector<CapRow> cap_rows_;
  double peak_demand_ = 0.0;
};

}  // namespace

CemSolution solve_cem(const CemProblem& problem, const CemOptions& options) {
  CemSolver solver(problem, options);
  return solver.run();
}

StitchedOperation stitch_year(const CemProblem& problem, const CemSolution& sol,
                              int storage_index) {
  const int s = storage_index;
  const StorageModel m = storage_model(problem.system.storage[s]);
  StitchedOperation out;
  out.ch_kw.reserve(kWeeks * kWeekHours);
  out.dis_kw.reserve(kWeeks * kWeekHours);
  out.soc_kwh.reserve(kWeeks * kWeekHours);
  for (int w = 0; w < kWeeks; ++w) {
    const int prev = (w + kWeeks - 1) % kWeeks;
    const int k = problem.periods.assignment[w];
    const double q_start = sol.week_boundary_kwh[s][prev];
    const double s0 = sol.soc_kwh[s][k][0];
    for (int t = 1; t <= kWeekHours; ++t) {
      const double decay_t = std::pow(m.decay, t);
      out.ch_kw.push_back(sol.ch_kw[s][k][t - 1]);
      out.dis_kw.push_back(sol.dis_kw[s][k][t - 1]);
      out.soc_kwh.push_back(decay_t * q_start +
                            (sol.soc_kwh[s][k][t] - decay_t * s0));
    }
  }
  return out;
}

CemReport cem_report(const std::vector<std::pair<std::string, CemSolution>>& runs,
                     const CemSystem& system) {
  CemReport report;
  double cost_e = 0.0;
  bool have_e = false;
  for (const auto& [tag, sol] : runs) {
    if (tag == "E") {
      cost_e = sol.total_cost_usd;
      have_e = true;
    }
  }
  if (!have_e && !runs.empty()) cost_e = runs.front().second.total_cost_usd;

  for (const auto& [tag, sol] : runs) {
    CemReportRow row;
    row.model_tag = tag;
    row.total_cost_usd = sol.total_cost_usd;
    row.delta_vs_e_pct =
        cost_e > 0.0 ? 100.0 * (sol.total_cost_usd - cost_e) / cost_e : 0.0;
    row.mean_ptes_soc_pct = sol.mean_ptes_soc_pct;
    report.costs.push_back(row);

    for (std::size_t v = 0; v < system.vre.size(); ++v)
      report.capacities.push_back(
          {tag, system.vre[v].name, sol.vre_capacity_kw[v], 0.0});
    for (std::size_t s = 0; s < system.storage.size(); ++s)
      report.capacities.push_back({tag, system.storage[s].name,
                                   sol.storage_power_kw[s],
                                   sol.storage_energy_kwh[s]});
  }
  return report;
}

}  // namespace ptes
