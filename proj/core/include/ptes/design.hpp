#pragma once

#include <functional>

namespace ptes {

constexpr double kCelsiusOffset = 273.15;

inline double celsius_to_kelvin(double c) { return c + kCelsiusOffset; }
inline double kelvin_to_celsius(double k) { return k - kCelsiusOffset; }

// Operational temperatures of the fixed thermodynamic cycle, kelvin.
// Naming: {charge|discharge} phase, {compressor|expander}, {inlet|outlet}.
// The discharge compressor has two outlet taps (out1 feeds the recuperator,
// out2 the cold store).
struct OperatingTemperatures {
  double t_ch_comp_in = 0.0;
  double t_ch_comp_out = 0.0;
  double t_ch_exp_in = 0.0;
  double t_ch_exp_out = 0.0;
  double t_dis_comp_in = 0.0;
  double t_dis_comp_out1 = 0.0;
  double t_dis_comp_out2 = 0.0;
  double t_dis_exp_in = 0.0;
  double t_dis_exp_out = 0.0;

  void validate_or_throw() const;

  // Case-study cycle (values in the configuration table, converted to K).
  static OperatingTemperatures reference();
};

// Packed-bed hot store geometry and media properties.
struct PackedBedSpec {
  double volume_m3 = 0.0;
  double density_kg_per_m3 = 0.0;
  double void_fraction = 0.0;       // in (0,1)
  double cp_kj_per_kg_k = 0.0;
  double delta_t_k = 0.0;           // working temperature span of the store

  void validate_or_throw() const;

  static PackedBedSpec reference();
};

// Electrical/thermal design of one PTES unit. Power in kW electric,
// energy in kWh thermal.
struct PtesDesign {
  double w_ch_max_kw = 0.0;
  double w_dis_max_kw = 0.0;
  double energy_capacity_kwh = 0.0;  // C, thermal
  double alpha_ch = 0.0;             // COP factor, charging
  double alpha_dis = 0.0;            // COP factor, discharging
  double eta_mg = 0.0;               // motor-generator efficiency
  double gamma_per_hour = 0.0;       // hourly leakage fraction
  double cp_fluid_kj_per_kg_k = 0.0; // working fluid c_p

  // Capacity-cost multipliers, != 1 only after a D2 rescale so the
  // capability-weighted cost of capacity stays unchanged.
  double cost_mult_ch = 1.0;
  double cost_mult_dis = 1.0;

  void validate_or_throw() const;

  // 250 kW / 160 kW / 11,021 kWh case-study unit with the tabulated
  // alpha factors, eta_MG = 0.98 and gamma = 0.0002.
  static PtesDesign reference();
};

struct CopFactors {
  double alpha_ch = 0.0;
  double alpha_dis = 0.0;
};

// COP of the fixed cycle: thermal power into/out of the hot store over net
// electrical work of the turbomachinery. cp cancels in the ratio; it is kept
// in the signature so callers pass the fluid they mean.
// Throws DegenerateCycle when either net-work denominator is <= 0.
CopFactors compute_cop(const OperatingTemperatures& temps, double cp_fluid_kj_per_kg_k);

// Thermal energy capacity of the store in kWh: V(1-eps)*rho*cp*dT / 3600.
double storage_energy_capacity(const PackedBedSpec& bed);

// Mean of a capability function over SoC in [0,100] percent, midpoint rule.
double mean_capability(const std::function<double(double)>& eta, int grid_points = 20000);

// Model D2 rescale: multiplies nameplate powers by mean(eta_bm)/mean(eta_d)
// = 2*mean(eta_bm) per side, and sets the cost multipliers to the same
// ratios. Energy capacity, alphas, eta_mg and gamma are untouched.
PtesDesign rescale_design_d2(const PtesDesign& design,
                             const std::function<double(double)>& eta_ch_bm,
                             const std::function<double(double)>& eta_dis_bm,
                             int grid_points = 20000);

// Diagnostic round-trip efficiency eta_mg^2 * alpha_ch / alpha_dis.
double round_trip_efficiency(const PtesDesign& design);

}  // namespace ptes
