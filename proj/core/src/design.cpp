#include "ptes/design.hpp"

#include <cmath>
#include <string>

#include "ptes/errors.hpp"

namespace ptes {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(std::string("design: ") + what);
}

}  // namespace

void OperatingTemperatures::validate_or_throw() const {
  const double all[] = {t_ch_comp_in,  t_ch_comp_out,  t_ch_exp_in,
                        t_ch_exp_out,  t_dis_comp_in,  t_dis_comp_out1,
                        t_dis_comp_out2, t_dis_exp_in, t_dis_exp_out};
  for (double t : all) require(t > 0.0, "temperatures must be > 0 K");
  require(t_ch_comp_out > t_ch_comp_in, "charge compressor must heat the fluid");
  require(t_dis_exp_in > t_dis_exp_out, "discharge expander must cool the fluid");
}

OperatingTemperatures OperatingTemperatures::reference() {
  OperatingTemperatures t;
  t.t_ch_comp_out = celsius_to_kelvin(590.0);
  t.t_dis_exp_in = celsius_to_kelvin(590.0);
  t.t_ch_exp_out = celsius_to_kelvin(-100.0);
  t.t_dis_comp_in = celsius_to_kelvin(-100.0);
  t.t_ch_comp_in = celsius_to_kelvin(166.0);
  t.t_dis_exp_out = celsius_to_kelvin(166.0);
  t.t_ch_exp_in = celsius_to_kelvin(25.0);
  t.t_dis_comp_out2 = celsius_to_kelvin(25.0);
  t.t_dis_comp_out1 = celsius_to_kelvin(124.0);
  return t;
}

void PackedBedSpec::validate_or_throw() const {
  require(volume_m3 > 0.0, "bed volume must be positive");
  require(density_kg_per_m3 > 0.0, "bed density must be positive");
  require(void_fraction > 0.0 && void_fraction < 1.0, "void fraction must be in (0,1)");
  require(cp_kj_per_kg_k > 0.0, "bed cp must be positive");
  require(delta_t_k >= 0.0, "bed delta T must be >= 0");
}

PackedBedSpec PackedBedSpec::reference() {
  PackedBedSpec b;
  b.volume_m3 = 30.0;
  b.density_kg_per_m3 = 4800.0;
  b.void_fraction = 0.425;
  b.cp_kj_per_kg_k = 0.848;
  b.delta_t_k = 565.0;  // 590 C hot face down to the 25 C return
  return b;
}

void PtesDesign::validate_or_throw() const {
  require(w_ch_max_kw > 0.0, "charge capacity must be positive");
  require(w_dis_max_kw > 0.0, "discharge capacity must be positive");
  require(energy_capacity_kwh > 0.0, "energy capacity must be positive");
  require(alpha_ch > 0.0 && alpha_dis > 0.0, "COP factors must be positive");
  require(eta_mg > 0.0 && eta_mg <= 1.0, "eta_mg must be in (0,1]");
  require(gamma_per_hour >= 0.0 && gamma_per_hour < 1.0, "gamma must be in [0,1)");
}

PtesDesign PtesDesign::reference() {
  PtesDesign d;
  d.w_ch_max_kw = 250.0;
  d.w_dis_max_kw = 160.0;
  d.energy_capacity_kwh = 11021.0;
  d.alpha_ch = 1.89;
  d.alpha_dis = 2.83;
  d.eta_mg = 0.98;
  d.gamma_per_hour = 0.0002;  // 0.5% per day
  d.cp_fluid_kj_per_kg_k = 0.5203;
  return d;
}

CopFactors compute_cop(const OperatingTemperatures& t, double cp) {
  require(cp > 0.0, "cp must be positive");
  const double q_ch = cp * (t.t_ch_comp_out - t.t_ch_exp_in);
  const double w_ch = cp * (t.t_ch_comp_out - t.t_ch_comp_in) -
                      cp * (t.t_ch_exp_in - t.t_ch_exp_out);
  const double q_dis = cp * (t.t_dis_exp_in - t.t_dis_comp_out2);
  const double w_dis = cp * (t.t_dis_exp_in - t.t_dis_exp_out) -
                       cp * (t.t_dis_comp_out1 - t.t_dis_comp_in);
  if (w_ch <= 0.0)
    throw DegenerateCycle("charging cycle has non-positive net work");
  if (w_dis <= 0.0)
    throw DegenerateCycle("discharging cycle has non-positive net work");
  return CopFactors{q_ch / w_ch, q_dis / w_dis};
}

double storage_energy_capacity(const PackedBedSpec& bed) {
  bed.validate_or_throw();
  const double mass_kg = bed.volume_m3 * (1.0 - bed.void_fraction) * bed.density_kg_per_m3;
  const double energy_kj = mass_kg * bed.cp_kj_per_kg_k * bed.delta_t_k;
  return energy_kj / 3600.0;
}

double mean_capability(const std::function<double(double)>& eta, int grid_points) {
  require(grid_points >= 1, "grid must be non-empty");
  const double h = 100.0 / grid_points;
  double sum = 0.0;
  for (int i = 0; i < grid_points; ++i) sum += eta((i + 0.5) * h);
  return sum / grid_points;
}

PtesDesign rescale_design_d2(const PtesDesign& design,
                             const std::function<double(double)>& eta_ch_bm,
                             const std::function<double(double)>& eta_dis_bm,
                             int grid_points) {
  // eta_D averages to exactly 1/2 on [0,100] for both sides.
  const double ratio_ch = mean_capability(eta_ch_bm, grid_points) / 0.5;
  const double ratio_dis = mean_capability(eta_dis_bm, grid_points) / 0.5;
  PtesDesign out = design;
  out.w_ch_max_kw = design.w_ch_max_kw * ratio_ch;
  out.w_dis_max_kw = design.w_dis_max_kw * ratio_dis;
  out.cost_mult_ch = ratio_ch;
  out.cost_mult_dis = ratio_dis;
  return out;
}

double round_trip_efficiency(const PtesDesign& design) {
  design.validate_or_throw();
  return design.eta_mg * design.eta_mg * design.alpha_ch / design.alpha_dis;
}

}  // namespace ptes
