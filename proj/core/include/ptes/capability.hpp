#pragma once

#include <string>
#include <vector>

namespace ptes {

enum class Side { charge, discharge };

// Fitted coefficients of the part-load dependent capability functions.
// SoC domain is percent [0,100]; p is the part-load fraction.
struct ModelACoefficients {
  double a_ch_slope = 41.4;
  double b_ch_slope = -1.683;
  double b_ch_intercept = 5.351;
  double a_dis_slope = -39.282;
  double a_dis_intercept = 100.0;
  double b_dis_slope = -1.627;
  double b_dis_intercept = 5.373;

  double a_ch(double p) const { return a_ch_slope * p; }
  double b_ch(double p) const { return b_ch_slope * p + b_ch_intercept; }
  double a_dis(double p) const { return a_dis_slope * p + a_dis_intercept; }
  double b_dis(double p) const { return b_dis_slope * p + b_dis_intercept; }
};

// One linear piece eta(soc) = slope * soc + intercept, soc in percent.
struct LinearSegment {
  double slope = 0.0;      // per percent SoC
  double intercept = 0.0;

  double eval(double soc_pct) const { return slope * soc_pct + intercept; }
};

enum class ModelFamily { a, b, c, d, d2, e };
enum class BLoad { full, half };  // B:M / B:H

// Tagged selection of one model variant plus its parameters.
struct CapabilitySpec {
  ModelFamily family = ModelFamily::e;
  BLoad b_load = BLoad::full;
  // Charge-side breakpoints for C variants, strictly increasing in (0,100).
  // Discharge-side breakpoints are the mirror (100 - x).
  std::vector<double> breakpoints;
  ModelACoefficients coeffs;

  std::string tag() const;

  bool is_linear() const {
    return family == ModelFamily::c || family == ModelFamily::d ||
           family == ModelFamily::d2 || family == ModelFamily::e;
  }
  bool is_p_dependent() const { return family == ModelFamily::a; }

  static CapabilitySpec model_a();
  static CapabilitySpec model_b(BLoad load);
  // C variant with explicit charge-side breakpoints.
  static CapabilitySpec model_c(std::vector<double> charge_breakpoints);
  // Uniform breakpoints for n segments, except n == 3 which uses [60, 80].
  static CapabilitySpec model_c_uniform(int segments);
  static CapabilitySpec model_d();
  static CapabilitySpec model_d2();
  static CapabilitySpec model_e();
};

// Parses tags like "A", "B:M", "B:H", "C3", "C10", "C2:75", "D", "D2", "E".
// Throws UnsupportedSpec on anything else.
CapabilitySpec parse_capability_tag(const std::string& tag);

// --- Model A / B point evaluations -----------------------------------------
//
// Charging:    1 for soc < a_ch(p), else 1 - ((soc - a)/(100 - a))^b
// Discharging: 1 for soc >= a_dis(p), else 1 - ((a - soc)/a)^b
//
// soc is percent in [0,100]; p in (0,1]. Values for p < 0.3 extrapolate the
// linear a(p), b(p) fits; *extrapolated is set when provided so callers can
// surface the diagnostic. Results are clamped to [0,1].

double eval_charge_a(double soc_pct, double p, const ModelACoefficients& c,
                     bool* extrapolated = nullptr);
double eval_discharge_a(double soc_pct, double p, const ModelACoefficients& c,
                        bool* extrapolated = nullptr);

// d(eta)/d(soc) in 1/percent; zero on the flat branch, one-sided curved-branch
// value at the knot.
double gradient_a(double soc_pct, double p, const ModelACoefficients& c, Side side);

// Model B evaluations: Model A frozen at p = 1 (B:M) or p = 0.5 (B:H).
double eval_b(double soc_pct, Side side, BLoad load, const ModelACoefficients& c);
double gradient_b(double soc_pct, Side side, BLoad load, const ModelACoefficients& c);

// Model D: charge 1 - soc/100, discharge soc/100. Model E: always 1.
double eval_d(double soc_pct, Side side);
double eval_e();

// Chords of the B:M capability between consecutive anchors
// {0, breakpoints..., 100}. For a concave capability every chord lies on or
// below the curve, so min over segments is a valid under-approximation.
// Throws InvalidBreakpoints unless strictly increasing inside (0,100).
std::vector<LinearSegment> build_segments_c(const std::vector<double>& breakpoints,
                                            Side side,
                                            const ModelACoefficients& c = {});

// min over segments, clamped to [0,1] (the LP feasible bound).
double eval_segments_min(const std::vector<LinearSegment>& segments, double soc_pct);

// Piecewise-by-region evaluation of the same segments (segment n active on
// [anchor_n, anchor_{n+1}]). Equals the min for chords of a concave function;
// kept separate because the integer formulation selects by region.
double eval_segments_piecewise(const std::vector<LinearSegment>& segments,
                               const std::vector<double>& anchors, double soc_pct);

// Anchor SoC list {0, breakpoints..., 100} for a side (mirrored for discharge).
std::vector<double> segment_anchors(const std::vector<double>& charge_breakpoints,
                                    Side side);

// --- Resolved variant -------------------------------------------------------

// One model variant bound to its parameters; the view the dispatch builder
// and solvers consume. p is ignored by every family except A.
class Capability {
 public:
  explicit Capability(CapabilitySpec spec);

  double charge(double soc_pct, double p = 1.0) const;
  double discharge(double soc_pct, double p = 1.0) const;
  double charge_gradient(double soc_pct, double p = 1.0) const;
  double discharge_gradient(double soc_pct, double p = 1.0) const;

  double eval(Side side, double soc_pct, double p = 1.0) const {
    return side == Side::charge ? charge(soc_pct, p) : discharge(soc_pct, p);
  }
  double gradient(Side side, double soc_pct, double p = 1.0) const {
    return side == Side::charge ? charge_gradient(soc_pct, p)
                                : discharge_gradient(soc_pct, p);
  }

  const CapabilitySpec& spec() const { return spec_; }
  const std::vector<LinearSegment>& segments(Side side) const;
  const std::vector<double>& anchors(Side side) const;
  bool saw_extrapolated_p() const { return extrapolated_p_; }

 private:
  CapabilitySpec spec_;
  std::vector<LinearSegment> ch_segments_, dis_segments_;
  std::vector<double> ch_anchors_, dis_anchors_;
  mutable bool extrapolated_p_ = false;
};

}  // namespace ptes
