#include "ptes/capability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ptes/errors.hpp"

namespace ptes {

namespace {

constexpr double kPExtrapolationFloor = 0.3;  // fitted curves span 30%..100% load

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void check_soc_p(double soc_pct, double p) {
  if (!(soc_pct >= 0.0 && soc_pct <= 100.0)) {
    std::ostringstream os;
    os << "soc " << soc_pct << " outside [0,100] percent";
    throw DomainError(os.str());
  }
  if (!(p > 0.0) || p > 1.0 + 1e-9)
    throw DomainError("part-load p must be in (0,1]");
}

}  // namespace

double eval_charge_a(double soc_pct, double p, const ModelACoefficients& c,
                     bool* extrapolated) {
  check_soc_p(soc_pct, p);
  if (extrapolated && p < kPExtrapolationFloor) *extrapolated = true;
  const double a = c.a_ch(p);
  if (soc_pct < a) return 1.0;
  const double b = c.b_ch(p);
  return clamp01(1.0 - std::pow((soc_pct - a) / (100.0 - a), b));
}

double eval_discharge_a(double soc_pct, double p, const ModelACoefficients& c,
                        bool* extrapolated) {
  check_soc_p(soc_pct, p);
  if (extrapolated && p < kPExtrapolationFloor) *extrapolated = true;
  const double a = c.a_dis(p);
  if (soc_pct >= a) return 1.0;
  const double b = c.b_dis(p);
  return clamp01(1.0 - std::pow((a - soc_pct) / a, b));
}

double gradient_a(double soc_pct, double p, const ModelACoefficients& c, Side side) {
  check_soc_p(soc_pct, p);
  if (side == Side::charge) {
    const double a = c.a_ch(p);
    if (soc_pct < a) return 0.0;
    const double b = c.b_ch(p);
    const double u = (soc_pct - a) / (100.0 - a);
    return -b / (100.0 - a) * std::pow(u, b - 1.0);
  }
  const double a = c.a_dis(p);
  if (soc_pct >= a) return 0.0;
  const double b = c.b_dis(p);
  const double u = (a - soc_pct) / a;
  return b / a * std::pow(u, b - 1.0);
}

double eval_b(double soc_pct, Side side, BLoad load, const ModelACoefficients& c) {
  const double p = load == BLoad::full ? 1.0 : 0.5;
  return side == Side::charge ? eval_charge_a(soc_pct, p, c)
                              : eval_discharge_a(soc_pct, p, c);
}

double gradient_b(double soc_pct, Side side, BLoad load, const ModelACoefficients& c) {
  const double p = load == BLoad::full ? 1.0 : 0.5;
  return gradient_a(soc_pct, p, c, side);
}

double eval_d(double soc_pct, Side side) {
  check_soc_p(soc_pct, 1.0);
  return side == Side::charge ? 1.0 - soc_pct / 100.0 : soc_pct / 100.0;
}

double eval_e() { return 1.0; }

std::vector<double> segment_anchors(const std::vector<double>& charge_breakpoints,
                                    Side side) {
  std::vector<double> bps = charge_breakpoints;
  if (side == Side::discharge) {
    for (double& x : bps) x = 100.0 - x;
    std::reverse(bps.begin(), bps.end());
  }
  std::vector<double> anchors;
  anchors.reserve(bps.size() + 2);
  anchors.push_back(0.0);
  anchors.insert(anchors.end(), bps.begin(), bps.end());
  anchors.push_back(100.0);
  return anchors;
}

std::vector<LinearSegment> build_segments_c(const std::vector<double>& breakpoints,
                                            Side side, const ModelACoefficients& c) {
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    const double x = breakpoints[i];
    if (!(x > 0.0 && x < 100.0))
      throw InvalidBreakpoints("breakpoint outside (0,100)");
    if (i > 0 && !(x > breakpoints[i - 1]))
      throw InvalidBreakpoints("breakpoints must be strictly increasing");
  }
  const std::vector<double> anchors = segment_anchors(breakpoints, side);
  std::vector<LinearSegment> segments;
  segments.reserve(anchors.size() - 1);
  for (std::size_t n = 0; n + 1 < anchors.size(); ++n) {
    const double s0 = anchors[n], s1 = anchors[n + 1];
    const double e0 = eval_b(s0, side, BLoad::full, c);
    const double e1 = eval_b(s1, side, BLoad::full, c);
    LinearSegment seg;
    seg.slope = (e1 - e0) / (s1 - s0);
    seg.intercept = e0 - seg.slope * s0;
    segments.push_back(seg);
  }
  return segments;
}

double eval_segments_min(const std::vector<LinearSegment>& segments, double soc_pct) {
  double m = std::numeric_limits<double>::infinity();
  for (const LinearSegment& s : segments) m = std::min(m, s.eval(soc_pct));
  return clamp01(m);
}

double eval_segments_piecewise(const std::vector<LinearSegment>& segments,
                               const std::vector<double>& anchors, double soc_pct) {
  if (segments.empty() || anchors.size() != segments.size() + 1)
    throw InvalidBreakpoints("segments and anchors are inconsistent");
  std::size_t n = 0;
  while (n + 1 < segments.size() && soc_pct >= anchors[n + 1]) ++n;
  return clamp01(segments[n].eval(soc_pct));
}

// --- CapabilitySpec ----------------------------------------------------------

CapabilitySpec CapabilitySpec::model_a() {
  CapabilitySpec s;
  s.family = ModelFamily::a;
  return s;
}

CapabilitySpec CapabilitySpec::model_b(BLoad load) {
  CapabilitySpec s;
  s.family = ModelFamily::b;
  s.b_load = load;
  return s;
}

CapabilitySpec CapabilitySpec::model_c(std::vector<double> charge_breakpoints) {
  CapabilitySpec s;
  s.family = ModelFamily::c;
  s.breakpoints = std::move(charge_breakpoints);
  return s;
}

CapabilitySpec CapabilitySpec::model_c_uniform(int segments) {
  if (segments < 1) throw UnsupportedSpec("C variant needs >= 1 segment");
  if (segments == 3) return model_c({60.0, 80.0});  // the case-study C3
  std::vector<double> bps;
  for (int i = 1; i < segments; ++i) bps.push_back(100.0 * i / segments);
  return model_c(std::move(bps));
}

CapabilitySpec CapabilitySpec::model_d() {
  CapabilitySpec s;
  s.family = ModelFamily::d;
  return s;
}

CapabilitySpec CapabilitySpec::model_d2() {
  CapabilitySpec s;
  s.family = ModelFamily::d2;
  return s;
}

CapabilitySpec CapabilitySpec::model_e() {
  CapabilitySpec s;
  s.family = ModelFamily::e;
  return s;
}

std::string CapabilitySpec::tag() const {
  switch (family) {
    case ModelFamily::a: return "A";
    case ModelFamily::b: return b_load == BLoad::full ? "B:M" : "B:H";
    case ModelFamily::d: return "D";
    case ModelFamily::d2: return "D2";
    case ModelFamily::e: return "E";
    case ModelFamily::c: break;
  }
  const int n = static_cast<int>(breakpoints.size()) + 1;
  std::ostringstream os;
  if (n == 2) {
    os << "C2:" << breakpoints[0];
  } else {
    os << "C" << n;
    // non-standard breakpoints get spelled out
    CapabilitySpec uniform = model_c_uniform(n);
    if (uniform.breakpoints != breakpoints) {
      os << ":";
      for (std::size_t i = 0; i < breakpoints.size(); ++i)
        os << (i ? "," : "") << breakpoints[i];
    }
  }
  return os.str();
}

CapabilitySpec parse_capability_tag(const std::string& tag) {
  if (tag == "A") return CapabilitySpec::model_a();
  if (tag == "B:M" || tag == "B") return CapabilitySpec::model_b(BLoad::full);
  if (tag == "B:H") return CapabilitySpec::model_b(BLoad::half);
  if (tag == "D") return CapabilitySpec::model_d();
  if (tag == "D2") return CapabilitySpec::model_d2();
  if (tag == "E") return CapabilitySpec::model_e();
  if (!tag.empty() && tag[0] == 'C') {
    const std::string body = tag.substr(1);
    const std::size_t colon = body.find(':');
    try {
      const int n = std::stoi(body.substr(0, colon == std::string::npos
                                                  ? body.size()
                                                  : colon));
      if (colon == std::string::npos) return CapabilitySpec::model_c_uniform(n);
      // explicit breakpoints, comma separated
      std::vector<double> bps;
      std::istringstream is(body.substr(colon + 1));
      std::string item;
      while (std::getline(is, item, ',')) bps.push_back(std::stod(item));
      if (static_cast<int>(bps.size()) != n - 1)
        throw UnsupportedSpec("C" + std::to_string(n) + " needs " +
                              std::to_string(n - 1) + " breakpoints: " + tag);
      return CapabilitySpec::model_c(std::move(bps));
    } catch (const std::invalid_argument&) {
      // falls through to the UnsupportedSpec below
    } catch (const std::out_of_range&) {
    }
  }
  throw UnsupportedSpec("unknown capability tag: " + tag);
}

// --- Capability --------------------------------------------------------------

Capability::Capability(CapabilitySpec spec) : spec_(std::move(spec)) {
  if (spec_.family == ModelFamily::c) {
    // no breakpoints is the one-segment chord (the integer formulation's N=1)
    ch_segments_ = build_segments_c(spec_.breakpoints, Side::charge, spec_.coeffs);
    dis_segments_ = build_segments_c(spec_.breakpoints, Side::discharge, spec_.coeffs);
    ch_anchors_ = segment_anchors(spec_.breakpoints, Side::charge);
    dis_anchors_ = segment_anchors(spec_.breakpoints, Side::discharge);
  }
}

const std::vector<LinearSegment>& Capability::segments(Side side) const {
  return side == Side::charge ? ch_segments_ : dis_segments_;
}

const std::vector<double>& Capability::anchors(Side side) const {
  return side == Side::charge ? ch_anchors_ : dis_anchors_;
}

double Capability::charge(double soc_pct, double p) const {
  switch (spec_.family) {
    case ModelFamily::a: {
      bool ex = false;
      const double v = eval_charge_a(soc_pct, p, spec_.coeffs, &ex);
      if (ex) extrapolated_p_ = true;
      return v;
    }
    case ModelFamily::b:
      return eval_b(soc_pct, Side::charge, spec_.b_load, spec_.coeffs);
    case ModelFamily::c:
      return eval_segments_min(ch_segments_, soc_pct);
    case ModelFamily::d:
    case ModelFamily::d2:
      return eval_d(soc_pct, Side::charge);
    case ModelFamily::e:
      return eval_e();
  }
  return 1.0;
}

double Capability::discharge(double soc_pct, double p) const {
  switch (spec_.family) {
    case ModelFamily::a: {
      bool ex = false;
      const double v = eval_discharge_a(soc_pct, p, spec_.coeffs, &ex);
      if (ex) extrapolated_p_ = true;
      return v;
    }
    case ModelFamily::b:
      return eval_b(soc_pct, Side::discharge, spec_.b_load, spec_.coeffs);
    case ModelFamily::c:
      return eval_segments_min(dis_segments_, soc_pct);
    case ModelFamily::d:
    case ModelFamily::d2:
      return eval_d(soc_pct, Side::discharge);
    case ModelFamily::e:
      return eval_e();
  }
  return 1.0;
}

double Capability::charge_gradient(double soc_pct, double p) const {
  switch (spec_.family) {
    case ModelFamily::a:
      return gradient_a(soc_pct, p, spec_.coeffs, Side::charge);
    case ModelFamily::b:
      return gradient_b(soc_pct, Side::charge, spec_.b_load, spec_.coeffs);
    case ModelFamily::c: {
      // slope of the active (minimal) segment, smallest index on ties
      double best = std::numeric_limits<double>::infinity();
      double slope = 0.0;
      for (const LinearSegment& s : ch_segments_) {
        const double v = s.eval(soc_pct);
        if (v < best - 1e-15) {
          best = v;
          slope = s.slope;
        }
      }
      return slope;
    }
    case ModelFamily::d:
    case ModelFamily::d2:
      return -0.01;
    case ModelFamily::e:
      return 0.0;
  }
  return 0.0;
}

double Capability::discharge_gradient(double soc_pct, double p) const {
  switch (spec_.family) {
    case ModelFamily::a:
      return gradient_a(soc_pct, p, spec_.coeffs, Side::discharge);
    case ModelFamily::b:
      return gradient_b(soc_pct, Side::discharge, spec_.b_load, spec_.coeffs);
    case ModelFamily::c: {
      double best = std::numeric_limits<double>::infinity();
      double slope = 0.0;
      for (const LinearSegment& s : dis_segments_) {
        const double v = s.eval(soc_pct);
        if (v < best - 1e-15) {
          best = v;
          slope = s.slope;
        }
      }
      return slope;
    }
    case ModelFamily::d:
    case ModelFamily::d2:
      return 0.01;
    case ModelFamily::e:
      return 0.0;
  }
  return 0.0;
}

}  // namespace ptes
