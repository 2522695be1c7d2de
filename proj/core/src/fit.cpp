#include "ptes/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ptes/errors.hpp"

namespace ptes {

namespace {

double model_eta(double soc, double a, double b, Side side) {
  if (side == Side::charge) {
    if (soc < a) return 1.0;
    if (a >= 100.0) return 1.0;
    return 1.0 - std::pow((soc - a) / (100.0 - a), b);
  }
  if (soc >= a) return 1.0;
  if (a <= 0.0) return 1.0;
  return 1.0 - std::pow((a - soc) / a, b);
}

// Normalized distance into the curved branch, in (0,1] when curved.
double branch_u(double soc, double a, Side side) {
  if (side == Side::charge) return (soc - a) / (100.0 - a);
  return (a - soc) / a;
}

// For a fixed knot, the power b has a closed-form log-space least-squares
// estimate over the curved samples: ln(1 - eta) = b ln(u).
double best_b_for_knot(const std::vector<CapabilitySample>& samples, double a,
                       Side side) {
  double sxx = 0.0, sxy = 0.0;
  for (const CapabilitySample& s : samples) {
    const double u = branch_u(s.soc_pct, a, side);
    if (u <= 1e-9 || u > 1.0) continue;
    const double one_minus = 1.0 - s.eta;
    if (one_minus <= 1e-12) continue;
    const double lu = std::log(u);
    sxx += lu * lu;
    sxy += lu * std::log(one_minus);
  }
  if (sxx <= 0.0) return 1.0;
  return std::max(1.0 + 1e-6, sxy / sxx);  // b > 1 keeps the form concave
}

double sse_for_knot(const std::vector<CapabilitySample>& samples, double a,
                    Side side, double* b_out) {
  const double b = best_b_for_knot(samples, a, side);
  double sse = 0.0;
  for (const CapabilitySample& s : samples) {
    const double r = model_eta(s.soc_pct, a, b, side) - s.eta;
    sse += r * r;
  }
  if (b_out) *b_out = b;
  return sse;
}

LinearFit ols_line(const std::vector<double>& x, const std::vector<double>& y) {
  LinearFit f;
  const std::size_t n = x.size();
  if (n < 2) {
    f.underdetermined = true;
    f.intercept = n == 1 ? y[0] : 0.0;
    return f;
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-14) {
    f.underdetermined = true;  // all levels at the same p
    f.intercept = sy / n;
    return f;
  }
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / n;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = f.slope * x[i] + f.intercept - y[i];
    sse += r * r;
  }
  f.residual_norm = std::sqrt(sse);
  return f;
}

constexpr double kGolden = 0.6180339887498949;

// Golden-section refinement of the knot around the coarse-grid winner.
double refine_knot(const std::vector<CapabilitySample>& samples, Side side,
                   double lo, double hi) {
  double x1 = hi - kGolden * (hi - lo);
  double x2 = lo + kGolden * (hi - lo);
  double f1 = sse_for_knot(samples, x1, side, nullptr);
  double f2 = sse_for_knot(samples, x2, side, nullptr);
  for (int it = 0; it < 80 && hi - lo > 1e-9; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kGolden * (hi - lo);
      f1 = sse_for_knot(samples, x1, side, nullptr);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kGolden * (hi - lo);
      f2 = sse_for_knot(samples, x2, side, nullptr);
    }
  }
  return 0.5 * (lo + hi);
}

LevelFit fit_level(const LevelSamples& level, Side side, const FitOptions& options) {
  LevelFit fit;
  fit.p = level.p;
  const auto& samples = level.samples;

  // No curved branch in the data: knot degenerates to the domain boundary.
  const bool any_curved = std::any_of(samples.begin(), samples.end(),
                                      [](const CapabilitySample& s) {
                                        return s.eta < 1.0 - 1e-9;
                                      });
  if (!any_curved) {
    fit.a = side == Side::charge ? 100.0 : 0.0;
    fit.b = 0.0;
    fit.degenerate = true;
    return fit;
  }

  const double a_min = side == Side::charge ? 0.0 : 1e-6;
  const double a_max = side == Side::charge ? 100.0 - 1e-6 : 100.0;
  double best_a = a_min, best_sse = std::numeric_limits<double>::infinity();
  auto scan = [&](double lo, double hi, double step) {
    for (double a = lo; a <= hi + 1e-12; a += step) {
      const double knot = std::clamp(a, a_min, a_max);
      const double sse = sse_for_knot(samples, knot, side, nullptr);
      if (sse < best_sse) {
        best_sse = sse;
        best_a = knot;
      }
    }
  };
  // SSE(a) has kinks where the knot crosses a sample, so a plain line search
  // can stall; scan coarse, then fine around the winner, then refine.
  scan(a_min, a_max, options.coarse_grid_step);
  const double fine = options.coarse_grid_step / 100.0;
  scan(best_a - 1.2 * options.coarse_grid_step,
       best_a + 1.2 * options.coarse_grid_step, fine);
  fit.a = refine_knot(samples, side, std::max(a_min, best_a - fine),
                      std::min(a_max, best_a + fine));
  if (sse_for_knot(samples, best_a, side, nullptr) <
      sse_for_knot(samples, fit.a, side, nullptr))
    fit.a = best_a;
  fit.residual_norm = std::sqrt(sse_for_knot(samples, fit.a, side, &fit.b));
  return fit;
}

}  // namespace

CapabilityFit fit_capability_params(const std::vector<LevelSamples>& levels,
                                    Side side, const FitOptions& options) {
  if (levels.empty()) throw FitDiverged("no part-load levels to fit");
  CapabilityFit out;
  out.side = side;
  std::vector<double> ps, as, bs;
  for (const LevelSamples& level : levels) {
    if (level.samples.size() < 10)
      throw FitDiverged("need >= 10 samples per part-load level");
    LevelFit fit = fit_level(level, side, options);
    if (!fit.degenerate && fit.residual_norm > options.max_residual_norm)
      throw FitDiverged("level residual norm exceeds bound");
    if (!fit.degenerate) {
      ps.push_back(fit.p);
      as.push_back(fit.a);
      bs.push_back(fit.b);
    }
    out.levels.push_back(fit);
  }
  out.a_of_p = ols_line(ps, as);
  out.b_of_p = ols_line(ps, bs);
  return out;
}

ModelACoefficients coefficients_from_fits(const CapabilityFit& charge_fit,
                                          const CapabilityFit& discharge_fit) {
  ModelACoefficients c;
  c.a_ch_slope = charge_fit.a_of_p.slope;  // a_ch(p) passes through the origin
  c.b_ch_slope = charge_fit.b_of_p.slope;
  c.b_ch_intercept = charge_fit.b_of_p.intercept;
  c.a_dis_slope = discharge_fit.a_of_p.slope;
  c.a_dis_intercept = discharge_fit.a_of_p.intercept;
  c.b_dis_slope = discharge_fit.b_of_p.slope;
  c.b_dis_intercept = discharge_fit.b_of_p.intercept;
  return c;
}

std::vector<LevelSamples> sample_reference_curves(Side side,
                                                  const std::vector<double>& p_levels,
                                                  int samples_per_level,
                                                  const ModelACoefficients& c) {
  std::vector<LevelSamples> out;
  for (double p : p_levels) {
    LevelSamples level;
    level.p = p;
    for (int i = 0; i < samples_per_level; ++i) {
      const double soc = 100.0 * i / (samples_per_level - 1);
      CapabilitySample s;
      s.soc_pct = soc;
      s.eta = side == Side::charge ? eval_charge_a(soc, p, c)
                                   : eval_discharge_a(soc, p, c);
      level.samples.push_back(s);
    }
    out.push_back(std::move(level));
  }
  return out;
}

}  // namespace ptes
