#pragma once

#include <vector>

#include "ptes/capability.hpp"

namespace ptes {

// One sampled point of a capability curve at a given part-load level.
struct CapabilitySample {
  double soc_pct = 0.0;
  double eta = 0.0;
};

struct LevelSamples {
  double p = 1.0;
  std::vector<CapabilitySample> samples;
};

// Per-level fit of the knot/power form.
struct LevelFit {
  double p = 0.0;
  double a = 0.0;            // knot location, percent
  double b = 0.0;            // power
  double residual_norm = 0.0;  // sqrt(SSE) in eta units
  bool degenerate = false;     // no curved branch in the data (a at boundary)
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_norm = 0.0;
  bool underdetermined = false;  // fewer than two levels
};

struct CapabilityFit {
  Side side = Side::charge;
  std::vector<LevelFit> levels;
  LinearFit a_of_p;
  LinearFit b_of_p;
};

struct FitOptions {
  // FitDiverged when any level's residual norm exceeds this bound.
  double max_residual_norm = 0.5;
  // knot search resolution before golden refinement
  double coarse_grid_step = 0.5;
};

// Least-squares fit of the capability functional form per part-load level,
// then ordinary least squares of the knot a and power b against p.
// Requires at least one level with >= 10 samples; throws FitDiverged when a
// level's residual exceeds options.max_residual_norm.
CapabilityFit fit_capability_params(const std::vector<LevelSamples>& levels,
                                    Side side, const FitOptions& options = {});

// Assembles Model A coefficients from a charge- and a discharge-side fit.
ModelACoefficients coefficients_from_fits(const CapabilityFit& charge_fit,
                                          const CapabilityFit& discharge_fit);

// Noiseless samples of the reference curves, for self-tests and the fit
// pipeline's round-trip mode.
std::vector<LevelSamples> sample_reference_curves(Side side,
                                                  const std::vector<double>& p_levels,
                                                  int samples_per_level,
                                                  const ModelACoefficients& c = {});

}  // namespace ptes
