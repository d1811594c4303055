#pragma once

#include <optional>
#include <vector>

#include "frontlab/residual.hpp"

namespace frontlab {

enum class Scheme { RK4, IMEX_CN };

/// Direct simulation on [-L, L] with reflecting ends, started from u_- on
/// [-L, -L + step_width] and u_+ elsewhere.
struct SimConfig {
  double domain_L = 200.0;
  double dx = 0.2;
  double dt = 0.0;  // 0: largest step allowed by the stability bound
  double t_final = 100.0;
  std::optional<double> tracker_level;  // default: midpoint of the anchor component
  Scheme scheme = Scheme::RK4;
  int order = 4;  // finite-difference order of the spatial stencils
  double step_width = 20.0;
};

struct SpeedSample {
  double t;
  double X;
  double c;
};

struct SpeedResult {
  std::vector<SpeedSample> series;
  double c_final = 0.0;
  double dt = 0.0;
};

/// Largest explicit step allowed: 0.2 dx^{2m} / |P_{2m}|.
double cfl_limit(const ModelSpec& model, const ParamMap& params, double dx);

/// Throws OracleScope (elliptic components), CFLViolation, FrontExitedDomain.
SpeedResult measure_speed(const ModelSpec& model, const ParamMap& params, const SimConfig& sim);

struct PowerLawFit {
  double exponent = 0.0;   // p in |c - c_ref| ~ A t^{-p}
  double amplitude = 0.0;  // A
  double sign = 0.0;       // mean sign of c - c_ref over the window
  int samples = 0;
};

/// Least-squares fit of log|c(t) - c_ref| against log t for t in [t_lo, t_hi].
PowerLawFit fit_power_law(const std::vector<SpeedSample>& series, double c_ref, double t_lo, double t_hi);

/// Rightmost eigenvalues (by real part) of the linearization about s,
/// conjugated with the weight exp(eta s(x)), eta = -nu_lin, s(x) = 0 for
/// x <= -1 and x for x >= 1.  Throws OracleScope for elliptic components.
std::vector<cplx> edge_spectrum(const FrontProblem& problem, const FrontState& s, int n_eigs, double nu_weight);

/// The smooth weight profile s(x) and its derivative.
double weight_profile(double x);

}  // namespace frontlab
