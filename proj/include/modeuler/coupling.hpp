#pragma once

#include <vector>

#include "modeuler/constants.hpp"
#include "modeuler/scheme.hpp"

namespace modeuler {

/// Per-step Monte Carlo summary of a synchronous coupling run.
struct CouplingTrace {
  std::vector<double> mean_sq_dist, se_sq_dist, mean_rho, se_rho, envelope;
  double delta = 0, sigma = 0;
  long pairs = 0;
  std::string scheme;
  double divergence_fraction = 0;

  long length() const { return static_cast<long>(mean_sq_dist.size()); }  // n_steps + 1
};

/// One synchronous step: both chains consume the identical noise vector.
std::pair<StateVec, StateVec> couple_step(const SchemeSpec& spec, const StateVec& x,
                                          const StateVec& y, const StateVec& noise);

/// M coupled pairs started at (x0, y0); noise drawn at (pair, step)
/// coordinates. Internally the pair is propagated as (x, y - x) with the
/// cancellation-safe difference update, which is the same coupling in exact
/// arithmetic. Diverged pairs are excluded; a fraction above 1% fails the run.
/// The envelope column is (1 - (lambda1 ^ lambda2) delta)^n rho(x0, y0) when
/// contraction constants are supplied, NaN otherwise.
CouplingTrace run_coupling(const SchemeSpec& spec, const StateVec& x0, const StateVec& y0,
                           long n_steps, long pairs, const RngStream& stream,
                           const ContractionConstants* cc = nullptr);

struct CheckResult {
  bool pass = false;
  double slack = 0;  // bound minus value; negative means violated
};

/// One-step squared-displacement bound: Lambda(z1,z2) <= (1+C_R delta)^2 |z1-z2|^2
/// inside the R-ball, Lambda <= (1-K_R* delta)|z1-z2|^2 otherwise.
CheckResult lambda_bound_check(const SchemeConstants& sc, const SchemeSpec& spec,
                               const StateVec& z1, const StateVec& z2);

/// Lyapunov drift: E V(xhat + sigma W_delta) <= V(x) - (3C_R 1_{|x|<=R}
/// - (3K_R*/8) 1_{|x|>R}) sigma^2 delta, expectation by Gauss-Hermite
/// quadrature (d <= 2).
CheckResult lyapunov_drift_check(const SchemeSpec& spec, const SchemeConstants& sc,
                                 const ContractionConstants& cc, const StateVec& x, int nodes);

/// Assembled one-step quasi-metric contraction:
/// Gamma(z1,z2) <= (1 - (lambda1 ^ lambda2) delta) rho(z1,z2).
CheckResult gamma_bound_check(const SchemeSpec& spec, const SchemeConstants& sc,
                              const ContractionConstants& cc, const StateVec& z1,
                              const StateVec& z2);

struct DecayFit {
  double rate = 0;       // per unit time, positive for decay
  double intercept = 0;  // log-scale
  double r2 = 0;
  long points_used = 0;
};

struct InsufficientData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Log-linear least squares of the trace column against t = n delta. Points
/// smaller than 10x their standard error are excluded; needs >= 3 survivors.
DecayFit fit_decay_rate(const CouplingTrace& trace, bool use_rho = false);

}  // namespace modeuler
