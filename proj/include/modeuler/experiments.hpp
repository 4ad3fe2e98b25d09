#pragma once

#include <optional>
#include <vector>

#include "modeuler/cloud.hpp"
#include "modeuler/constants.hpp"
#include "modeuler/coupling.hpp"
#include "modeuler/scheme.hpp"

namespace modeuler {

enum class ObservableKind { coordinate, radial_power, polynomial };

/// Observable f with polynomial growth; growth_exponent is the weight
/// exponent of the |f(x)-f(y)| <= ||f|| |x-y| (1+|x|^rho+|y|^rho) class.
struct Observable {
  ObservableKind kind = ObservableKind::radial_power;
  int index = 0;                // coordinate
  double power = 2.0;           // radial_power
  std::vector<double> coeffs;   // polynomial: f(x) = sum_k c_k |x|^{2k}
  double growth_exponent = 1.0;
  double norm_estimate = 0.0;
};

double eval_observable(const Observable& f, const StateVec& x);

/// Empirical ||f|| over sampled pairs; also validates the growth class.
double estimate_observable_norm(const Observable& f, int d, long pairs, double radius,
                                const RngStream& stream);

/// Long-run sampler: burn_in steps, then every thinning-th state until
/// n_samples are recorded. Single chain at the given trajectory index.
SampleCloud sample_invariant(const SchemeSpec& spec, const StateVec& x0, long burn_in,
                             long n_samples, long thinning, const RngStream& stream,
                             std::uint64_t trajectory = 0);

struct RateScanPoint {
  double delta = 0;
  double w2 = 0;
  double se = 0;
  bool excluded = false;  // diverged run
};

struct RateScanResult {
  std::vector<RateScanPoint> points;
  double delta_ref = 0;
  double slope = 0;
  double slope_halfwidth = 0;  // 1.96 sigma from the weighted fit
  double expected_slope = 0;
  bool pass = false;
  double burn_time = 0;
};

struct RateScanParams {
  std::vector<double> delta_grid;  // strictly decreasing
  double delta_ref = 0;            // <= min(grid)/8
  long n_samples = 200000;
  double thin_time = 0.05;        // target time spacing between kept samples
  double ref_thin_time = 0.25;    // denser decorrelation for the reference
  long bootstrap = 32;
  double burn_time = 0;           // 0 = auto from a coupling decay probe
  double slope_tolerance = 0.3;
};

/// Invariant-measure step-size scan: per-delta cloud vs a much finer
/// reference cloud (independent seeds, common burn-in policy), exact W2,
/// weighted log-log slope against the expected exponent.
RateScanResult rate_scan_invariant(const SchemeSpec& base, const RateScanParams& params,
                                   const RngStream& stream);

struct StrongErrorPoint {
  double delta = 0;
  double mse = 0;  // E |X_T^delta - X_T^ref|^2
  double se = 0;
  bool excluded = false;
};

struct StrongErrorResult {
  std::vector<StrongErrorPoint> points;
  double delta_ref = 0;
  double slope = 0;           // of (1/2) log mse against log delta
  double slope_halfwidth = 0;
  double expected_slope = 0;  // 1 ^ beta
  bool pass = false;
};

/// Finite-horizon strong error under common random numbers: the reference
/// runs on the nested fine grid, every coarse resolution consumes the summed
/// fine increments of the same Brownian path.
StrongErrorResult strong_error_finite_horizon(const SchemeSpec& base, double T,
                                              const std::vector<double>& delta_grid,
                                              double delta_ref, long paths,
                                              const RngStream& stream,
                                              double slope_tolerance = 0.3);

struct LlnCheckpoint {
  long k = 0;
  double average = 0;
  double error = 0;     // |S_k - reference|
  double envelope = 0;  // C (k^{-1/2+eps} delta^{-1/2} + delta^g* d^{(l*+rho)/2})
};

struct LlnResult {
  std::vector<LlnCheckpoint> checkpoints;
  double reference = 0;
};

/// Running averages S_k = (1/k) sum_{j<k} f(X_j delta) at logarithmically
/// spaced k. The envelope uses caller-supplied C and eps; it is reported,
/// never asserted.
LlnResult lln_run(const SchemeSpec& spec, const Observable& f, const StateVec& x0, long n,
                  double reference_value, double envelope_C, double envelope_eps,
                  const RngStream& stream, std::uint64_t trajectory = 0);

struct MomentCheckpoint {
  long n = 0;
  double t = 0;
  double m2 = 0, se2 = 0;
  double m4 = 0, se4 = 0;
  double bound2 = 0;   // finite-horizon second-moment envelope
  double margin = 0;   // bound2 + 3 se2 - m2
  bool pass = false;
};

struct MomentAuditResult {
  std::vector<MomentCheckpoint> checkpoints;
  bool all_pass = false;
  bool diverged = false;
  long diverged_step = -1;
};

/// Empirical second/fourth moments against the closed-form envelope; any
/// divergence is recorded (with its step index) as an audit failure.
MomentAuditResult moment_audit(const SchemeSpec& spec, const StateVec& x0, long horizon_steps,
                               long paths, double c_star, double c_upper,
                               long checkpoint_every, const RngStream& stream);

/// Weighted least squares y = a + b x with 1.96-sigma halfwidth on b.
struct LineFit {
  double slope = 0, intercept = 0, slope_halfwidth = 0;
};
LineFit weighted_line_fit(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& w);

}  // namespace modeuler
